#include "onebit/obmnet.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "onebit/errors.hpp"
#include "onebit/ml_detect.hpp"

namespace onebit {

namespace {

RVector sigmoid_of_negated(const RVector& gx) {
  return gx.unaryExpr([](double t) { return sigmoid(-t); });
}

int users_of(const RMatrix& g) { return static_cast<int>(g.cols() / 2); }

}  // namespace

RVector obmnet_forward(const RMatrix& g, std::span<const double> alphas) {
  RVector x = RVector::Zero(g.cols());
  for (double alpha : alphas) {
    const RVector s = sigmoid_of_negated(g * x);
    x.noalias() += alpha * (g.transpose() * s);
  }
  return x;
}

RVector normalize_output(const RVector& x, int users) {
  const double norm = x.norm();
  if (norm < kDegenerateNorm) return x;
  return (std::sqrt(static_cast<double>(users)) / norm) * x;
}

double reconstruction_loss(const RVector& estimate, const RVector& target) {
  if (estimate.size() != target.size()) {
    throw std::invalid_argument("reconstruction_loss: length mismatch");
  }
  return (estimate - target).squaredNorm();
}

LossGradient loss_and_grad_alphas(const RMatrix& g,
                                  std::span<const double> alphas,
                                  const RVector& target) {
  const std::size_t layers = alphas.size();
  const int users = users_of(g);

  // forward, keeping the sigmoid activations of every layer
  std::vector<RVector> act(layers);
  RVector x = RVector::Zero(g.cols());
  for (std::size_t l = 0; l < layers; ++l) {
    act[l] = sigmoid_of_negated(g * x);
    x.noalias() += alphas[l] * (g.transpose() * act[l]);
  }

  LossGradient out;
  out.grad.assign(layers, 0.0);

  // loss and its adjoint with respect to x^(L)
  RVector adj;
  const double norm = x.norm();
  if (norm < kDegenerateNorm) {
    out.loss = (x - target).squaredNorm();
    adj = 2.0 * (x - target);
  } else {
    const double sk = std::sqrt(static_cast<double>(users));
    const RVector u = x / norm;
    const RVector xt = sk * u;
    out.loss = (xt - target).squaredNorm();
    const RVector d = 2.0 * (xt - target);
    // Jacobian of sqrt(K) x/||x|| is (sqrt(K)/||x||)(I - u u^T)
    adj = (sk / norm) * (d - u * u.dot(d));
  }

  // reverse sweep: x^(l) = x^(l-1) + alpha_l G^T s_l, s_l = sigma(-G x^(l-1))
  for (std::size_t l = layers; l-- > 0;) {
    const RVector& s = act[l];
    const RVector gts = g.transpose() * s;
    out.grad[l] = adj.dot(gts);
    const RVector w = (s.array() * (1.0 - s.array())).matrix().cwiseProduct(g * adj);
    adj.noalias() -= alphas[l] * (g.transpose() * w);
  }
  return out;
}

std::vector<double> grad_alphas(const RMatrix& g, std::span<const double> alphas,
                                const RVector& target) {
  return loss_and_grad_alphas(g, alphas, target).grad;
}

TrainConfig default_train_config(Modulation modulation, int users, int antennas,
                                 int layers) {
  TrainConfig cfg;
  cfg.modulation = modulation;
  cfg.users = users;
  cfg.antennas = antennas;
  cfg.layers = layers;
  if (modulation == Modulation::kQam16) {
    cfg.snr_low_db = 10.0;
    cfg.snr_high_db = 30.0;
  }
  return cfg;
}

void validate(const TrainConfig& cfg) {
  if (cfg.users < 1 || cfg.antennas < cfg.users) {
    throw std::invalid_argument("train: requires 1 <= K <= N");
  }
  if (cfg.layers < 1) throw std::invalid_argument("train: layers must be >= 1");
  if (cfg.batch_size < 1) {
    throw std::invalid_argument("train: batch_size must be >= 1");
  }
  if (!(cfg.snr_low_db <= cfg.snr_high_db)) {
    throw std::invalid_argument("train: SNR range must satisfy low <= high");
  }
  if (!(cfg.learning_rate > 0.0)) {
    throw std::invalid_argument("train: learning_rate must be > 0");
  }
}

ObmnetParams train(const TrainConfig& cfg,
                   const std::function<void(const TrainProgress&)>& on_batch) {
  validate(cfg);
  const Constellation constellation = make_constellation(cfg.modulation);
  const auto layers = static_cast<std::size_t>(cfg.layers);

  std::vector<double> alphas(layers, cfg.initial_alpha);
  std::vector<double> m(layers, 0.0);
  std::vector<double> v(layers, 0.0);
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  double initial_loss = 0.0;
  std::deque<double> recent;
  double recent_sum = 0.0;
  double window_sum = 0.0;
  double previous_window = -1.0;
  std::size_t done = 0;

  std::vector<double> grad(layers);
  for (std::size_t b = 0; b < cfg.num_batches; ++b) {
    Rng rng(derive_seed(cfg.seed, b));
    std::uniform_real_distribution<double> snr_db(cfg.snr_low_db,
                                                  cfg.snr_high_db);
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
      const double n0 = n0_from_snr_db(snr_db(rng));
      const CMatrix h = complex_gaussian(cfg.antennas, cfg.users, 1.0, rng);
      const CVector x = random_symbols(constellation, cfg.users, rng);
      const TxRxSample s = transmit(h, x, n0, rng);
      const RMatrix g = lift_vector(s.y).asDiagonal() * lift_matrix(h);
      const LossGradient lg = loss_and_grad_alphas(g, alphas, lift_vector(x));
      loss += lg.loss;
      for (std::size_t l = 0; l < layers; ++l) grad[l] += lg.grad[l];
    }
    const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);
    loss *= inv_batch;

    const double t = static_cast<double>(b + 1);
    for (std::size_t l = 0; l < layers; ++l) {
      const double gl = grad[l] * inv_batch;
      m[l] = kBeta1 * m[l] + (1.0 - kBeta1) * gl;
      v[l] = kBeta2 * v[l] + (1.0 - kBeta2) * gl * gl;
      const double mhat = m[l] / (1.0 - std::pow(kBeta1, t));
      const double vhat = v[l] / (1.0 - std::pow(kBeta2, t));
      alphas[l] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + kEps);
    }
    done = b + 1;

    if (b == 0) initial_loss = loss;
    recent.push_back(loss);
    recent_sum += loss;
    if (recent.size() > cfg.early_stop_window) {
      recent_sum -= recent.front();
      recent.pop_front();
    }
    const double running = recent_sum / static_cast<double>(recent.size());
    if (!std::isfinite(loss) || running > 10.0 * initial_loss) {
      throw TrainingDiverged("train: running loss " + std::to_string(running) +
                             " exceeds 10x the initial loss " +
                             std::to_string(initial_loss) + " at batch " +
                             std::to_string(b));
    }
    if (on_batch) on_batch({b, loss, running});

    window_sum += loss;
    if (cfg.early_stop && cfg.early_stop_window > 0 &&
        done % cfg.early_stop_window == 0) {
      const double mean = window_sum / static_cast<double>(cfg.early_stop_window);
      window_sum = 0.0;
      if (previous_window > 0.0 &&
          previous_window - mean < cfg.early_stop_tolerance * previous_window) {
        break;
      }
      previous_window = mean;
    }
  }

  ObmnetParams p;
  p.alphas = std::move(alphas);
  p.modulation = cfg.modulation;
  p.users = cfg.users;
  p.antennas = cfg.antennas;
  p.seed = cfg.seed;
  p.batches = done;
  return p;
}

RMatrix obmnet_soft_batch(const RMatrix& h_hat_real, const RMatrix& y,
                          std::span<const double> alphas) {
  if (h_hat_real.rows() != y.rows()) {
    throw std::invalid_argument("obmnet_soft_batch: y has wrong row count");
  }
  const Eigen::Index batch = y.cols();
  RMatrix x = RMatrix::Zero(h_hat_real.cols(), batch);
  RMatrix gx(y.rows(), batch);
  for (double alpha : alphas) {
    // G x = y .* (H x) column-wise; sigma(-t) = 1 / (1 + e^t)
    gx.noalias() = h_hat_real * x;
    const Eigen::ArrayXXd s = 1.0 / (1.0 + (y.array() * gx.array()).exp());
    x.noalias() += alpha * (h_hat_real.transpose() * (y.array() * s).matrix());
  }
  const int users = static_cast<int>(h_hat_real.cols() / 2);
  for (Eigen::Index b = 0; b < batch; ++b) {
    x.col(b) = normalize_output(x.col(b), users);
  }
  return x;
}

RMatrix detect_batch(const RMatrix& h_hat_real, const RMatrix& y,
                     const ObmnetParams& params,
                     const Constellation& constellation) {
  return obmnet_soft_batch(h_hat_real, y, params.alphas)
      .unaryExpr([&](double v) { return constellation.slice(v); });
}

ObmnetParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open OBMNet parameter file '" +
                             path.string() + "'");
  }
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError(where + ":1", "empty parameter file");
  }
  std::istringstream header(line);
  std::string magic, version, modulation, k, n, l;
  header >> magic >> version >> modulation >> k >> n >> l;
  if (magic != "obmnet" || version != "v1" || k.rfind("K=", 0) != 0 ||
      n.rfind("N=", 0) != 0 || l.rfind("L=", 0) != 0) {
    throw ConfigError(where + ":1",
                      "expected header 'obmnet v1 <modulation> K=<K> N=<N> "
                      "L=<L>', got '" + line + "'");
  }
  ObmnetParams p;
  try {
    p.modulation = parse_modulation(modulation);
    p.users = std::stoi(k.substr(2));
    p.antennas = std::stoi(n.substr(2));
    const int layers = std::stoi(l.substr(2));
    if (layers < 1) throw std::invalid_argument("L must be >= 1");
    p.alphas.reserve(static_cast<std::size_t>(layers));
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::size_t used = 0;
      const double a = std::stod(line, &used);
      if (line.find_first_not_of(" \t\r", used) != std::string::npos) {
        throw ConfigError(where + ":" + std::to_string(lineno),
                          "trailing characters after step size");
      }
      p.alphas.push_back(a);
    }
    if (p.alphas.size() != static_cast<std::size_t>(layers)) {
      throw ConfigError(where, "header declares L=" + std::to_string(layers) +
                                   " but file has " +
                                   std::to_string(p.alphas.size()) +
                                   " step sizes");
    }
  } catch (const std::logic_error& e) {
    throw ConfigError(where, e.what());
  }
  return p;
}

void save_params(const ObmnetParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out.imbue(std::locale::classic());
  out << "obmnet v1 " << to_string(params.modulation) << " K=" << params.users
      << " N=" << params.antennas << " L=" << params.layers() << '\n';
  out.precision(17);
  for (double a : params.alphas) out << a << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace onebit
