#include "onebit/experiment.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <thread>

#include "onebit/errors.hpp"
#include "onebit/linear_rx.hpp"
#include "onebit/ml_detect.hpp"
#include "onebit/nn_search.hpp"

namespace onebit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

RVector slice_all(const RVector& soft, const Constellation& c) {
  return soft.unaryExpr([&](double v) { return c.slice(v); });
}

// Channel state shared by every trial of one block.
struct Block {
  std::size_t index = static_cast<std::size_t>(-1);
  CMatrix h;
  CMatrix h_hat;
  RMatrix h_hat_real;
  std::vector<std::optional<Combiner>> combiners;  // per receiver
};

struct Counters {
  std::vector<std::uint64_t> errors;  // per output row
  std::vector<double> time;           // per output row
};

class BerRunner {
 public:
  BerRunner(const ExperimentConfig& cfg, const std::optional<ObmnetParams>& params)
      : cfg_(cfg), params_(params), constellation_(make_constellation(cfg.modulation)) {}

  std::size_t rows_per_receiver() const { return 1 + cfg_.stage2_m.size(); }
  std::size_t row_count() const { return cfg_.receivers.size() * rows_per_receiver(); }

  // Trials [begin, end) of SNR point s, accumulated into c.
  void run(std::size_t s, std::size_t begin, std::size_t end, Counters& c) const {
    const double n0 = n0_from_snr_db(cfg_.snr_db[s]);
    Block block;
    block.combiners.resize(cfg_.receivers.size());
    for (std::size_t t = begin; t < end; ++t) {
      const std::size_t b = t / cfg_.block_len;
      if (b != block.index) load_block(s, b, block);

      Rng rng(derive_seed(cfg_.seed, s, t, 1));
      const CVector x = random_symbols(constellation_, cfg_.users, rng);
      const TxRxSample sample = transmit(block.h, x, n0, rng);
      const RVector truth = lift_vector(x);
      const RVector y = lift_vector(sample.y);

      std::optional<MlProblem> problem;
      auto ml = [&]() -> const MlProblem& {
        if (!problem) problem = make_ml_problem(block.h_hat_real, y, 1.0 / n0);
        return *problem;
      };

      for (std::size_t r = 0; r < cfg_.receivers.size(); ++r) {
        const Receiver& rx = cfg_.receivers[r];
        const std::size_t row = r * rows_per_receiver();
        const auto start = Clock::now();
        RVector soft;
        RVector hard;
        switch (rx.family) {
          case Receiver::Family::kLinear: {
            auto& comb = block.combiners[r];
            if (!comb) comb = build_combiner(rx.combiner, block.h_hat, n0);
            soft = lift_vector(detect_linear(*comb, sample.y, constellation_).soft);
            hard = slice_all(soft, constellation_);
            break;
          }
          case Receiver::Family::kObmnet: {
            soft = obmnet_soft_batch(block.h_hat_real, y, params_->alphas).col(0);
            hard = slice_all(soft, constellation_);
            break;
          }
          case Receiver::Family::kMlConventional: {
            const MlProblem& p = ml();
            hard = exact_search(
                       [&](const RVector& v) { return -conventional_ml_objective(v, p); },
                       constellation_, cfg_.users)
                       .x;
            break;
          }
          case Receiver::Family::kMlRobust: {
            const MlProblem& p = ml();
            hard = exact_search(
                       [&](const RVector& v) { return robust_ml_objective(v, p); },
                       constellation_, cfg_.users)
                       .x;
            break;
          }
        }
        const double stage1_time = cfg_.record_time ? seconds_since(start) : 0.0;
        c.errors[row] += bit_errors(hard, truth, constellation_);
        c.time[row] += stage1_time;

        for (std::size_t k = 0; k < cfg_.stage2_m.size(); ++k) {
          const auto start2 = Clock::now();
          const MlProblem& p = ml();
          const NnSearchResult nn = nn_search(
              soft, cfg_.gamma, cfg_.stage2_m[k],
              [&](const RVector& v) { return robust_ml_objective(v, p); },
              constellation_);
          const double t2 = cfg_.record_time ? seconds_since(start2) : 0.0;
          c.errors[row + 1 + k] += bit_errors(nn.x, truth, constellation_);
          c.time[row + 1 + k] += stage1_time + t2;
        }
      }
    }
  }

 private:
  void load_block(std::size_t s, std::size_t b, Block& block) const {
    Rng rng(derive_seed(cfg_.seed, s, b, 0));
    block.index = b;
    block.h = complex_gaussian(cfg_.antennas, cfg_.users, 1.0, rng);
    block.h_hat = cfg_.csi == CsiModel::kPerturbed ? perturb_csi(block.h, cfg_.tau, rng)
                                                   : block.h;
    block.h_hat_real = lift_matrix(block.h_hat);
    for (auto& comb : block.combiners) comb.reset();
  }

  const ExperimentConfig& cfg_;
  const std::optional<ObmnetParams>& params_;
  Constellation constellation_;
};

bool needs_obmnet(const ExperimentConfig& cfg) {
  return std::any_of(cfg.receivers.begin(), cfg.receivers.end(), [](const Receiver& r) {
    return r.family == Receiver::Family::kObmnet;
  });
}

std::optional<ObmnetParams> load_if_needed(const ExperimentConfig& cfg) {
  if (!needs_obmnet(cfg)) return std::nullopt;
  if (!cfg.obmnet_params) {
    throw ConfigError("", "receiver OBMNET requires obmnet_params");
  }
  return load_params(*cfg.obmnet_params);
}

void check_params(const ExperimentConfig& cfg, const std::optional<ObmnetParams>& params) {
  ExperimentConfig copy = cfg;
  if (!copy.obmnet_params && params) copy.obmnet_params = "<in-memory>";
  validate(copy);
  if (!needs_obmnet(cfg)) return;
  if (!params) throw ConfigError("", "receiver OBMNET requires step sizes");
  if (params->users != cfg.users || params->modulation != cfg.modulation) {
    throw ConfigError(cfg.obmnet_params ? cfg.obmnet_params->string() : "",
                      "OBMNet parameters were trained for " +
                          std::string(to_string(params->modulation)) +
                          " K=" + std::to_string(params->users) +
                          ", config asks for " +
                          std::string(to_string(cfg.modulation)) +
                          " K=" + std::to_string(cfg.users));
  }
  if (params->alphas.empty()) throw ConfigError("", "OBMNet has no layers");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

CMatrix perturb_csi(const CMatrix& h, double tau, Rng& rng) {
  if (!(tau >= 0.0 && tau < 1.0)) {
    throw std::invalid_argument("perturb_csi: tau must lie in [0, 1)");
  }
  const CMatrix e = complex_gaussian(h.rows(), h.cols(), 1.0, rng);
  if (tau == 0.0) return h;
  return std::sqrt(1.0 - tau * tau) * h + tau * e;
}

std::uint64_t bit_errors(const RVector& decided, const RVector& truth,
                         const Constellation& constellation) {
  if (decided.size() != truth.size()) {
    throw std::invalid_argument("bit_errors: length mismatch");
  }
  std::uint64_t errors = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const auto a = constellation.gray_label(constellation.level_index(decided(i)));
    const auto b = constellation.gray_label(constellation.level_index(truth(i)));
    errors += static_cast<std::uint64_t>(std::popcount(a ^ b));
  }
  return errors;
}

std::size_t bits_per_vector(const Constellation& constellation, int users) {
  return static_cast<std::size_t>(2 * users * constellation.bits_per_level());
}

BerReport run_ber(const ExperimentConfig& cfg) {
  return run_ber(cfg, load_if_needed(cfg));
}

BerReport run_ber(const ExperimentConfig& cfg,
                  const std::optional<ObmnetParams>& params) {
  check_params(cfg, params);
  const BerRunner runner(cfg, params);
  const Constellation constellation = make_constellation(cfg.modulation);
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, cfg.trials));
  const std::size_t rows = runner.row_count();
  const double bits =
      static_cast<double>(cfg.trials) *
      static_cast<double>(bits_per_vector(constellation, cfg.users));

  BerReport report;
  report.seed = cfg.seed;
  for (std::size_t s = 0; s < cfg.snr_db.size(); ++s) {
    // contiguous trial ranges; integer error counts make the sum order-free
    std::vector<Counters> parts(workers, Counters{std::vector<std::uint64_t>(rows, 0),
                                                  std::vector<double>(rows, 0.0)});
    std::vector<std::exception_ptr> failures(workers);
    auto work = [&](std::size_t w) {
      try {
        const std::size_t begin = cfg.trials * w / workers;
        const std::size_t end = cfg.trials * (w + 1) / workers;
        runner.run(s, begin, end, parts[w]);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    };
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }

    for (std::size_t r = 0; r < cfg.receivers.size(); ++r) {
      for (std::size_t k = 0; k < runner.rows_per_receiver(); ++k) {
        const std::size_t row = r * runner.rows_per_receiver() + k;
        BerRow out;
        out.snr_db = cfg.snr_db[s];
        out.receiver = to_string(cfg.receivers[r]);
        out.stage = k == 0 ? 1 : 2;
        out.m = k == 0 ? 1 : cfg.stage2_m[k - 1];
        out.trials = cfg.trials;
        double time = 0.0;
        for (const Counters& c : parts) {
          out.bit_errors += c.errors[row];
          time += c.time[row];
        }
        out.ber = static_cast<double>(out.bit_errors) / bits;
        out.mean_detect_time_s =
            cfg.record_time ? time / static_cast<double>(cfg.trials) : 0.0;
        report.rows.push_back(std::move(out));
      }
    }
  }
  return report;
}

std::vector<TimingRow> run_timing(const ExperimentConfig& cfg) {
  return run_timing(cfg, load_if_needed(cfg));
}

std::vector<TimingRow> run_timing(const ExperimentConfig& cfg,
                                  const std::optional<ObmnetParams>& params) {
  ExperimentConfig checked = cfg;
  if (checked.trials < 1) checked.trials = 1;
  check_params(checked, params);
  if (cfg.repetitions < 1) throw ConfigError("", "repetitions must be >= 1");
  const Constellation constellation = make_constellation(cfg.modulation);
  const double n0 = n0_from_snr_db(cfg.snr_db.front());
  constexpr std::size_t kMinVectors = 250;

  std::vector<TimingRow> rows;
  for (std::size_t bi = 0; bi < cfg.batch_sizes.size(); ++bi) {
    const std::size_t batch = cfg.batch_sizes[bi];
    const std::size_t batches = (std::max(batch, kMinVectors) + batch - 1) / batch;
    const auto vectors = static_cast<Eigen::Index>(batches * batch);
    const auto width = static_cast<Eigen::Index>(batch);

    // one channel per repetition, shared by all of its vectors; inputs are
    // drawn once per batch size and reused by every receiver
    std::vector<CMatrix> h(cfg.repetitions);
    std::vector<CMatrix> y(cfg.repetitions);
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      Rng rng(derive_seed(cfg.seed, bi, rep));
      h[rep] = complex_gaussian(cfg.antennas, cfg.users, 1.0, rng);
      y[rep].resize(cfg.antennas, vectors);
      for (Eigen::Index v = 0; v < vectors; ++v) {
        const CVector x = random_symbols(constellation, cfg.users, rng);
        y[rep].col(v) = transmit(h[rep], x, n0, rng).y;
      }
    }

    for (const Receiver& rx : cfg.receivers) {
      std::vector<double> per_vector;
      double sink = 0.0;
      for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        const CMatrix& hr = h[rep];
        const CMatrix& yr = y[rep];
        const auto start = Clock::now();
        switch (rx.family) {
          case Receiver::Family::kLinear: {
            const Combiner comb = build_combiner(rx.combiner, hr, n0);
            for (Eigen::Index b = 0; b < vectors; b += width) {
              const CMatrix soft = detect_linear_soft(comb, yr.middleCols(b, width));
              for (Eigen::Index i = 0; i < soft.size(); ++i) {
                sink += constellation.slice(soft.data()[i]).real();
              }
            }
            break;
          }
          case Receiver::Family::kObmnet: {
            const RMatrix lifted = lift_matrix(hr);
            RMatrix ylift(lifted.rows(), width);
            for (Eigen::Index b = 0; b < vectors; b += width) {
              ylift.topRows(yr.rows()) = yr.middleCols(b, width).real();
              ylift.bottomRows(yr.rows()) = yr.middleCols(b, width).imag();
              sink += detect_batch(lifted, ylift, *params, constellation).sum();
            }
            break;
          }
          case Receiver::Family::kMlConventional:
          case Receiver::Family::kMlRobust: {
            const RMatrix lifted = lift_matrix(hr);
            const bool robust = rx.family == Receiver::Family::kMlRobust;
            for (Eigen::Index v = 0; v < vectors; ++v) {
              const MlProblem p =
                  make_ml_problem(lifted, lift_vector(yr.col(v)), 1.0 / n0);
              const Objective cost = [&](const RVector& x) {
                return robust ? robust_ml_objective(x, p) : -conventional_ml_objective(x, p);
              };
              sink += exact_search(cost, constellation, cfg.users).x.sum();
            }
            break;
          }
        }
        per_vector.push_back(seconds_since(start) / static_cast<double>(vectors));
      }
      volatile double keep = sink;
      (void)keep;
      rows.push_back({to_string(rx), batch, cfg.repetitions, median(per_vector)});
    }
  }
  return rows;
}

}  // namespace onebit
