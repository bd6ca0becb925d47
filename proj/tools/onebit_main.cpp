// onebit: BER sweeps, OBMNet training, timing runs and a nearest-neighbor
// search walk-through.
//
//   onebit ber    --config sweep.conf [--seed S] [--out ber.csv] [--set key=value]...
//   onebit train  --config train.conf --out params.txt
//   onebit timing --config timing.conf [--out timing.csv]
//   onebit demo-nn [--m 4]
//
// Exit codes: 0 success, 1 config error, 2 runtime error.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "onebit/config.hpp"
#include "onebit/errors.hpp"
#include "onebit/experiment.hpp"
#include "onebit/nn_search.hpp"
#include "onebit/obmnet.hpp"
#include "onebit/report.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config) {
  auto* c = cmd->add_option("--config", args.config, "key = value config file");
  if (needs_config) c->required();
  cmd->add_option("--seed", args.seed, "master seed (overrides the config)");
  cmd->add_option("--out", args.out, "output path (default: stdout)");
  cmd->add_option("--set", args.overrides, "override a config key: key=value");
}

onebit::KeyValues load(const CommonArgs& args) {
  onebit::KeyValues kv = args.config.empty()
                             ? onebit::KeyValues::parse("", "--set")
                             : onebit::KeyValues::read_file(args.config);
  for (const std::string& o : args.overrides) kv.set(o, "--set");
  if (args.seed) kv.set("seed=" + std::to_string(*args.seed), "--seed");
  return kv;
}

int run_ber_cmd(const CommonArgs& args) {
  const auto cfg = onebit::parse_experiment_config(load(args), onebit::ConfigPurpose::kBer);
  const onebit::BerReport report = onebit::run_ber(cfg);
  if (args.out.empty()) {
    onebit::write_report(report, std::cout);
  } else {
    onebit::write_report(report, args.out);
  }
  return 0;
}

int run_timing_cmd(const CommonArgs& args) {
  const auto cfg =
      onebit::parse_experiment_config(load(args), onebit::ConfigPurpose::kTiming);
  const auto rows = onebit::run_timing(cfg);
  if (args.out.empty()) {
    onebit::write_timing(rows, cfg.seed, std::cout);
  } else {
    onebit::write_timing(rows, cfg.seed, args.out);
  }
  return 0;
}

int run_train_cmd(const CommonArgs& args) {
  if (args.out.empty()) throw onebit::ConfigError("train", "--out is required");
  const onebit::TrainConfig cfg = onebit::parse_train_config(load(args));
  const onebit::ObmnetParams params =
      onebit::train(cfg, [](const onebit::TrainProgress& p) {
        if ((p.batch + 1) % 100 == 0) {
          std::cerr << "batch " << p.batch + 1 << "  loss " << p.loss
                    << "  running " << p.window_mean << '\n';
        }
      });
  onebit::save_params(params, args.out);
  std::cerr << "trained " << params.layers() << " layers in " << params.batches
            << " batches -> " << args.out << '\n';
  return 0;
}

void print_vector(const onebit::RVector& v) {
  std::cout << '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::cout << (i ? ", " : "") << std::showpos << std::fixed
              << std::setprecision(4) << v(i) << std::noshowpos;
  }
  std::cout << ']';
}

int run_demo_nn(std::size_t m) {
  using namespace onebit;
  const Constellation qpsk = make_constellation(Modulation::kQpsk);
  RVector soft(4);
  soft << 0.1, -0.5, -0.3, 0.8;
  const double gamma = default_gamma(Modulation::kQpsk);
  const CandidateSets cand = candidate_sets(soft, gamma, qpsk);

  std::cout << "estimate  ";
  print_vector(soft);
  std::cout << "\ngamma     " << std::setprecision(6) << gamma << "\n\n";
  for (std::size_t i = 0; i < cand.dims(); ++i) {
    std::cout << "A" << i + 1 << " = {";
    for (std::size_t j = 0; j < cand.sets[i].size(); ++j) {
      std::cout << (j ? ", " : "") << std::showpos << std::fixed
                << std::setprecision(4) << cand.sets[i][j] << std::noshowpos;
    }
    std::cout << "}\n";
  }
  std::cout << "|A| = " << cand.total_size() << "\n\n";

  const auto nearest = nearest_vectors(soft, cand, m);
  std::cout << "nearest " << nearest.size() << " candidate vectors:\n";
  for (std::size_t i = 0; i < nearest.size(); ++i) {
    std::cout << "  x" << i + 1 << " = ";
    print_vector(nearest[i]);
    std::cout << "  d^2 = " << std::setprecision(4)
              << squared_distance(nearest[i], soft) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-bit massive MIMO detection experiments"};
  app.require_subcommand(1);

  CommonArgs ber_args;
  CommonArgs train_args;
  CommonArgs timing_args;
  std::size_t demo_m = 4;

  auto* ber = app.add_subcommand("ber", "Monte Carlo BER sweep, CSV out");
  add_common(ber, ber_args, false);
  auto* tr = app.add_subcommand("train", "train OBMNet step sizes");
  add_common(tr, train_args, false);
  auto* timing = app.add_subcommand("timing", "per-vector detection time");
  add_common(timing, timing_args, false);
  auto* demo = app.add_subcommand("demo-nn", "nearest-neighbor search on a worked example");
  demo->add_option("--m", demo_m, "number of nearest vectors")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*ber) return run_ber_cmd(ber_args);
    if (*tr) return run_train_cmd(train_args);
    if (*timing) return run_timing_cmd(timing_args);
    if (*demo) return run_demo_nn(demo_m);
  } catch (const onebit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
