#pragma once

// Experiment configuration: `key = value` files with `#` comments, plus
// `key=value` overrides from the command line. Every error names its source
// and line.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "onebit/linear_rx.hpp"
#include "onebit/model.hpp"
#include "onebit/obmnet.hpp"

namespace onebit {

struct ConfigValue {
  std::string value;
  std::string where;  // "<source>:<line>"
};

/// Raw, unvalidated key-value pairs in file order of first appearance.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text, const std::string& source);
  static KeyValues read_file(const std::filesystem::path& path);

  /// Applies one `key=value` override; replaces an existing value.
  void set(std::string_view assignment, const std::string& source);

  const ConfigValue* find(const std::string& key) const;
  const std::map<std::string, ConfigValue>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

 private:
  void put(std::string key, std::string value, std::string where, bool replace);

  std::map<std::string, ConfigValue> entries_;
  std::string source_;
};

/// A first-stage detector: one of the linear combiners, OBMNet, or exhaustive
/// ML under the probit or the logistic likelihood.
struct Receiver {
  enum class Family { kLinear, kObmnet, kMlConventional, kMlRobust };

  Family family = Family::kLinear;
  CombinerKind combiner = CombinerKind::kMrc;

  static Receiver linear(CombinerKind k) { return {Family::kLinear, k}; }
  static Receiver obmnet() { return {Family::kObmnet, CombinerKind::kMrc}; }
  static Receiver ml_conventional() {
    return {Family::kMlConventional, CombinerKind::kMrc};
  }
  static Receiver ml_robust() { return {Family::kMlRobust, CombinerKind::kMrc}; }

  bool is_ml() const {
    return family == Family::kMlConventional || family == Family::kMlRobust;
  }
  friend bool operator==(const Receiver&, const Receiver&) = default;
};

std::string to_string(const Receiver& r);
std::optional<Receiver> parse_receiver(std::string_view name);
/// Comma-separated list of every accepted receiver name.
std::string receiver_names();

enum class CsiModel { kPerfect, kPerturbed };

struct ExperimentConfig {
  int users = 0;
  int antennas = 0;
  Modulation modulation = Modulation::kQpsk;
  std::vector<double> snr_db;
  std::vector<Receiver> receivers;
  std::vector<std::size_t> stage2_m;  // empty: first stage only
  double gamma = 0.0;
  CsiModel csi = CsiModel::kPerfect;
  double tau = 0.0;
  std::size_t trials = 0;  // symbol vectors per SNR point
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> obmnet_params;
  std::size_t block_len = 1;  // symbol vectors per channel realization
  bool record_time = false;
  std::size_t threads = 1;
  // timing only
  std::vector<std::size_t> batch_sizes = {1, 10, 100, 250};
  std::size_t repetitions = 10;
};

enum class ConfigPurpose { kBer, kTiming };

/// Validates and applies defaults (gamma per modulation, threads = hardware
/// concurrency). Throws ConfigError.
ExperimentConfig parse_experiment_config(const KeyValues& kv,
                                         ConfigPurpose purpose = ConfigPurpose::kBer);

/// Semantic checks shared by the parser and programmatic callers.
void validate(const ExperimentConfig& cfg);

TrainConfig parse_train_config(const KeyValues& kv);

}  // namespace onebit
