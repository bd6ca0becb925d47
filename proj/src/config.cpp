#include "onebit/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "onebit/errors.hpp"
#include "onebit/nn_search.hpp"

namespace onebit {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const ConfigValue& v, const std::string& key) {
  T out{};
  const char* first = v.value.data();
  const char* last = first + v.value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError(v.where, "key '" + key + "': '" + v.value +
                                   "' is not a valid number");
  }
  return out;
}

template <typename T>
std::vector<T> parse_number_list(const ConfigValue& v, const std::string& key) {
  std::vector<T> out;
  for (const std::string& item : split_list(v.value)) {
    out.push_back(parse_number<T>({item, v.where}, key));
  }
  if (out.empty()) {
    throw ConfigError(v.where, "key '" + key + "' must list at least one value");
  }
  return out;
}

bool parse_bool(const ConfigValue& v, const std::string& key) {
  if (v.value == "true" || v.value == "1" || v.value == "yes") return true;
  if (v.value == "false" || v.value == "0" || v.value == "no") return false;
  throw ConfigError(v.where, "key '" + key + "': expected true or false, got '" +
                                 v.value + "'");
}

[[noreturn]] void range_error(const ConfigValue& v, const std::string& key,
                              const std::string& expectation) {
  throw ConfigError(v.where, "key '" + key + "' out of range: " + v.value +
                                 " (" + expectation + ")");
}

class Reader {
 public:
  Reader(const KeyValues& kv, std::set<std::string> allowed)
      : kv_(kv), allowed_(std::move(allowed)) {
    for (const auto& [key, v] : kv.entries()) {
      if (!allowed_.count(key)) {
        std::string list;
        for (const auto& a : allowed_) list += (list.empty() ? "" : ", ") + a;
        throw ConfigError(v.where,
                          "unknown key '" + key + "' (expected one of: " + list + ")");
      }
    }
  }

  const ConfigValue* optional(const std::string& key) const { return kv_.find(key); }

  const ConfigValue& required(const std::string& key) const {
    const ConfigValue* v = kv_.find(key);
    if (v == nullptr) {
      throw ConfigError(kv_.source(), "missing required key '" + key + "'");
    }
    return *v;
  }

 private:
  const KeyValues& kv_;
  std::set<std::string> allowed_;
};

Modulation read_modulation(const ConfigValue& v) {
  try {
    return parse_modulation(v.value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(v.where, e.what());
  }
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text, const std::string& source) {
  KeyValues kv;
  kv.source_ = source;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where, "expected 'key = value', got '" + content + "'");
    }
    std::string key = trim(content.substr(0, eq));
    std::string value = trim(content.substr(eq + 1));
    if (key.empty()) throw ConfigError(where, "empty key");
    kv.put(std::move(key), std::move(value), where, false);
  }
  return kv;
}

KeyValues KeyValues::read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValues::set(std::string_view assignment, const std::string& source) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(source, "expected key=value, got '" +
                                  std::string(assignment) + "'");
  }
  std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError(source, "empty key");
  if (source_.empty()) source_ = source;
  put(std::move(key), trim(assignment.substr(eq + 1)), source, true);
}

const ConfigValue* KeyValues::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void KeyValues::put(std::string key, std::string value, std::string where,
                    bool replace) {
  auto it = entries_.find(key);
  if (it != entries_.end() && !replace) {
    throw ConfigError(where, "duplicate key '" + key + "' (first set at " +
                                 it->second.where + ")");
  }
  entries_[std::move(key)] = ConfigValue{std::move(value), std::move(where)};
}

std::string to_string(const Receiver& r) {
  switch (r.family) {
    case Receiver::Family::kLinear:
      return std::string(to_string(r.combiner));
    case Receiver::Family::kObmnet:
      return "OBMNET";
    case Receiver::Family::kMlConventional:
      return "ML_CONVENTIONAL";
    case Receiver::Family::kMlRobust:
      return "ML_ROBUST";
  }
  return "UNKNOWN";
}

std::optional<Receiver> parse_receiver(std::string_view name) {
  if (auto k = parse_combiner_kind(name)) return Receiver::linear(*k);
  if (name == "OBMNET") return Receiver::obmnet();
  if (name == "ML_CONVENTIONAL") return Receiver::ml_conventional();
  if (name == "ML_ROBUST") return Receiver::ml_robust();
  return std::nullopt;
}

std::string receiver_names() {
  std::string out;
  for (CombinerKind k : kAllCombinerKinds) {
    out += std::string(to_string(k)) + ", ";
  }
  return out + "OBMNET, ML_CONVENTIONAL, ML_ROBUST";
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.users < 1 || cfg.antennas < cfg.users) {
    throw ConfigError("", "K and N must satisfy 1 <= K <= N");
  }
  if (cfg.snr_db.empty()) throw ConfigError("", "snr_db grid is empty");
  if (cfg.receivers.empty()) throw ConfigError("", "no receiver selected");
  if (cfg.trials < 1) throw ConfigError("", "trials must be >= 1");
  if (!(cfg.tau >= 0.0 && cfg.tau < 1.0)) {
    throw ConfigError("", "tau must lie in [0, 1)");
  }
  if (!(cfg.gamma > 0.0)) throw ConfigError("", "gamma must be > 0");
  if (cfg.block_len < 1) throw ConfigError("", "block_len must be >= 1");
  for (std::size_t m : cfg.stage2_m) {
    if (m < 1) throw ConfigError("", "stage2_M entries must be >= 1");
  }
  for (const Receiver& r : cfg.receivers) {
    if (r.is_ml() && !cfg.stage2_m.empty()) {
      throw ConfigError("", "receiver " + to_string(r) +
                                " cannot be combined with a second stage");
    }
    if (r.family == Receiver::Family::kObmnet && !cfg.obmnet_params) {
      throw ConfigError("", "receiver OBMNET requires obmnet_params");
    }
  }
}

ExperimentConfig parse_experiment_config(const KeyValues& kv,
                                         ConfigPurpose purpose) {
  const Reader rd(kv, {"K", "N", "modulation", "snr_db", "receiver", "stage2_M",
                       "gamma", "csi", "tau", "trials", "seed", "obmnet_params",
                       "block_len", "record_time", "threads", "batch_sizes",
                       "repetitions"});
  ExperimentConfig cfg;

  const ConfigValue& k = rd.required("K");
  cfg.users = parse_number<int>(k, "K");
  if (cfg.users < 1) range_error(k, "K", "must be >= 1");
  const ConfigValue& n = rd.required("N");
  cfg.antennas = parse_number<int>(n, "N");
  if (cfg.antennas < cfg.users) range_error(n, "N", "must be >= K");
  cfg.modulation = read_modulation(rd.required("modulation"));

  if (purpose == ConfigPurpose::kBer) {
    cfg.snr_db = parse_number_list<double>(rd.required("snr_db"), "snr_db");
  } else if (const auto* v = rd.optional("snr_db")) {
    cfg.snr_db = parse_number_list<double>(*v, "snr_db");
  } else {
    cfg.snr_db = {10.0};
  }

  const ConfigValue& rv = rd.required("receiver");
  for (const std::string& name : split_list(rv.value)) {
    auto r = parse_receiver(name);
    if (!r) {
      throw ConfigError(rv.where, "unknown receiver '" + name +
                                      "' (options: " + receiver_names() + ")");
    }
    cfg.receivers.push_back(*r);
  }
  if (cfg.receivers.empty()) range_error(rv, "receiver", "must name a receiver");

  if (const auto* v = rd.optional("stage2_M")) {
    for (auto m : parse_number_list<long long>(*v, "stage2_M")) {
      if (m < 1) range_error(*v, "stage2_M", "each M must be >= 1");
      cfg.stage2_m.push_back(static_cast<std::size_t>(m));
    }
  }

  cfg.gamma = default_gamma(cfg.modulation);
  if (const auto* v = rd.optional("gamma")) {
    cfg.gamma = parse_number<double>(*v, "gamma");
    if (!(cfg.gamma > 0.0)) range_error(*v, "gamma", "must be > 0");
  }

  if (const auto* v = rd.optional("csi")) {
    if (v->value == "perfect") {
      cfg.csi = CsiModel::kPerfect;
    } else if (v->value == "perturbed") {
      cfg.csi = CsiModel::kPerturbed;
    } else {
      throw ConfigError(v->where, "key 'csi': expected perfect or perturbed, got '" +
                                      v->value + "'");
    }
  }
  if (const auto* v = rd.optional("tau")) {
    cfg.tau = parse_number<double>(*v, "tau");
    if (!(cfg.tau >= 0.0 && cfg.tau < 1.0)) range_error(*v, "tau", "must lie in [0, 1)");
    if (cfg.csi != CsiModel::kPerturbed && cfg.tau != 0.0) {
      throw ConfigError(v->where, "tau > 0 requires csi = perturbed");
    }
  } else if (cfg.csi == CsiModel::kPerturbed) {
    throw ConfigError(kv.source(), "missing required key 'tau' for csi = perturbed");
  }

  if (purpose == ConfigPurpose::kBer) {
    const ConfigValue& t = rd.required("trials");
    const auto trials = parse_number<long long>(t, "trials");
    if (trials < 1) range_error(t, "trials", "must be >= 1");
    cfg.trials = static_cast<std::size_t>(trials);
  } else if (const auto* t = rd.optional("trials")) {
    const auto trials = parse_number<long long>(*t, "trials");
    if (trials < 1) range_error(*t, "trials", "must be >= 1");
    cfg.trials = static_cast<std::size_t>(trials);
  } else {
    cfg.trials = 1;
  }

  if (const auto* v = rd.optional("seed")) cfg.seed = parse_number<std::uint64_t>(*v, "seed");
  if (const auto* v = rd.optional("obmnet_params")) cfg.obmnet_params = v->value;
  if (const auto* v = rd.optional("block_len")) {
    const auto b = parse_number<long long>(*v, "block_len");
    if (b < 1) range_error(*v, "block_len", "must be >= 1");
    cfg.block_len = static_cast<std::size_t>(b);
  }
  if (const auto* v = rd.optional("record_time")) cfg.record_time = parse_bool(*v, "record_time");

  cfg.threads = std::max(1U, std::thread::hardware_concurrency());
  if (const auto* v = rd.optional("threads")) {
    const auto t = parse_number<long long>(*v, "threads");
    if (t < 0) range_error(*v, "threads", "must be >= 0 (0 = all cores)");
    if (t > 0) cfg.threads = static_cast<std::size_t>(t);
  }
  if (const auto* v = rd.optional("batch_sizes")) {
    cfg.batch_sizes.clear();
    for (auto b : parse_number_list<long long>(*v, "batch_sizes")) {
      if (b < 1) range_error(*v, "batch_sizes", "each batch size must be >= 1");
      cfg.batch_sizes.push_back(static_cast<std::size_t>(b));
    }
  }
  if (const auto* v = rd.optional("repetitions")) {
    const auto r = parse_number<long long>(*v, "repetitions");
    if (r < 1) range_error(*v, "repetitions", "must be >= 1");
    cfg.repetitions = static_cast<std::size_t>(r);
  }

  // cross-key checks, reported against the receiver line
  for (const Receiver& r : cfg.receivers) {
    if (r.is_ml() && !cfg.stage2_m.empty()) {
      throw ConfigError(rv.where, "receiver " + to_string(r) +
                                      " cannot be combined with stage2_M");
    }
    if (r.family == Receiver::Family::kObmnet && !cfg.obmnet_params) {
      throw ConfigError(rv.where, "receiver OBMNET requires key 'obmnet_params'");
    }
  }
  return cfg;
}

TrainConfig parse_train_config(const KeyValues& kv) {
  const Reader rd(kv, {"K", "N", "modulation", "layers", "batch_size",
                       "learning_rate", "num_batches", "train_snr_db", "seed",
                       "initial_alpha", "early_stop"});
  const ConfigValue& k = rd.required("K");
  const int users = parse_number<int>(k, "K");
  if (users < 1) range_error(k, "K", "must be >= 1");
  const ConfigValue& n = rd.required("N");
  const int antennas = parse_number<int>(n, "N");
  if (antennas < users) range_error(n, "N", "must be >= K");
  const Modulation mod = read_modulation(rd.required("modulation"));
  const ConfigValue& l = rd.required("layers");
  const int layers = parse_number<int>(l, "layers");
  if (layers < 1) range_error(l, "layers", "must be >= 1");

  TrainConfig cfg = default_train_config(mod, users, antennas, layers);
  if (const auto* v = rd.optional("batch_size")) {
    const auto b = parse_number<long long>(*v, "batch_size");
    if (b < 1) range_error(*v, "batch_size", "must be >= 1");
    cfg.batch_size = static_cast<std::size_t>(b);
  }
  if (const auto* v = rd.optional("learning_rate")) {
    cfg.learning_rate = parse_number<double>(*v, "learning_rate");
    if (!(cfg.learning_rate > 0.0)) range_error(*v, "learning_rate", "must be > 0");
  }
  if (const auto* v = rd.optional("num_batches")) {
    const auto b = parse_number<long long>(*v, "num_batches");
    if (b < 1) range_error(*v, "num_batches", "must be >= 1");
    cfg.num_batches = static_cast<std::size_t>(b);
  }
  if (const auto* v = rd.optional("train_snr_db")) {
    const auto r = parse_number_list<double>(*v, "train_snr_db");
    if (r.size() != 2 || !(r[0] <= r[1])) {
      range_error(*v, "train_snr_db", "expected 'low, high' with low <= high");
    }
    cfg.snr_low_db = r[0];
    cfg.snr_high_db = r[1];
  }
  if (const auto* v = rd.optional("seed")) cfg.seed = parse_number<std::uint64_t>(*v, "seed");
  if (const auto* v = rd.optional("initial_alpha")) {
    cfg.initial_alpha = parse_number<double>(*v, "initial_alpha");
  }
  if (const auto* v = rd.optional("early_stop")) cfg.early_stop = parse_bool(*v, "early_stop");
  return cfg;
}

}  // namespace onebit
