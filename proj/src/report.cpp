#include "onebit/report.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace onebit {

namespace {

template <typename T>
T parse_field(const std::string& field, int lineno) {
  T out{};
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw std::runtime_error("report line " + std::to_string(lineno) +
                             ": bad number '" + field + "'");
  }
  return out;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  writer(out);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

const BerRow& BerReport::find(double snr_db, const std::string& receiver,
                              int stage, std::size_t m) const {
  for (const BerRow& r : rows) {
    if (r.snr_db == snr_db && r.receiver == receiver && r.stage == stage &&
        r.m == m) {
      return r;
    }
  }
  throw std::out_of_range("no report row for " + receiver + " at " +
                          format_double(snr_db) + " dB, stage " +
                          std::to_string(stage) + ", M=" + std::to_string(m));
}

void write_report(const BerReport& report, std::ostream& out) {
  out << "# seed=" << report.seed << '\n' << kBerHeader << '\n';
  for (const BerRow& r : report.rows) {
    out << format_double(r.snr_db) << ',' << r.receiver << ',' << r.stage << ','
        << r.m << ',' << r.trials << ',' << r.bit_errors << ','
        << format_double(r.ber) << ',' << format_double(r.mean_detect_time_s)
        << '\n';
  }
}

void write_report(const BerReport& report, const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& out) { write_report(report, out); });
}

BerReport read_report(std::istream& in) {
  BerReport report;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# seed=", 0) == 0) {
      report.seed = parse_field<std::uint64_t>(line.substr(7), lineno);
      continue;
    }
    if (line[0] == '#') continue;
    if (!header) {
      if (line != kBerHeader) {
        throw std::runtime_error("report line " + std::to_string(lineno) +
                                 ": unexpected header '" + line + "'");
      }
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 8) {
      throw std::runtime_error("report line " + std::to_string(lineno) +
                               ": expected 8 fields");
    }
    BerRow r;
    r.snr_db = parse_field<double>(f[0], lineno);
    r.receiver = f[1];
    r.stage = parse_field<int>(f[2], lineno);
    r.m = parse_field<std::size_t>(f[3], lineno);
    r.trials = parse_field<std::size_t>(f[4], lineno);
    r.bit_errors = parse_field<std::uint64_t>(f[5], lineno);
    r.ber = parse_field<double>(f[6], lineno);
    r.mean_detect_time_s = parse_field<double>(f[7], lineno);
    report.rows.push_back(std::move(r));
  }
  if (!header) throw std::runtime_error("report has no header line");
  return report;
}

void write_timing(const std::vector<TimingRow>& rows, std::uint64_t seed,
                  std::ostream& out) {
  out << "# seed=" << seed << '\n' << kTimingHeader << '\n';
  for (const TimingRow& r : rows) {
    out << r.receiver << ',' << r.batch_size << ',' << r.repetitions << ','
        << format_double(r.per_vector_time_s) << '\n';
  }
}

void write_timing(const std::vector<TimingRow>& rows, std::uint64_t seed,
                  const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& out) { write_timing(rows, seed, out); });
}

}  // namespace onebit
