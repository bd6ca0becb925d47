#pragma once

// CSV output for BER sweeps and timing runs. Numbers use the shortest
// round-trip decimal form, '.' as separator and LF line endings, so equal
// inputs always produce byte-identical files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace onebit {

struct BerRow {
  double snr_db = 0.0;
  std::string receiver;
  int stage = 1;
  std::size_t m = 1;
  std::size_t trials = 0;
  std::uint64_t bit_errors = 0;
  double ber = 0.0;
  double mean_detect_time_s = 0.0;

  friend bool operator==(const BerRow&, const BerRow&) = default;
};

struct BerReport {
  std::uint64_t seed = 0;
  std::vector<BerRow> rows;

  /// Row for (snr, receiver, stage, M); throws std::out_of_range if absent.
  const BerRow& find(double snr_db, const std::string& receiver, int stage,
                     std::size_t m) const;
};

inline constexpr const char* kBerHeader =
    "snr_db,receiver,stage,M,trials,bit_errors,ber,mean_detect_time_s";

void write_report(const BerReport& report, std::ostream& out);
void write_report(const BerReport& report, const std::filesystem::path& path);

/// Parses what write_report produced. Throws std::runtime_error on bad input.
BerReport read_report(std::istream& in);

struct TimingRow {
  std::string receiver;
  std::size_t batch_size = 1;
  std::size_t repetitions = 0;
  double per_vector_time_s = 0.0;  // median over repetitions
};

inline constexpr const char* kTimingHeader =
    "receiver,batch_size,repetitions,per_vector_time_s";

void write_timing(const std::vector<TimingRow>& rows, std::uint64_t seed,
                  std::ostream& out);
void write_timing(const std::vector<TimingRow>& rows, std::uint64_t seed,
                  const std::filesystem::path& path);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

}  // namespace onebit
