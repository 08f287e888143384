#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "waverobe/wavelet.hpp"

namespace waverobe {

/// Parses one real per line. Blank lines and text after '#' are ignored; a
/// single-column CSV with an optional header line is accepted. Errors name
/// `source` and the 1-based line number.
TimeSeries parse_series(std::istream& in, const std::string& source);
TimeSeries read_series(const std::filesystem::path& path);

/// One value per line at round-trip precision, provenance as a '#' comment.
void write_series(const std::filesystem::path& path, const TimeSeries& x);
/// Writes one index per line.
void write_indices(const std::filesystem::path& path, const std::vector<std::size_t>& indices);

/// Sums over consecutive non-overlapping windows of length k; a trailing
/// partial window is dropped.
TimeSeries aggregate(const TimeSeries& x, std::size_t k);

/// RFC 4180 writer.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  CsvWriter& field(const std::string& text);
  CsvWriter& field(double value);
  CsvWriter& field(long long value);
  CsvWriter& field(std::size_t value) { return field(static_cast<long long>(value)); }
  CsvWriter& field(int value) { return field(static_cast<long long>(value)); }
  void end_row();
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
  bool first_ = true;
};

std::string format_double(double value);

}  // namespace waverobe
