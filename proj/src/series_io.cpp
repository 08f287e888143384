#include "waverobe/series_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "waverobe/errors.hpp"

namespace waverobe {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\"");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

TimeSeries parse_series(std::istream& in, const std::string& source) {
  TimeSeries out;
  out.provenance = source;
  std::string line;
  std::size_t lineno = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (lineno == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    if (trim(view).empty()) continue;
    if (view.find(',') != std::string_view::npos) {
      const auto comma = view.find(',');
      if (!trim(view.substr(comma + 1)).empty()) {
        throw InputError(source + ":" + std::to_string(lineno) +
                         ": expected a single column, found several comma-separated fields");
      }
      view = view.substr(0, comma);
    }
    const std::string_view token = trim(view);
    double value = 0.0;
    if (!parse_double(token, value)) {
      if (!seen_content) {
        seen_content = true;
        continue;  // header
      }
      throw InputError(source + ":" + std::to_string(lineno) + ": cannot parse '" +
                       std::string(token) + "' as a number");
    }
    if (!std::isfinite(value)) {
      throw InputError(source + ":" + std::to_string(lineno) + ": non-finite value '" +
                       std::string(token) + "'");
    }
    seen_content = true;
    out.values.push_back(value);
  }
  if (out.values.empty()) throw InputError(source + ": no numeric values");
  return out;
}

TimeSeries read_series(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_series(in, path.string());
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_series(const std::filesystem::path& path, const TimeSeries& x) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  if (!x.provenance.empty()) out << "# " << x.provenance << '\n';
  for (double v : x.values) out << format_double(v) << '\n';
  if (!out) throw InputError("failed writing " + path.string());
}

void write_indices(const std::filesystem::path& path, const std::vector<std::size_t>& indices) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t i : indices) out << i << '\n';
}

TimeSeries aggregate(const TimeSeries& x, std::size_t k) {
  if (k == 0) throw InputError("aggregation window must be positive");
  TimeSeries out;
  out.provenance = x.provenance + " aggregated by " + std::to_string(k);
  for (std::size_t start = 0; start + k <= x.size(); start += k) {
    double s = 0.0;
    for (std::size_t i = start; i < start + k; ++i) s += x.values[i];
    out.values.push_back(s);
  }
  if (out.values.empty()) {
    throw InputError("aggregation window " + std::to_string(k) + " exceeds the series length " +
                     std::to_string(x.size()));
  }
  return out;
}

CsvWriter& CsvWriter::field(const std::string& text) {
  if (!first_) out_ << ',';
  first_ = false;
  if (text.find_first_of(",\"\r\n") == std::string::npos) {
    out_ << text;
  } else {
    out_ << '"';
    for (char c : text) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  }
  return *this;
}

CsvWriter& CsvWriter::field(double value) { return field(format_double(value)); }

CsvWriter& CsvWriter::field(long long value) { return field(std::to_string(value)); }

void CsvWriter::end_row() {
  out_ << "\r\n";
  first_ = true;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (const auto& f : fields) field(f);
  end_row();
}

}  // namespace waverobe
