#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "waverobe/errors.hpp"
#include "waverobe/series_io.hpp"

using namespace waverobe;

namespace {

TimeSeries parse(const std::string& text) {
  std::istringstream in(text);
  return parse_series(in, "mem");
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("waverobe_io_" + name);
}

}  // namespace

TEST_SUITE("series_io") {

TEST_CASE("plain lines, comments and blanks") {
  const auto x = parse("# header comment\n1.5\n\n  -2e3  # trailing\n+4\r\n.25\n");
  REQUIRE(x.values.size() == 4);
  CHECK(x.values[0] == 1.5);
  CHECK(x.values[1] == -2000.0);
  CHECK(x.values[2] == 4.0);
  CHECK(x.values[3] == 0.25);
  CHECK(x.provenance == "mem");
}

TEST_CASE("single-column CSV with a header and a BOM") {
  const auto x = parse("\xEF\xBB\xBFminimum\r\n\"1011\"\r\n1013,\r\n");
  REQUIRE(x.values.size() == 2);
  CHECK(x.values[0] == 1011.0);
  CHECK(x.values[1] == 1013.0);
}

TEST_CASE("errors name the line") {
  CHECK(parse_error("1\n2\nabc\n4\n").find("mem:3") != std::string::npos);
  CHECK(parse_error("value\n1\nx\n").find("mem:3") != std::string::npos);
  CHECK(parse_error("1,2\n").find("mem:1") != std::string::npos);
  CHECK(parse_error("1\nnan\n").find("mem:2") != std::string::npos);
  CHECK(parse_error("1\ninf\n").find("non-finite") != std::string::npos);
  CHECK(parse_error("# nothing\n\n").find("no numeric values") != std::string::npos);
  CHECK(parse_error("1\n2x\n").find("mem:2") != std::string::npos);
  CHECK_THROWS_AS(read_series(temp_file("does_not_exist")), InputError);
}

TEST_CASE("write and read round trip exactly") {
  TimeSeries x;
  x.provenance = "arfima d=0.2 seed=7";
  x.values = {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, -0.0, 12345.678901234567};
  const auto path = temp_file("roundtrip.txt");
  write_series(path, x);
  const auto y = read_series(path);
  CHECK(y.values == x.values);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == "# arfima d=0.2 seed=7");
  std::filesystem::remove(path);
}

TEST_CASE("index sidecar") {
  const auto path = temp_file("idx.txt");
  write_indices(path, {3, 17, 4000});
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "3\n17\n4000\n");
  std::filesystem::remove(path);
}

TEST_CASE("aggregation sums full windows") {
  TimeSeries x;
  x.values = {1, 2, 3, 4, 5, 6, 7};
  const auto a = aggregate(x, 3);
  REQUIRE(a.values.size() == 2);
  CHECK(a.values[0] == 6.0);
  CHECK(a.values[1] == 15.0);
  CHECK(aggregate(x, 1).values == x.values);
  CHECK_THROWS_AS(aggregate(x, 0), InputError);
  CHECK_THROWS_AS(aggregate(x, 8), InputError);
}

TEST_CASE("CSV quoting") {
  std::ostringstream out;
  CsvWriter w(out);
  w.field(std::string("plain")).field(std::string("a,b")).field(std::string("say \"hi\"")).field(1.5).field(7);
  w.end_row();
  w.row({"line\nbreak", ""});
  CHECK(out.str() == "plain,\"a,b\",\"say \"\"hi\"\"\",1.5,7\r\n\"line\nbreak\",\r\n");
}

TEST_CASE("doubles format at round-trip precision") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 1e300}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(2.0) == "2");
}

}  // TEST_SUITE
