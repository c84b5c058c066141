#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "mixedlm/dataset.hpp"
#include "mixedlm/rng.hpp"

using namespace mixedlm;

namespace {

std::string temp_path(const std::string& name) {
  return "mixedlm_test_" + name + ".csv";
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

struct FileGuard {
  std::string path;
  ~FileGuard() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("parse_csv handles quoting, CRLF, and embedded separators") {
  const CsvTable t = parse_csv(
      "name,value,note\r\n"
      "alpha,1.5,\"a, b\"\n"
      "\"be\"\"ta\",2,\"line\nbreak\"\n");
  REQUIRE(t.header.size() == 3);
  CHECK(t.header[0] == "name");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][2] == "a, b");
  CHECK(t.rows[1][0] == "be\"ta");
  CHECK(t.rows[1][2] == "line\nbreak");
  CHECK(t.column("value") == 1);
  CHECK(t.column("missing") == -1);
}

TEST_CASE("parse_csv reports the line of a malformed record") {
  try {
    parse_csv("a,b\n1,2\n3\n");
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_csv("a,b\n\"unterminated\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_csv(""), std::invalid_argument);
}

TEST_CASE("numbers round-trip bitwise through format_double") {
  Rng rng(2718);
  for (int i = 0; i < 200; ++i) {
    const double x = std::exp(20.0 * (rng.uniform() - 0.5)) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const std::string s = format_double(x);
    CHECK(std::stod(s) == x);
  }
  CHECK(std::stod(format_double(0.1)) == 0.1);
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("write_csv then read_csv preserves tables") {
  const std::string path = temp_path("roundtrip");
  FileGuard guard{path};
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{"1.25", "plain"}, {format_double(1.0 / 3.0), "needs,quote"}, {"x", "multi\nline"}};
  write_csv(path, t);
  const CsvTable back = read_csv(path);
  REQUIRE(back.header == t.header);
  REQUIRE(back.rows == t.rows);
}

TEST_CASE("load_dataset one-hot encodes factors in first-appearance order") {
  const std::string path = temp_path("factors");
  FileGuard guard{path};
  write_file(path,
             "y,x1,x2,zone,block\n"
             "1.0,0.5,2.0,north,a\n"
             "2.0,1.5,1.0,south,b\n"
             "3.0,2.5,0.0,north,a\n"
             "4.0,3.5,3.0,east,b\n"
             "5.0,4.5,1.0,south,a\n"
             "6.0,5.5,2.0,north,b\n");
  DatasetSpec spec;
  spec.csv_path = path;
  spec.response_col = "y";
  spec.fixed_cols = {"x1", "x2"};
  spec.z_factor_col = "zone";
  spec.w_factor_col = "block";
  const LoadedDataset ds = load_dataset(spec);
  CHECK(ds.data.n() == 6);
  CHECK(ds.data.p() == 2);
  REQUIRE(ds.z_levels == std::vector<std::string>{"north", "south", "east"});
  REQUIRE(ds.w_levels == std::vector<std::string>{"a", "b"});
  // Row 0: north/a; row 3: east/b.
  CHECK(ds.data.z(0, 0) == 1.0);
  CHECK(ds.data.z(0, 1) == 0.0);
  CHECK(ds.data.z(3, 2) == 1.0);
  CHECK(ds.data.w(3, 1) == 1.0);
  CHECK(ds.z_index == std::vector<int>{0, 1, 0, 2, 1, 0});
  CHECK(ds.w_index == std::vector<int>{0, 1, 0, 1, 0, 1});
  CHECK(ds.data.y[4] == 5.0);
  CHECK(ds.data.x(2, 0) == 2.5);

  // Without a second factor the W block is empty.
  DatasetSpec no_w = spec;
  no_w.w_factor_col.reset();
  const LoadedDataset ds2 = load_dataset(no_w);
  CHECK(ds2.data.r() == 0);
  CHECK(ds2.w_levels.empty());
  CHECK(ds2.w_index == std::vector<int>{-1, -1, -1, -1, -1, -1});
}

TEST_CASE("standardization centers and rescales the fixed columns") {
  const std::string path = temp_path("standardize");
  FileGuard guard{path};
  write_file(path,
             "y,x1,g\n"
             "1,10,a\n"
             "2,20,a\n"
             "3,30,b\n"
             "4,40,b\n");
  DatasetSpec spec;
  spec.csv_path = path;
  spec.response_col = "y";
  spec.fixed_cols = {"x1"};
  spec.z_factor_col = "g";
  spec.standardize_fixed = true;
  const LoadedDataset ds = load_dataset(spec);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < 4; ++i) {
    sum += ds.data.x(i, 0);
    sq += ds.data.x(i, 0) * ds.data.x(i, 0);
  }
  CHECK(std::abs(sum) <= 1e-12);
  CHECK(sq == doctest::Approx(4.0).epsilon(1e-12));
  // Centered (-15,-5,5,15) scaled so the squared norm is n: order preserved.
  CHECK(ds.data.x(0, 0) < ds.data.x(1, 0));
  CHECK(ds.data.x(0, 0) == doctest::Approx(-3.0 * ds.data.x(2, 0)).epsilon(1e-12));
}

TEST_CASE("load_dataset reports precise cell locations for bad values") {
  const std::string path = temp_path("badvalue");
  FileGuard guard{path};
  write_file(path,
             "y,x1,g\n"
             "1,2,a\n"
             ",3,b\n"
             "2,4,a\n"
             "5,oops,b\n");
  DatasetSpec spec;
  spec.csv_path = path;
  spec.response_col = "y";
  spec.fixed_cols = {"x1"};
  spec.z_factor_col = "g";
  try {
    load_dataset(spec);
    FAIL("expected a missing-value error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("missing") != std::string::npos);
    CHECK(msg.find("y") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);  // 1-based data row
  }

  // Fix the missing value; the non-numeric one must then surface.
  write_file(path,
             "y,x1,g\n"
             "1,2,a\n"
             "9,3,b\n"
             "2,4,a\n"
             "5,oops,b\n");
  try {
    load_dataset(spec);
    FAIL("expected a non-numeric error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("non-numeric") != std::string::npos);
    CHECK(msg.find("x1") != std::string::npos);
    CHECK(msg.find("4") != std::string::npos);
  }
}

TEST_CASE("load_dataset rejects absent columns and constant standardized columns") {
  const std::string path = temp_path("badspec");
  FileGuard guard{path};
  write_file(path,
             "y,x1,g\n"
             "1,7,a\n"
             "2,7,a\n"
             "3,7,b\n");
  DatasetSpec spec;
  spec.csv_path = path;
  spec.response_col = "y";
  spec.fixed_cols = {"nope"};
  spec.z_factor_col = "g";
  CHECK_THROWS_AS(load_dataset(spec), std::invalid_argument);

  spec.fixed_cols = {"x1"};
  spec.standardize_fixed = true;
  try {
    load_dataset(spec);
    FAIL("expected a constant-column error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("constant") != std::string::npos);
  }
  spec.standardize_fixed = false;
  CHECK_NOTHROW(load_dataset(spec));
}

TEST_CASE("read_csv rejects a missing file") {
  CHECK_THROWS_AS(read_csv("definitely_not_here_428913.csv"), std::invalid_argument);
}

}  // TEST_SUITE
