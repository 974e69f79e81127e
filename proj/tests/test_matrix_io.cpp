#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "bcgram/matrix_io.hpp"
#include "bcgram/rng.hpp"

using namespace bcgram;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("bcgram_test_" + name);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("read_matrix parses values and missing tokens") {
  auto p = temp_file("basic.csv");
  write_text(p, "1,2\n3,NA\n");
  ObservedMatrix m = read_matrix(p.string());
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 2);
  CHECK(m.values(0, 0) == 1.0);
  CHECK(m.values(0, 1) == 2.0);
  CHECK(m.values(1, 0) == 3.0);
  CHECK(m.values(1, 1) == 0.0);  // zero-filled
  CHECK(m.mask(1, 1) == 0.0);
  CHECK(m.mask(0, 0) == 1.0);
}

TEST_CASE("complete file yields all-ones mask") {
  auto p = temp_file("complete.csv");
  write_text(p, "1,2\n3,4\n");
  ObservedMatrix m = read_matrix(p.string());
  CHECK(m.mask.minCoeff() == 1.0);
}

TEST_CASE("ragged rows and bad cells are reported with coordinates") {
  auto p = temp_file("ragged.csv");
  write_text(p, "1,2\n3\n");
  CHECK_THROWS_WITH(read_matrix(p.string()), Catch::Matchers::ContainsSubstring("row 1"));

  write_text(p, "1,2\n3,zebra\n");
  CHECK_THROWS_WITH(read_matrix(p.string()),
                    Catch::Matchers::ContainsSubstring("row 1, column 1"));
}

TEST_CASE("write_matrix emits tokens for masked cells") {
  auto p = temp_file("write.csv");
  Eigen::MatrixXd values(2, 1), mask(2, 1);
  values << 0.5, 0.0;
  mask << 1, 0;
  write_matrix(make_observed(values, mask), p.string());
  std::ifstream in(p);
  std::string line1, line2;
  std::getline(in, line1);
  std::getline(in, line2);
  CHECK(line1 == "0.5");
  CHECK(line2 == "NA");
}

TEST_CASE("write then read is the identity on values and mask") {
  std::mt19937_64 rng = derive_stream(7, 1);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd values(50, 80), mask(50, 80);
    for (Eigen::Index i = 0; i < 50; ++i)
      for (Eigen::Index s = 0; s < 80; ++s) {
        mask(i, s) = unif(rng) < 0.7 ? 1.0 : 0.0;
        values(i, s) = mask(i, s) ? normal(rng) : 0.0;
      }
    ObservedMatrix m = make_observed(values, mask);
    auto p = temp_file("roundtrip.csv");
    write_matrix(m, p.string());
    ObservedMatrix back = read_matrix(p.string());
    REQUIRE(back.values == m.values);  // bit-exact
    REQUIRE(back.mask == m.mask);
  }
}

TEST_CASE("make_observed enforces the zero-fill convention") {
  Eigen::MatrixXd values(2, 2), mask(2, 2);
  values << 1, 2, 3, 4;
  mask << 1, 0, 1, 1;
  ObservedMatrix m = make_observed(values, mask);
  CHECK(m.values(0, 1) == 0.0);
  mask(0, 1) = 0.5;
  CHECK_THROWS_AS(make_observed(values, mask), std::invalid_argument);
}

TEST_CASE("make_covariance rejects asymmetric input") {
  Eigen::MatrixXd k(2, 2);
  k << 1, 0.5, 0.2, 1;
  CHECK_THROWS_AS(make_covariance(k), std::invalid_argument);
  k(1, 0) = 0.5;
  CHECK_NOTHROW(make_covariance(k));
}
