#include "pnerw/lattice.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using namespace pnerw;

TEST_CASE("project_complement zeroes subset coordinates") {
  CoordinateSubset d1({1}, 4);
  CHECK(project_complement(std::vector<std::int64_t>{1, 0, 0, 0}, d1) ==
        std::vector<std::int64_t>{0, 0, 0, 0});
  CHECK(project_complement(std::vector<std::int64_t>{0, 0, 1, 0}, d1) ==
        std::vector<std::int64_t>{0, 0, 1, 0});
  CoordinateSubset d12({1, 2}, 4);
  CHECK(project_complement(std::vector<std::int64_t>{1, 1, 0, 0}, d12) ==
        std::vector<std::int64_t>{0, 0, 0, 0});
}

TEST_CASE("project_complement rejects dimension mismatch") {
  CoordinateSubset subset({1}, 4);
  CHECK_THROWS_AS(project_complement(std::vector<std::int64_t>{1, 0}, subset), ConfigError);
}

TEST_CASE("project_complement is idempotent") {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<std::int64_t> coord(-1000000, 1000000);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + static_cast<int>(gen() % 7);
    std::vector<int> axes;
    for (int a = 1; a <= d; ++a)
      if (gen() % 2) axes.push_back(a);
    if (axes.empty()) axes.push_back(1);
    CoordinateSubset subset(axes, d);
    std::vector<std::int64_t> v(d);
    for (auto& x : v) x = coord(gen);
    const auto once = project_complement(v, subset);
    CHECK(project_complement(once, subset) == once);
  }
}

TEST_CASE("dot products match hand values") {
  CHECK(dot(Direction::axis(2, 1), std::vector<std::int64_t>{3, -1}) == doctest::Approx(3.0));
  CHECK(dot(Direction::axis(2, 1), std::vector<std::int64_t>{0, 5}) == doctest::Approx(0.0));
  Direction diag(std::vector<double>{1.0, 1.0, 0.0, 0.0});
  CHECK(dot(diag, std::vector<std::int64_t>{1, 1, 0, 0}) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("dot is additive to 1e-12 on bounded integer vectors") {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<std::int64_t> coord(-1000000, 1000000);
  std::uniform_real_distribution<double> comp(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + static_cast<int>(gen() % 7);
    std::vector<double> dir(d);
    for (auto& x : dir) x = comp(gen) + 1e-3;
    Direction ell(dir);
    std::vector<std::int64_t> a(d), b(d), ab(d);
    for (int j = 0; j < d; ++j) {
      a[j] = coord(gen);
      b[j] = coord(gen);
      ab[j] = a[j] + b[j];
    }
    CHECK(std::abs(dot(ell, ab) - (dot(ell, a) + dot(ell, b))) <= 1e-12 * (1.0 + std::abs(dot(ell, ab))));
  }
}

TEST_CASE("directions are normalized and reject near-zero input") {
  Direction d(std::vector<double>{3.0, 4.0});
  double n2 = 0.0;
  for (int j = 0; j < 2; ++j) n2 += d[j] * d[j];
  CHECK(std::abs(std::sqrt(n2) - 1.0) <= 1e-12);
  CHECK_THROWS_AS(Direction(std::vector<double>{1e-10, 0.0}), ConfigError);
  CHECK_THROWS_AS(Direction::axis(4, 5), ConfigError);
  CHECK_THROWS_AS(Direction::axis(4, 0), ConfigError);
}

TEST_CASE("coordinate subsets validate indices") {
  CHECK_THROWS_AS(CoordinateSubset({0}, 4), ConfigError);
  CHECK_THROWS_AS(CoordinateSubset({5}, 4), ConfigError);
  CHECK_THROWS_AS(CoordinateSubset({1, 1}, 4), ConfigError);
  CHECK_THROWS_AS(CoordinateSubset({}, 4), ConfigError);
  CoordinateSubset ok({2, 4}, 5);
  CHECK(ok.k() == 2);
  CHECK(ok.contains(2));
  CHECK_FALSE(ok.contains(3));
}

TEST_CASE("cone constraints need d >= 4 and k <= d - 3") {
  CHECK_NOTHROW(CoordinateSubset({1}, 4).require_cone_constraints());
  CHECK_THROWS_AS(CoordinateSubset({1, 2}, 4).require_cone_constraints(), ConfigError);
  CHECK_THROWS_AS(CoordinateSubset({1}, 3).require_cone_constraints(), ConfigError);
  CHECK_NOTHROW(CoordinateSubset({1, 3}, 5).require_cone_constraints());
}

TEST_CASE("lattice sites keep exact 64-bit identity") {
  LatticeSite a(3), b(3);
  a[0] = 1234567890123;
  b[0] = 1234567890123;
  CHECK(a == b);
  b[2] = -1;
  CHECK_FALSE(a == b);
  CHECK(LatticeSite::origin(3).is_origin());
  CHECK_THROWS_AS(LatticeSite(1), ConfigError);
  CHECK_THROWS_AS(LatticeSite(9), ConfigError);
}
