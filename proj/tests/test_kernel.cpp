#include <doctest.h>

#include <cmath>
#include <set>

#include "mottlab/kernel.hpp"
#include "mottlab/rng.hpp"

using namespace mottlab;

TEST_CASE("conductance vanishes on coincident points") {
  const auto ma = ConductanceKernel::miller_abrahams(2.0, 1.0);
  const Point x{0.3, -1.2, 0.0};
  CHECK(ma(x, x, 0.4, -0.1) == 0.0);
  CHECK(ConductanceKernel::nearest_neighbor(1.0, 1.5)(x, x, 0.0, 0.0) == 0.0);
}

TEST_CASE("Miller-Abrahams closed forms") {
  SUBCASE("beta = 0 removes the energy term") {
    const auto k = ConductanceKernel::miller_abrahams(0.0, 2.0);
    CHECK(k({0, 0, 0}, {1, 0, 0}, 0.7, -0.9) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(k({0, 0, 0}, {1, 0, 0}, 0.7, -0.9) == doctest::Approx(0.3678794).epsilon(1e-7));
  }
  SUBCASE("equal marks") {
    const auto k = ConductanceKernel::miller_abrahams(1.7, 0.8);
    const Point x{0.1, 0.2, 0.0};
    const Point y{1.4, -0.6, 0.0};
    const double r = distance(x, y);
    for (double e : {-0.9, -0.2, 0.0, 0.5}) {
      CHECK(k(x, y, e, e) == doctest::Approx(std::exp(-2.0 * r / 0.8 - 1.7 * std::abs(e))));
    }
  }
  SUBCASE("opposite signs") {
    const auto k = ConductanceKernel::miller_abrahams(2.0, 1.0);
    // |Ex| + |Ey| + |Ex - Ey| = 0.3 + 0.5 + 0.8
    CHECK(k({0, 0, 0}, {0.5, 0, 0}, 0.3, -0.5) == doctest::Approx(std::exp(-1.0 - 1.6)));
  }
}

TEST_CASE("kernel symmetry and positivity on random inputs") {
  SplitMix64 rng(7);
  const auto k = ConductanceKernel::miller_abrahams(3.0, 1.3);
  for (int t = 0; t < 1000; ++t) {
    const Point x{4 * uniform01(rng), 4 * uniform01(rng), 4 * uniform01(rng)};
    const Point y{4 * uniform01(rng), 4 * uniform01(rng), 4 * uniform01(rng)};
    const double ex = 2 * uniform01(rng) - 1;
    const double ey = 2 * uniform01(rng) - 1;
    CHECK(k(x, y, ex, ey) == k(y, x, ey, ex));
    CHECK(k(x, y, ex, ey) > 0.0);
  }
}

TEST_CASE("weights are non-increasing in beta") {
  SplitMix64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const Point x{uniform01(rng), uniform01(rng), 0};
    const Point y{uniform01(rng), uniform01(rng), 0};
    const double ex = 2 * uniform01(rng) - 1;
    const double ey = 2 * uniform01(rng) - 1;
    double prev = ConductanceKernel::miller_abrahams(0.0, 1.0)(x, y, ex, ey);
    for (double beta = 0.5; beta <= 8.0; beta += 0.5) {
      const double c = ConductanceKernel::miller_abrahams(beta, 1.0)(x, y, ex, ey);
      CHECK(c <= prev);
      prev = c;
    }
  }
}

TEST_CASE("cutoff radius and envelope") {
  const auto k = ConductanceKernel::miller_abrahams(1.0, 1.0);
  const double R = k.cutoff_radius(1e-14);
  CHECK(std::exp(-2.0 * R) <= 1e-14 * (1 + 1e-12));
  CHECK(k.distance_envelope(R) == doctest::Approx(1e-14));
  CHECK(k.decay_rate() == doctest::Approx(2.0));

  const auto nn = ConductanceKernel::nearest_neighbor(2.0, 1.0);
  CHECK(nn({0, 0, 0}, {1, 0, 0}, 0, 0) == 2.0);
  CHECK(nn({0, 0, 0}, {1.01, 0, 0}, 0, 0) == 0.0);
  CHECK(nn.distance_envelope(1.5) == 0.0);
}

TEST_CASE("derived seeds are distinct and reproducible") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(derive_seed(42, i));
  CHECK(seen.size() == 10000);
  CHECK(derive_seed(42, 3) == derive_seed(42, 3));
  CHECK(derive_seed(42, 3) != derive_seed(43, 3));
}

TEST_CASE("uniform draws stay in range") {
  SplitMix64 rng(3);
  for (int t = 0; t < 100000; ++t) {
    const double u = uniform01(rng);
    const double v = uniform_open0(rng);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(v > 0.0);
    REQUIRE(v <= 1.0);
  }
}
