#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "core/errors.hpp"
#include "core/harmonics.hpp"

using namespace sphfit;
using harmonics::clamp_cosine;
using harmonics::dim_harmonic;
using harmonics::gegenbauer;
using harmonics::gegenbauer_all;

namespace {

// Independent count via exact integer binomials:
// Z(d,k) = (2k + d - 1) / (k + d - 1) * C(k + d - 1, k).
std::int64_t dim_oracle(int d, int k) {
  if (k == 0) return 1;
  auto binom = [](std::int64_t n, std::int64_t r) {
    if (r > n - r) r = n - r;
    std::int64_t acc = 1;
    for (std::int64_t i = 1; i <= r; ++i) acc = acc * (n - r + i) / i;
    return acc;
  };
  return (2 * k + d - 1) * binom(k + d - 1, k) / (k + d - 1);
}

// 256-node Gauss-Legendre rule on [-1, 1], built here with its own Legendre
// recurrence so the orthogonality check does not lean on the code under test.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[static_cast<std::size_t>(i)] = t;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

} // namespace

TEST_SUITE("harmonics") {

TEST_CASE("harmonic space dimensions") {
  CHECK(dim_harmonic(2, 0) == 1);
  CHECK(dim_harmonic(2, 1) == 3);
  CHECK(dim_harmonic(2, 5) == 11);
  for (int k = 0; k <= 50; ++k) {
    CHECK(dim_harmonic(2, k) == 2 * k + 1);
    CHECK(dim_harmonic(3, k) == static_cast<std::int64_t>(k + 1) * (k + 1));
  }
  for (int d = 2; d <= 8; ++d)
    for (int k = 0; k <= 40; ++k) CHECK(dim_harmonic(d, k) == dim_oracle(d, k));
}

TEST_CASE("dimension argument validation") {
  CHECK_THROWS_AS(dim_harmonic(1, 0), InvalidArgument);
  CHECK_THROWS_AS(dim_harmonic(9, 0), InvalidArgument);
  CHECK_THROWS_AS(dim_harmonic(2, -1), InvalidArgument);
}

TEST_CASE("normalization at the endpoints") {
  for (int d = 2; d <= 8; ++d)
    for (int k = 0; k <= 64; ++k) {
      CHECK(gegenbauer(d, k, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(gegenbauer(d, k, -1.0) ==
            doctest::Approx(k % 2 == 0 ? 1.0 : -1.0).epsilon(1e-14));
    }
}

TEST_CASE("low-degree closed forms") {
  CHECK(gegenbauer(2, 2, 0.0) == doctest::Approx(-0.5).epsilon(1e-15));
  for (int i = 0; i <= 40; ++i) {
    const double t = -1.0 + 2.0 * i / 40.0;
    for (int d = 2; d <= 8; ++d) {
      CHECK(gegenbauer(d, 0, t) == 1.0);
      CHECK(gegenbauer(d, 1, t) == doctest::Approx(t).epsilon(1e-15));
    }
    CHECK(gegenbauer(2, 2, t) == doctest::Approx((3.0 * t * t - 1.0) / 2.0).epsilon(1e-13));
    CHECK(gegenbauer(2, 3, t) ==
          doctest::Approx((5.0 * t * t * t - 3.0 * t) / 2.0).epsilon(1e-13));
    const double t2 = t * t;
    CHECK(gegenbauer(2, 5, t) ==
          doctest::Approx((63.0 * t2 * t2 * t - 70.0 * t2 * t + 15.0 * t) / 8.0)
              .epsilon(1e-13));
    CHECK(gegenbauer(4, 2, t) == doctest::Approx((5.0 * t2 - 1.0) / 4.0).epsilon(1e-13));
  }
}

TEST_CASE("three-sphere values match the sine ratio") {
  for (int k = 0; k <= 20; ++k)
    for (int i = 1; i <= 30; ++i) {
      const double theta = M_PI * i / 31.0;
      const double want = std::sin((k + 1) * theta) / ((k + 1) * std::sin(theta));
      CHECK(gegenbauer(3, k, std::cos(theta)) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("values stay inside the unit band") {
  for (int d : {2, 3})
    for (int k : {1, 2, 5, 8, 13, 21, 34, 55, 64})
      for (int i = 0; i <= 2000; ++i) {
        const double t = -1.0 + 2.0 * i / 2000.0;
        CHECK(std::abs(gegenbauer(d, k, t)) <= 1.0 + 1e-12);
      }
}

TEST_CASE("batch evaluation agrees with single calls") {
  for (int d = 2; d <= 8; ++d)
    for (int i = 0; i <= 25; ++i) {
      const double t = -1.0 + 2.0 * i / 25.0;
      const std::vector<double> all = gegenbauer_all(d, 64, t);
      REQUIRE(all.size() == 65);
      for (int k = 0; k <= 64; ++k)
        CHECK(all[static_cast<std::size_t>(k)] ==
              doctest::Approx(gegenbauer(d, k, t)).epsilon(1e-13));
    }
}

TEST_CASE("cosine clamping window") {
  CHECK(clamp_cosine(1.0 + 5e-13) == 1.0);
  CHECK(clamp_cosine(-1.0 - 5e-13) == -1.0);
  CHECK(clamp_cosine(0.25) == 0.25);
  CHECK_THROWS_AS(clamp_cosine(1.0 + 1e-11), InvalidArgument);
  CHECK_THROWS_AS(clamp_cosine(-1.0 - 1e-11), InvalidArgument);
  CHECK(gegenbauer(2, 3, 1.0 + 5e-13) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(gegenbauer(2, 3, 1.0 + 1e-11), InvalidArgument);
}

TEST_CASE("orthogonality under the surface weight") {
  // d = 2: Legendre against a self-contained 256-node Gauss rule.
  std::vector<double> x, w;
  gauss_legendre(256, x, w);
  for (int j = 0; j <= 20; ++j)
    for (int k = j; k <= 20; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i)
        acc += w[i] * gegenbauer(2, j, x[i]) * gegenbauer(2, k, x[i]);
      if (j == k)
        CHECK(acc == doctest::Approx(2.0 / (2.0 * k + 1.0)).epsilon(1e-12));
      else
        CHECK(std::abs(acc) < 1e-10);
    }

  // d = 3: weight sqrt(1 - t^2) handled exactly by the Chebyshev rule of the
  // second kind, nodes cos(j pi / (n + 1)).
  const int n = 256;
  for (int j = 0; j <= 20; ++j)
    for (int k = j; k <= 20; ++k) {
      double acc = 0.0;
      for (int i = 1; i <= n; ++i) {
        const double theta = M_PI * i / (n + 1.0);
        const double s = std::sin(theta);
        acc += (M_PI / (n + 1.0)) * s * s * gegenbauer(3, j, std::cos(theta)) *
               gegenbauer(3, k, std::cos(theta));
      }
      if (j == k)
        CHECK(acc == doctest::Approx(M_PI / (2.0 * (k + 1.0) * (k + 1.0))).epsilon(1e-12));
      else
        CHECK(std::abs(acc) < 1e-10);
    }
}

} // TEST_SUITE
