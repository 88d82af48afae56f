#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "core/errors.hpp"
#include "core/geometry.hpp"
#include "core/harmonics.hpp"
#include "core/kernel.hpp"
#include "core/quadrature.hpp"
#include "core/rng.hpp"

using namespace sphfit;

namespace {

// Plain cyclic Jacobi, kept separate from the library so the eigenvalues of
// the weighted kernel matrix are cross-checked by an independent method.
std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd A) {
  const Eigen::Index n = A.rows();
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
    if (std::sqrt(off) < 1e-15 * A.norm()) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (A(p, q) == 0.0) continue;
        const double phi = 0.5 * std::atan2(2.0 * A(p, q), A(q, q) - A(p, p));
        const double c = std::cos(phi), s = std::sin(phi);
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = c * A(k, p) - s * A(k, q);
          const double akq = s * A(k, p) + c * A(k, q);
          A(k, p) = A(p, k) = akp;
          A(k, q) = A(q, k) = akq;
        }
        const double app = A(p, p), aqq = A(q, q), apq = A(p, q);
        A(p, p) = c * c * app - 2.0 * s * c * apq + s * s * aqq;
        A(q, q) = s * s * app + 2.0 * s * c * apq + c * c * aqq;
        A(p, q) = A(q, p) = 0.0;
      }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = A(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

double surface_integral(const QuadratureRule& ref, const std::function<double(const Eigen::RowVector3d&)>& f) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ref.pts.size(); ++i) acc += ref.w[i] * f(ref.pts.X.row(i));
  return acc;
}

} // namespace

TEST_SUITE("kernel") {

TEST_CASE("coefficient law") {
  KernelSpec spec{2, 1.5, 200, 1.0};
  CHECK(spec.coeff(0) == 1.0);
  CHECK(spec.coeff(1) == 0.125);
  KernelSpec sq = spec;
  sq.power = 2.0;
  CHECK(sq.coeff(1) == 0.015625);
  CHECK(sq.base_coeff(1) == 0.125);
  for (int k = 0; k <= 200; ++k)
    CHECK(sq.coeff(k) == doctest::Approx(std::pow(spec.coeff(k), 2.0)).epsilon(1e-15));
}

TEST_CASE("spec validation") {
  KernelSpec bad{2, 1.0, 200, 1.0}; // gamma must exceed d/2
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  KernelSpec bad_d{9, 5.0, 200, 1.0};
  CHECK_THROWS_AS(bad_d.validate(), InvalidArgument);
  KernelSpec bad_k{2, 1.5, -1, 1.0};
  CHECK_THROWS_AS(bad_k.validate(), InvalidArgument);
  KernelSpec bad_p{2, 1.5, 200, 0.0};
  CHECK_THROWS_AS(bad_p.validate(), InvalidArgument);
}

TEST_CASE("kernel value against a direct sum") {
  KernelSpec k0{2, 1.5, 0, 1.0};
  CHECK(kernel_value(k0, 1.0) == 1.0);
  CHECK(kernel_value(k0, -0.3) == 1.0);
  KernelSpec k1{2, 1.5, 1, 1.0};
  CHECK(kernel_value(k1, 1.0) == doctest::Approx(1.375).epsilon(1e-15));

  KernelSpec spec{2, 1.5, 200, 1.0};
  for (double t : {1.0, 0.7, 0.0, -0.4, -1.0}) {
    long double acc = 0.0L;
    for (int k = 0; k <= 200; ++k)
      acc += std::pow(1.0L + k, -3.0L) * (2.0L * k + 1.0L) *
             static_cast<long double>(harmonics::gegenbauer(2, k, t));
    CHECK(kernel_value(spec, t) == doctest::Approx(static_cast<double>(acc)).epsilon(1e-13));
  }

  // zonal_sum with caller-supplied coefficients.
  std::vector<double> c{1.0, 0.125};
  for (double t : {0.9, -0.2})
    CHECK(zonal_sum(2, c, t) == doctest::Approx(1.0 + 0.375 * t).epsilon(1e-15));
}

TEST_CASE("truncation tail bounds the dropped mass") {
  KernelSpec spec{2, 1.5, 200, 1.0};
  long double tail = 0.0L;
  for (long k = 201; k <= 2000000; ++k) tail += std::pow(1.0L + k, -3.0L) * (2.0L * k + 1.0L);
  const double bound = truncation_tail(spec, 1.0);
  CHECK(bound >= static_cast<double>(tail));
  CHECK(bound <= 1.2 * static_cast<double>(tail));
  CHECK(truncation_tail(spec, 2.0) <= bound);
  KernelSpec bigger = spec;
  bigger.kmax = 400;
  CHECK(truncation_tail(bigger, 1.0) < bound);

  KernelSpec sp3{3, 2.5, 50, 1.0};
  long double tail3 = 0.0L;
  for (long k = 51; k <= 2000000; ++k)
    tail3 += std::pow(1.0L + k, -5.0L) * (1.0L + k) * (1.0L + k);
  CHECK(truncation_tail(sp3, 1.0) >= static_cast<double>(tail3));
}

TEST_CASE("kernel matrix entries and positivity") {
  KernelSpec spec{2, 1.5, 200, 1.0};
  const double phi1 = kernel_value(spec, 1.0);

  PointSet one;
  one.X.resize(1, 3);
  one.X << 0, 0, 1;
  const Eigen::MatrixXd M1 = kernel_matrix(spec, one.X);
  REQUIRE(M1.rows() == 1);
  CHECK(M1(0, 0) == doctest::Approx(phi1).epsilon(1e-15));

  PointSet two;
  two.X.resize(2, 3);
  two.X << 0, 0, 1, 0, 0, -1;
  const Eigen::MatrixXd M2 = kernel_matrix(spec, two.X);
  long double anti = 0.0L;
  for (int k = 0; k <= 200; ++k)
    anti += std::pow(1.0L + k, -3.0L) * (2.0L * k + 1.0L) * (k % 2 == 0 ? 1.0L : -1.0L);
  CHECK(M2(0, 1) == doctest::Approx(static_cast<double>(anti)).epsilon(1e-12));
  CHECK(M2(1, 0) == M2(0, 1));
  CHECK(M2(0, 0) == doctest::Approx(phi1).epsilon(1e-15));

  for (int n : {5, 20, 60, 120, 200})
    for (std::uint64_t seed : {1ull, 2ull}) {
      const PointSet ps = random_uniform_points(n, seed);
      const Eigen::MatrixXd M = kernel_matrix(spec, ps.X);
      CHECK((M - M.transpose()).norm() <= 1e-14 * M.norm());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
      CHECK(es.eigenvalues().minCoeff() >= -1e-8 * M.trace());
    }
}

TEST_CASE("weighted kernel matrix") {
  KernelSpec spec{2, 1.5, 200, 1.0};
  const PointSet ps = random_uniform_points(10, 3);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(10);
  CHECK((weighted_kernel_matrix(spec, ps.X, ones) - kernel_matrix(spec, ps.X)).norm() <= 1e-13);

  PointSet one;
  one.X.resize(1, 3);
  one.X << 1, 0, 0;
  Eigen::VectorXd w4(1);
  w4 << 4.0;
  CHECK(weighted_kernel_matrix(spec, one.X, w4)(0, 0) ==
        doctest::Approx(4.0 * kernel_value(spec, 1.0)).epsilon(1e-15));

  Eigen::VectorXd w(10);
  Rng rng(11);
  for (int i = 0; i < 10; ++i) w[i] = rng.uniform(0.01, 0.3);
  const Eigen::MatrixXd psi = weighted_kernel_matrix(spec, ps.X, w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(psi);
  const auto jac = jacobi_eigenvalues(psi);
  const double scale = std::abs(es.eigenvalues().maxCoeff());
  for (int i = 0; i < 10; ++i)
    CHECK(std::abs(es.eigenvalues()[i] - jac[static_cast<std::size_t>(i)]) <= 1e-10 * scale);
}

TEST_CASE("quadratic forms reproduce closed-form norms") {
  KernelSpec spec{2, 1.5, 40, 1.0};

  PointSet one;
  one.X.resize(1, 3);
  one.X << 0, 0, 1;
  Eigen::VectorXd a1(1);
  a1 << 1.0;
  CHECK(filtered_quadratic_form(spec, one.X, a1, one.X, a1, transforms::power(1.0)) ==
        doctest::Approx(kernel_value(spec, 1.0)).epsilon(1e-14));

  const PointSet centers = random_uniform_points(5, 17);
  Eigen::VectorXd a(5);
  Rng rng(23);
  for (int i = 0; i < 5; ++i) a[i] = rng.normal();

  // Native norm = a^T Phi a.
  const double native =
      filtered_quadratic_form(spec, centers.X, a, centers.X, a, transforms::power(1.0));
  const Eigen::MatrixXd Phi = kernel_matrix(spec, centers.X);
  CHECK(native == doctest::Approx(a.dot(Phi * a)).epsilon(1e-12));

  // L2 norm against an exact surface integral of the square (degree 80).
  const double l2sq =
      filtered_quadratic_form(spec, centers.X, a, centers.X, a, transforms::power(2.0));
  const QuadratureRule ref = product_rule(80);
  const double numeric = surface_integral(ref, [&](const Eigen::RowVector3d& y) {
    double f = 0.0;
    for (int i = 0; i < 5; ++i)
      f += a[i] * kernel_value(spec, std::clamp(y.dot(centers.X.row(i)), -1.0, 1.0));
    return f * f;
  });
  CHECK(l2sq == doctest::Approx(numeric).epsilon(1e-11));

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(5);
  CHECK(filtered_quadratic_form(spec, centers.X, zero, centers.X, zero,
                                transforms::power(2.0)) == 0.0);
  Eigen::VectorXd short_a(4);
  short_a.setOnes();
  CHECK_THROWS_AS(filtered_quadratic_form(spec, centers.X, short_a, centers.X, a,
                                          transforms::power(1.0)),
                  InvalidArgument);
}

TEST_CASE("coefficient transforms compose") {
  KernelSpec spec{2, 1.5, 8, 1.0};
  const double lam = 0.01;
  const auto ratio = transforms::tikhonov_ratio(lam);
  const auto res = transforms::resolvent_power(lam, 0.5);
  const auto prod = transforms::multiply(transforms::power(1.0), res);
  for (int k = 0; k <= 8; ++k) {
    const double phik = spec.base_coeff(k);
    CHECK(ratio(k, phik) == doctest::Approx(phik / (phik + lam)).epsilon(1e-15));
    CHECK(res(k, phik) == doctest::Approx(std::pow(phik + lam, -0.5)).epsilon(1e-15));
    CHECK(prod(k, phik) == doctest::Approx(phik * std::pow(phik + lam, -0.5)).epsilon(1e-15));
  }
  const auto tc = transformed_coeffs(spec, transforms::power(2.0));
  REQUIRE(tc.size() == 9);
  CHECK(tc[1] == doctest::Approx(0.015625).epsilon(1e-15));
}

TEST_CASE("zonal average of a harmonic projects onto one degree") {
  KernelSpec spec{2, 1.5, 30, 1.0};
  const QuadratureRule ref = product_rule(42);
  const PointSet probes = random_uniform_points(3, 5);
  Eigen::RowVector3d e(0.0, 0.0, 1.0);
  for (int k = 0; k <= 10; ++k) {
    for (Eigen::Index p = 0; p < probes.size(); ++p) {
      const Eigen::RowVector3d x = probes.X.row(p);
      const double lhs = surface_integral(ref, [&](const Eigen::RowVector3d& y) {
        return kernel_value(spec, std::clamp(x.dot(y), -1.0, 1.0)) *
               harmonics::gegenbauer(2, k, std::clamp(e.dot(y), -1.0, 1.0));
      });
      const double rhs =
          spec.coeff(k) * harmonics::gegenbauer(2, k, std::clamp(x.dot(e), -1.0, 1.0));
      CHECK(std::abs(lhs - rhs) < 1e-10);
      if (std::abs(rhs) > 1e-6) CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    }
  }
}

} // TEST_SUITE
