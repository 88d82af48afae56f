#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/geometry.hpp"
#include "core/harmonics.hpp"
#include "core/kernel.hpp"
#include "core/quadrature.hpp"
#include "core/rng.hpp"

using namespace sphfit;

namespace {

PointSet octahedron() {
  PointSet ps;
  ps.X.resize(6, 3);
  ps.X << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
  return ps;
}

PointSet tetrahedron() {
  PointSet ps;
  ps.X.resize(4, 3);
  const double c = 1.0 / std::sqrt(3.0);
  ps.X << c, c, c, c, -c, -c, -c, c, -c, -c, -c, c;
  return ps;
}

// Pairwise Gegenbauer double sum, the definition written out directly.
double pairwise_discrepancy(const PointSet& ps, const Eigen::VectorXd& w, int s) {
  const double mass = w.sum() - 1.0;
  double E = mass * mass;
  std::vector<double> P(static_cast<std::size_t>(s) + 1);
  for (Eigen::Index i = 0; i < ps.size(); ++i)
    for (Eigen::Index j = 0; j < ps.size(); ++j) {
      const double t = harmonics::clamp_cosine(ps.X.row(i).dot(ps.X.row(j)));
      harmonics::gegenbauer_batch(2, s, t, P.data());
      for (int k = 1; k <= s; ++k)
        E += (2.0 * k + 1.0) * w[i] * w[j] * P[static_cast<std::size_t>(k)];
    }
  return E;
}

// Normalized-measure monomial integral over the sphere: zero for any odd
// exponent, else (a-1)!!(b-1)!!(c-1)!! / (a+b+c+1)!!.
double monomial_integral(int a, int b, int c) {
  if (a % 2 || b % 2 || c % 2) return 0.0;
  auto dfact = [](int m) {
    double acc = 1.0;
    for (int v = m; v > 1; v -= 2) acc *= v;
    return acc;
  };
  return dfact(a - 1) * dfact(b - 1) * dfact(c - 1) / dfact(a + b + c + 1);
}

double integrate_monomial(const QuadratureRule& rule, int a, int b, int c) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < rule.pts.size(); ++i)
    acc += rule.w[i] * std::pow(rule.pts.X(i, 0), a) * std::pow(rule.pts.X(i, 1), b) *
           std::pow(rule.pts.X(i, 2), c);
  return acc;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

} // namespace

TEST_SUITE("quadrature") {

TEST_CASE("exactness functional closed forms") {
  const PointSet oct = octahedron();
  const Eigen::VectorXd w6 = Eigen::VectorXd::Constant(6, 1.0 / 6.0);
  CHECK(design_discrepancy(oct, w6, 3) <= 1e-14);

  PointSet one;
  one.X.resize(1, 3);
  one.X << 0, 0, 1;
  Eigen::VectorXd w1(1);
  w1 << 1.0;
  CHECK(design_discrepancy(one, w1, 1) == doctest::Approx(3.0).epsilon(1e-12));

  // Degree zero only checks the mass.
  Rng rng(5);
  Eigen::VectorXd wr(6);
  for (int i = 0; i < 6; ++i) wr[i] = rng.uniform(0.1, 1.0);
  wr /= wr.sum();
  CHECK(design_discrepancy(oct, wr, 0) <= 1e-28);

  // Nondecreasing in the degree.
  const PointSet fib = fibonacci_points(100);
  const Eigen::VectorXd we = Eigen::VectorXd::Constant(100, 0.01);
  double prev = 0.0;
  for (int s = 0; s <= 12; ++s) {
    const double E = design_discrepancy(fib, we, s);
    CHECK(E >= prev - 1e-18);
    prev = E;
  }

  // The moment form agrees with the pairwise double sum.
  const PointSet ps = random_uniform_points(20, 9);
  Eigen::VectorXd w(20);
  for (int i = 0; i < 20; ++i) w[i] = rng.uniform(0.0, 0.1);
  for (int s : {1, 2, 5, 9})
    CHECK(design_discrepancy(ps, w, s) ==
          doctest::Approx(pairwise_discrepancy(ps, w, s)).epsilon(1e-11));

  CHECK_THROWS_AS(design_discrepancy(oct, w1, 1), InvalidArgument); // length mismatch
  CHECK_THROWS_AS(design_discrepancy(oct, w6, -1), InvalidArgument);
}

TEST_CASE("solved weights on the octahedron") {
  const QuadratureRule rule = compute_weights(octahedron(), 3);
  REQUIRE(rule.w.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(rule.w[i] == doctest::Approx(1.0 / 6.0).epsilon(1e-10));
  CHECK(rule.residual <= 1e-20);
  CHECK(rule.degree == 3);
  CHECK(rule.w.sum() == doctest::Approx(1.0).epsilon(1e-12));

  for (int a = 0; a <= 3; ++a)
    for (int b = 0; a + b <= 3; ++b)
      for (int c = 0; a + b + c <= 3; ++c)
        CHECK(integrate_monomial(rule, a, b, c) ==
              doctest::Approx(monomial_integral(a, b, c)).epsilon(1e-12));
}

TEST_CASE("solved weights on a fibonacci lattice") {
  const QuadratureRule rule = compute_weights(fibonacci_points(400), 10);
  CHECK(rule.residual < 1e-20);
  CHECK(is_dtype(rule, 5.0));
  CHECK(rule.w.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rule.w.minCoeff() > 0.0);
  CHECK(design_discrepancy(rule.pts, rule.w, 10) < 1e-20);
  CHECK(max_exact_degree(rule, 1e-12) >= 10);
}

TEST_CASE("random polynomial exactness") {
  const QuadratureRule rule = compute_weights(fibonacci_points(400), 10);
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const PointSet z = random_uniform_points(1, 1000 + static_cast<std::uint64_t>(trial));
    std::vector<double> c(11);
    for (int k = 0; k <= 10; ++k) c[static_cast<std::size_t>(k)] = rng.normal();
    double quad = 0.0;
    for (Eigen::Index i = 0; i < rule.pts.size(); ++i) {
      const double t = harmonics::clamp_cosine(rule.pts.X.row(i).dot(z.X.row(0)));
      for (int k = 0; k <= 10; ++k)
        quad += rule.w[i] * c[static_cast<std::size_t>(k)] * harmonics::gegenbauer(2, k, t);
    }
    const double exact = c[0]; // all higher zonal degrees integrate to zero
    double l2sq = 0.0;
    for (int k = 0; k <= 10; ++k)
      l2sq += c[static_cast<std::size_t>(k)] * c[static_cast<std::size_t>(k)] / (2.0 * k + 1.0);
    CHECK(std::abs(quad - exact) <= 1e-8);
    CHECK(std::abs(quad - exact) <= 10.0 * std::sqrt(rule.residual) * std::sqrt(l2sq) + 1e-14);
  }
}

TEST_CASE("infeasible degrees are reported") {
  CHECK_THROWS_AS(compute_weights(fibonacci_points(9), 10), InfeasibleDegree);
}

TEST_CASE("argument validation") {
  PointSet empty;
  empty.X.resize(0, 3);
  CHECK_THROWS_AS(compute_weights(empty, 3), InvalidArgument);
  CHECK_THROWS_AS(compute_weights(octahedron(), -1), InvalidArgument);
  ComputeWeightsOptions bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(compute_weights(octahedron(), 3, bad), InvalidArgument);
}

TEST_CASE("equal weights and the density check") {
  const PointSet fib = fibonacci_points(50);
  const QuadratureRule rule = equal_weight_rule(fib, 2);
  CHECK(rule.degree == 2);
  for (int i = 0; i < 50; ++i) CHECK(rule.w[i] == 0.02);
  CHECK(rule.residual == doctest::Approx(design_discrepancy(fib, rule.w, 2)).epsilon(1e-15));
  CHECK(is_dtype(rule));

  QuadratureRule lumpy = rule;
  lumpy.w[0] = 6.0 / 50.0;
  CHECK_FALSE(is_dtype(lumpy, 5.0));
  lumpy.w[0] = 0.0;
  CHECK_FALSE(is_dtype(lumpy));
}

TEST_CASE("largest certified degree of small designs") {
  CHECK(max_exact_degree(equal_weight_rule(octahedron(), 3)) == 3);
  CHECK(max_exact_degree(equal_weight_rule(tetrahedron(), 2)) == 2);
  PointSet one;
  one.X.resize(1, 3);
  one.X << 0, 0, 1;
  CHECK(max_exact_degree(equal_weight_rule(one, 0)) == 0);
}

TEST_CASE("reference product rule") {
  const QuadratureRule ref = product_rule(8);
  CHECK(ref.w.sum() == doctest::Approx(1.0).epsilon(1e-14));
  for (int a = 0; a <= 8; ++a)
    for (int b = 0; a + b <= 8; ++b)
      for (int c = 0; a + b + c <= 8; ++c)
        CHECK(integrate_monomial(ref, a, b, c) ==
              doctest::Approx(monomial_integral(a, b, c)).epsilon(1e-13));
  // Zonal polynomials of degree 1..8 have mean zero.
  const Eigen::RowVector3d e(0.36, -0.48, 0.8);
  for (int k = 1; k <= 8; ++k) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < ref.pts.size(); ++i)
      acc += ref.w[i] *
             harmonics::gegenbauer(2, k, harmonics::clamp_cosine(ref.pts.X.row(i).dot(e)));
    CHECK(std::abs(acc) < 1e-14);
  }
}

TEST_CASE("rule persistence") {
  const QuadratureRule rule = compute_weights(fibonacci_points(64), 6);
  save_rule(rule, "/tmp/sphfit_rule_a.csv", "/tmp/sphfit_rule_a.json");
  save_rule(rule, "/tmp/sphfit_rule_b.csv", "/tmp/sphfit_rule_b.json");
  CHECK(slurp("/tmp/sphfit_rule_a.csv") == slurp("/tmp/sphfit_rule_b.csv"));
  CHECK(slurp("/tmp/sphfit_rule_a.json") == slurp("/tmp/sphfit_rule_b.json"));

  const QuadratureRule back = load_rule("/tmp/sphfit_rule_a.csv", "/tmp/sphfit_rule_a.json");
  REQUIRE(back.w.size() == 64);
  CHECK(back.degree == 6);
  CHECK(back.residual == rule.residual);
  for (int i = 0; i < 64; ++i) {
    CHECK(back.w[i] == rule.w[i]);
    CHECK((back.pts.X.row(i) - rule.pts.X.row(i)).norm() <= 1e-14);
  }

  {
    std::ofstream f("/tmp/sphfit_rule_bad.csv");
    f << "x,y,z,w\n0,0,1,-0.5\n";
  }
  CHECK_THROWS_AS(load_rule("/tmp/sphfit_rule_bad.csv", "/tmp/sphfit_rule_a.json"),
                  NumericalError);
  CHECK_THROWS_AS(load_rule("/tmp/sphfit_rule_missing.csv", "/tmp/sphfit_rule_a.json"), IoError);
}

TEST_CASE("discrete norm controlled by the continuous norms") {
  const KernelSpec spec{2, 1.5, 30, 1.0};
  const QuadratureRule rule = compute_weights(fibonacci_points(400), 10);
  const double lambda = std::pow(10.0, -3.0); // rule degree to the -2 gamma
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const PointSet centers = random_uniform_points(10, 500 + static_cast<std::uint64_t>(trial));
    Eigen::VectorXd a(10);
    for (int i = 0; i < 10; ++i) a[i] = rng.normal();
    const Eigen::MatrixXd G = zonal_gram(2, kernel_coeffs(spec), rule.pts.X, centers.X);
    const Eigen::VectorXd fx = G * a;
    const double discrete = std::sqrt(rule.w.dot(fx.cwiseProduct(fx)));
    const double l2 = std::sqrt(
        filtered_quadratic_form(spec, centers.X, a, centers.X, a, transforms::power(2.0)));
    const double native = std::sqrt(
        filtered_quadratic_form(spec, centers.X, a, centers.X, a, transforms::power(1.0)));
    CHECK(discrete <= 2.0 * (l2 + std::sqrt(lambda) * native));
  }
}

} // TEST_SUITE
