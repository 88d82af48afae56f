#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "core/estimator.hpp"
#include "core/geometry.hpp"
#include "core/kernel.hpp"
#include "core/quadrature.hpp"
#include "core/rng.hpp"

namespace sphfit {

// Synthetic ground-truth description.  A KernelCombo target is a finite
// expansion sum_j b_j phi^alpha(z_j . x), which lies exactly in the
// smoothness class with exponent alpha and has closed-form norms.  A
// HarmonicPoly target is sum_k u_k P_k(axis . x), a fixed-degree polynomial
// that belongs to every smoothness class.
struct TargetSpec {
  enum class Kind { KernelCombo, HarmonicPoly };
  Kind kind = Kind::KernelCombo;

  // KernelCombo fields.  When `b` is empty, `n_centers` random centers and
  // standard normal coefficients are drawn from `seed` and rescaled so the
  // alpha-norm equals `radius`.
  double alpha = 1.0;
  int n_centers = 16;
  std::uint64_t seed = 7;
  double radius = 1.0;
  PointSet centers; // optional explicit centers
  Eigen::VectorXd b;

  // HarmonicPoly fields: coeffs[k] multiplies P_k(axis . x).
  Eigen::Vector3d axis{0.0, 0.0, 1.0};
  std::vector<double> poly_coeffs;
};

// Evaluator plus exact-norm provider for a target function.  All norms and
// inner products are per-degree sums, so error norms against fitted kernel
// expansions are exact (up to the shared truncation) rather than numeric
// surface integrals.
class Target {
public:
  Eigen::VectorXd evaluate(const PointSet& queries) const;

  // Smoothness exponent: alpha for a combo, infinity sentinel for a
  // polynomial (it lies in every class).
  double alpha() const { return alpha_; }

  // || f* ||^2 in the graded norm with exponent beta (beta = 0 is L2,
  // beta = 1 the native norm of the fitting kernel).
  double norm_sq(double beta) const;

  // Vector r with <f_hat, f*>_beta = a . r for a kernel expansion with
  // coefficients a over `centers`.
  Eigen::VectorXd cross_vector(const PointSet& centers, double beta) const;

  double cross(const Fitted& f, double beta) const;

  const KernelSpec& spec() const { return spec_; }
  const PointSet& combo_centers() const { return centers_; }
  const Eigen::VectorXd& combo_coeffs() const { return b_; }

private:
  friend Target make_target(const TargetSpec& ts, const KernelSpec& spec);

  KernelSpec spec_;
  TargetSpec::Kind kind_ = TargetSpec::Kind::KernelCombo;
  double alpha_ = 1.0;
  PointSet centers_;
  Eigen::VectorXd b_;
  Eigen::Vector3d axis_{0.0, 0.0, 1.0};
  std::vector<double> poly_coeffs_;
};

// Builds the evaluator; requires alpha >= 1 and alpha * gamma > d / 2 for
// combos so the class embeds into continuous functions.
Target make_target(const TargetSpec& ts, const KernelSpec& spec);

// Mean-zero noise models with documented sub-Gaussian norms.
struct NoiseSpec {
  enum class Kind { Gaussian, UniformBounded, SymmetricBernoulli };
  Kind kind = Kind::Gaussian;
  double sigma = 0.1; // Gaussian standard deviation
  double bound = 0.1; // UniformBounded half-width; Bernoulli values are +-1
  std::uint64_t seed = 0;

  static NoiseSpec parse(const std::string& s); // "gaussian:0.1" etc.
  std::string str() const;
};

Eigen::VectorXd sample_noise(const NoiseSpec& spec, Eigen::Index n);

// Gaussian: sqrt(8/3) sigma (exact for the Orlicz-style definition);
// bounded: M / sqrt(ln 2); Bernoulli: 1 / sqrt(ln 2).
double sub_gaussian_norm(const NoiseSpec& spec);

// || f - f* || in the graded norm with exponent beta, 0 <= beta <= min(1,
// alpha), computed from the three closed-form quadratic forms.
double error_norm(const Fitted& f, const Target& target, double beta);

// Caches the Gram matrices needed by error_norm for repeated fits sharing
// one center set, bringing the per-fit cost down to a matrix-vector product.
class ErrorEvaluator {
public:
  ErrorEvaluator(const Target& target, const PointSet& centers,
                 const std::vector<double>& betas);

  double operator()(const Eigen::VectorXd& a, double beta) const;

private:
  std::vector<double> betas_;
  std::vector<Eigen::MatrixXd> self_gram_;
  std::vector<Eigen::VectorXd> cross_;
  std::vector<double> target_sq_;
};

// N(lambda) = sum_k phi_k / (phi_k + lambda) Z(d,k) over the truncation.
double effective_dimension(const KernelSpec& spec, double lambda);

// sqrt( sum_k phi_k / (phi_k + lambda) Z(d,k) sum_{i,i'} w_i w_{i'} eps_i
// eps_{i'} P_k(x_i . x_{i'}) ): the noise propagation term of the weighted
// fit, exact given the noise realization eps.
double stability_functional(const QuadratureRule& rule, const KernelSpec& spec,
                            double lambda, const Eigen::VectorXd& eps);

// Gram of the damped pairing above, so many noise draws at one lambda reuse
// a single assembly; pass to the overload below.
Eigen::MatrixXd stability_gram(const QuadratureRule& rule, const KernelSpec& spec,
                               double lambda);
double stability_functional(const QuadratureRule& rule, const Eigen::MatrixXd& gram,
                            const Eigen::VectorXd& eps);

// Randomized lower bound on the worst-case quadrature error between the
// alpha-smoothness unit ball and the resolvent-damped native ball: draws
// `trials` random unit-norm combo pairs (f, g), applies the per-degree
// multiplier (phi_k + lambda)^(-u) to g, and returns the largest
// |exact integral - quadrature sum| of f . (damped g) seen.  The supremum
// itself is not computed.
double discrepancy_probe(const QuadratureRule& rule, const KernelSpec& spec,
                         double lambda, double u, double alpha, int trials,
                         std::uint64_t seed, int n_centers = 16);

// Power-law schedule value(n) = c * n^exponent, used for lambda and
// quadrature-degree rules indexed by sample size.
struct PowerRule {
  double c = 1.0;
  double exponent = 0.0;
  double at(double n) const;
};

struct StudyConfig {
  KernelSpec kernel;
  std::vector<int> sizes;
  int trials = 1;
  std::string points_kind = "fibonacci"; // fibonacci | random
  std::uint64_t master_seed = 1;
  TargetSpec target;
  NoiseSpec noise;
  FilterSpec filter;
  PowerRule lambda_rule{1.0, -0.6};
  PowerRule degree_rule{0.5, 0.5}; // degree s(n), rounded, floor 1
  std::vector<double> betas{0.0};
};

struct StudyRow {
  int size = 0;
  int trial = 0;
  std::string metric;
  double value = 0.0;
};

struct StudySummaryRow {
  int size = 0;
  std::string metric;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::vector<StudySummaryRow> summary;
};

// "l2" for beta = 0, "psi_<beta>" otherwise.
std::string metric_name(double beta);

// Seeded convergence harness: per size builds the geometry, quadrature rule
// and spectral solver once, then per trial draws noise from a stream derived
// from (master_seed, size, trial) and records every requested error metric.
// Identical configs produce identical tables.
StudyResult convergence_study(const StudyConfig& cfg);

// Mean values of one metric by size, for slope checks.
void summary_series(const StudyResult& res, const std::string& metric,
                    std::vector<double>& sizes, std::vector<double>& means);

// Ordinary least-squares slope of log(y) against log(x).  Requires at least
// three points and positive values.
double rate_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace sphfit
