#pragma once

#include <string>

namespace sphfit {

enum class FilterKind { Tikhonov, IteratedTikhonov, CutOff, Landweber };

// Sentinel for filters whose qualification is unbounded.
inline constexpr double kInfiniteQualification = 1e6;

struct FilterSpec {
  FilterKind kind = FilterKind::Tikhonov;
  int v = 2;         // iteration count for iterated Tikhonov
  double tau = 0.0;  // Landweber step size
  int t = 0;         // Landweber iteration count

  // Parses "tikhonov", "itik:v", "cutoff", "landweber:tau:t".
  static FilterSpec parse(const std::string& s);
  std::string str() const;

  // For Landweber the regularization level is tied to the iteration count
  // via lambda = 1 / (tau t).
  bool has_intrinsic_lambda() const { return kind == FilterKind::Landweber; }
  double intrinsic_lambda() const;

  // Returns a copy adjusted to operate at regularization level `lambda`
  // (for Landweber: t = max(1, round(1/(tau lambda)))).
  FilterSpec at_lambda(double lambda) const;
};

// g_lambda(sigma): the spectral filter value.  sigma must be nonnegative and
// lambda positive; the sigma -> 0 limits are built in.
double apply_filter(const FilterSpec& f, double sigma, double lambda);

// 1 - sigma g_lambda(sigma).
double residual_factor(const FilterSpec& f, double sigma, double lambda);

// Qualification nu_g: 1 for Tikhonov, v for iterated Tikhonov, and the
// infinite sentinel for cut-off and Landweber.
double qualification(const FilterSpec& f);

// Constant b with g <= b / lambda and sigma g <= b.
double filter_b(const FilterSpec& f);

} // namespace sphfit
