#pragma once

#include <memory>
#include <vector>

#include "core/estimator.hpp"
#include "core/selection.hpp"

namespace sphfit {

struct DcConfig {
  double c_dia = 0.5;   // per-subset degree rule s_j = round(c_dia |subset|^(1/d))
  double tol = 1e-20;   // weight-solver tolerance
  double c_star = 5.0;  // D-type bound for reporting
  int stats_grid = 10000;
};

struct DcSubsetInfo {
  int size = 0;
  int degree = 0;
  double residual = 0.0;
  bool equal_weight_fallback = false;
  GeometryStats stats;
};

// Largest admissible number of partitions floor(c_bound n^(2 gamma alpha /
// (2 gamma alpha + d))).
long max_partitions(long n, double gamma, double alpha, int d, double c_bound = 1.0);

// Splits the data once, builds one quadrature rule and spectral solver per
// subset, and then fits any number of right-hand sides.  The global
// estimator is the concatenation of the local expansions with coefficients
// scaled by |subset|/|total|.
class DcFitter {
public:
  DcFitter(const PointSet& pts, int J, const KernelSpec& spec, const DcConfig& cfg = {});

  // y is indexed like the original point set.
  Fitted fit(const Eigen::VectorXd& y, const FilterSpec& filter, double lambda) const;

  const std::vector<DcSubsetInfo>& subset_info() const { return info_; }
  int partitions() const { return static_cast<int>(solvers_.size()); }

private:
  Eigen::Index n_total_ = 0;
  std::vector<std::vector<Eigen::Index>> index_map_; // original row of each subset element
  std::vector<std::unique_ptr<WsfaSolver>> solvers_;
  std::vector<DcSubsetInfo> info_;
};

// One-shot divide-and-conquer fit.
struct DcResult {
  Fitted fitted;
  std::vector<DcSubsetInfo> subsets;
};
DcResult dc_fit(const DataSet& data, int J, const KernelSpec& spec, const FilterSpec& filter,
                double lambda, const DcConfig& cfg = {});

} // namespace sphfit
