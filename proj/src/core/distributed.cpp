#include "core/distributed.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace sphfit {

long max_partitions(long n, double gamma, double alpha, int d, double c_bound) {
  if (n < 1) throw InvalidArgument("max_partitions: n must be positive");
  if (!(gamma > 0.5 * d)) throw InvalidArgument("max_partitions: gamma must exceed d/2");
  if (!(alpha >= 1.0)) throw InvalidArgument("max_partitions: alpha must be >= 1");
  if (!(c_bound > 0.0)) throw InvalidArgument("max_partitions: c_bound must be positive");
  const double expo = 2.0 * gamma * alpha / (2.0 * gamma * alpha + d);
  // The small epsilon keeps exact powers (e.g. 1024^0.6 = 64) on the right
  // side of the floor.
  return static_cast<long>(std::floor(c_bound * std::pow(static_cast<double>(n), expo) + 1e-9));
}

DcFitter::DcFitter(const PointSet& pts, int J, const KernelSpec& spec, const DcConfig& cfg) {
  spec.validate();
  n_total_ = pts.size();
  index_map_ = partition_equal_area_indices(pts, J);
  solvers_.reserve(index_map_.size());
  info_.reserve(index_map_.size());
  for (const auto& idx : index_map_) {
    PointSet sub;
    sub.X.resize(static_cast<Eigen::Index>(idx.size()), 3);
    for (std::size_t r = 0; r < idx.size(); ++r)
      sub.X.row(static_cast<Eigen::Index>(r)) = pts.X.row(idx[r]);

    DcSubsetInfo inf;
    inf.size = static_cast<int>(idx.size());
    inf.degree = std::max(
        1, static_cast<int>(std::llround(cfg.c_dia * std::pow(static_cast<double>(idx.size()),
                                                              1.0 / spec.d))));
    QuadratureRule rule;
    try {
      ComputeWeightsOptions opts;
      opts.tol = cfg.tol;
      rule = compute_weights(sub, inf.degree, opts);
    } catch (const InfeasibleDegree&) {
      rule = equal_weight_rule(sub, inf.degree);
      inf.equal_weight_fallback = true;
    }
    inf.residual = rule.residual;
    inf.stats = geometry_stats(sub, cfg.stats_grid);
    info_.push_back(inf);
    solvers_.push_back(std::make_unique<WsfaSolver>(spec, rule));
  }
}

Fitted DcFitter::fit(const Eigen::VectorXd& y, const FilterSpec& filter, double lambda) const {
  if (y.size() != n_total_) throw InvalidArgument("DcFitter::fit: data length mismatch");
  Fitted out;
  out.centers.X.resize(n_total_, 3);
  out.a.resize(n_total_);
  Eigen::Index row = 0;
  for (std::size_t j = 0; j < solvers_.size(); ++j) {
    const auto& idx = index_map_[j];
    Eigen::VectorXd yj(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r)
      yj[static_cast<Eigen::Index>(r)] = y[idx[r]];
    const Fitted local = solvers_[j]->fit(yj, filter, lambda);
    const double scale = static_cast<double>(idx.size()) / static_cast<double>(n_total_);
    out.centers.X.middleRows(row, local.centers.size()) = local.centers.X;
    out.a.segment(row, local.a.size()) = scale * local.a;
    row += local.a.size();
    if (j == 0) {
      out.spec = local.spec;
      out.filter = local.filter;
      out.lambda = local.lambda;
    }
  }
  return out;
}

DcResult dc_fit(const DataSet& data, int J, const KernelSpec& spec, const FilterSpec& filter,
                double lambda, const DcConfig& cfg) {
  DcFitter fitter(data.pts, J, spec, cfg);
  DcResult res;
  res.fitted = fitter.fit(data.y, filter, lambda);
  res.subsets = fitter.subset_info();
  return res;
}

} // namespace sphfit
