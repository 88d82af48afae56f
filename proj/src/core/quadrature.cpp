#include "core/quadrature.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/harmonics.hpp"
#include "core/kernel.hpp"

namespace sphfit {

namespace {

// Coefficients selecting degrees 1..s with weight Z(d,k) folded in later:
// c_0 = 0 so the mass term is handled separately.
std::vector<double> degree_band(int s) {
  std::vector<double> c(static_cast<std::size_t>(s) + 1, 1.0);
  c[0] = 0.0;
  return c;
}

// Real spherical harmonics on S^2 evaluated at a fixed point set, one degree
// at a time.  Normalized to unit L2 norm under the mass-1 uniform measure,
// so sum_l Y_{k,l}(x) Y_{k,l}(y) = (2k+1) P_k(x . y) and the exactness
// functional becomes a plain sum of squared moment residuals.  That form is
// what lets the solver certify discrepancies near 1e-20: each residual is
// computed first and only then squared, so the evaluation floor is the
// square of the rounding error rather than the rounding error itself.
class HarmonicRows {
public:
  explicit HarmonicRows(const Points3& X) : n_(X.rows()) {
    t_ = X.col(2).array();
    sin_ = (X.col(0).array().square() + X.col(1).array().square()).sqrt();
    cosphi_.resize(n_);
    sinphi_.resize(n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      const double s = sin_[i];
      cosphi_[i] = s > 0.0 ? X(i, 0) / s : 1.0;
      sinphi_[i] = s > 0.0 ? X(i, 1) / s : 0.0;
    }
    pm1_.push_back(Eigen::ArrayXd::Ones(n_));
    cosm_.push_back(Eigen::ArrayXd::Ones(n_));
    sinm_.push_back(Eigen::ArrayXd::Zero(n_));
  }

  // Writes the 2k+1 rows of the next degree k = 1, 2, ... into `rows`
  // (order: m = 0, then cosine/sine pairs for m = 1..k).
  void next_degree(Eigen::MatrixXd& rows) {
    const int k = ++k_;
    const double dk = static_cast<double>(k);
    if (k == 1) {
      cosm_.push_back(cosphi_);
      sinm_.push_back(sinphi_);
    } else {
      cosm_.push_back(2.0 * cosphi_ * cosm_[static_cast<std::size_t>(k - 1)] -
                      cosm_[static_cast<std::size_t>(k - 2)]);
      sinm_.push_back(2.0 * cosphi_ * sinm_[static_cast<std::size_t>(k - 1)] -
                      sinm_[static_cast<std::size_t>(k - 2)]);
    }
    std::vector<Eigen::ArrayXd> cur(static_cast<std::size_t>(k) + 1);
    for (int m = 0; m <= k - 2; ++m) {
      const double dm = static_cast<double>(m);
      const double a = std::sqrt((4.0 * dk * dk - 1.0) / (dk * dk - dm * dm));
      const double b =
          std::sqrt(((dk - 1.0) * (dk - 1.0) - dm * dm) / (4.0 * (dk - 1.0) * (dk - 1.0) - 1.0));
      cur[static_cast<std::size_t>(m)] =
          a * (t_ * pm1_[static_cast<std::size_t>(m)] - b * pm2_[static_cast<std::size_t>(m)]);
    }
    cur[static_cast<std::size_t>(k - 1)] =
        std::sqrt(2.0 * dk + 1.0) * t_ * pm1_[static_cast<std::size_t>(k - 1)];
    cur[static_cast<std::size_t>(k)] =
        std::sqrt((2.0 * dk + 1.0) / (2.0 * dk)) * sin_ * pm1_[static_cast<std::size_t>(k - 1)];

    rows.resize(2 * k + 1, n_);
    rows.row(0) = cur[0].matrix().transpose();
    const double r2 = std::sqrt(2.0);
    for (int m = 1; m <= k; ++m) {
      rows.row(2 * m - 1) =
          (r2 * cur[static_cast<std::size_t>(m)] * cosm_[static_cast<std::size_t>(m)])
              .matrix()
              .transpose();
      rows.row(2 * m) =
          (r2 * cur[static_cast<std::size_t>(m)] * sinm_[static_cast<std::size_t>(m)])
              .matrix()
              .transpose();
    }
    pm2_ = std::move(pm1_);
    pm1_ = std::move(cur);
  }

private:
  Eigen::Index n_;
  int k_ = 0;
  Eigen::ArrayXd t_, sin_, cosphi_, sinphi_;
  std::vector<Eigen::ArrayXd> pm1_, pm2_, cosm_, sinm_;
};

// Moment matrix with one row per harmonic of degrees 1..s.
Eigen::MatrixXd moment_matrix(int s, const Points3& X) {
  Eigen::MatrixXd B(static_cast<Eigen::Index>(s + 1) * (s + 1) - 1, X.rows());
  HarmonicRows hr(X);
  Eigen::MatrixXd rows;
  Eigen::Index at = 0;
  for (int k = 1; k <= s; ++k) {
    hr.next_degree(rows);
    B.middleRows(at, 2 * k + 1) = rows;
    at += 2 * k + 1;
  }
  return B;
}

} // namespace

double design_discrepancy(const PointSet& ps, const Eigen::VectorXd& w, int s, int d) {
  if (w.size() != ps.size()) throw InvalidArgument("design_discrepancy: weight length mismatch");
  if (s < 0) throw InvalidArgument("design_discrepancy: degree must be nonnegative");
  const double mass = w.sum() - 1.0;
  double E = mass * mass;
  if (s >= 1) {
    if (d == 2) {
      E += (moment_matrix(s, ps.X) * w).squaredNorm();
    } else {
      const Eigen::MatrixXd A = zonal_gram_sym(d, degree_band(s), ps.X);
      E += w.dot(A * w);
    }
  }
  return E;
}

QuadratureRule compute_weights(const PointSet& ps, int s, const ComputeWeightsOptions& opts) {
  const Eigen::Index n = ps.size();
  if (n < 1) throw InvalidArgument("compute_weights: empty point set");
  if (s < 0) throw InvalidArgument("compute_weights: degree must be nonnegative");
  if (!(opts.tol > 0.0)) throw InvalidArgument("compute_weights: tol must be positive");

  const double floor = opts.w_floor_scale / static_cast<double>(n);
  QuadratureRule rule;
  rule.pts = ps;
  rule.degree = s;

  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));

  if (s == 0) {
    rule.w = w;
    rule.residual = design_discrepancy(ps, w, 0);
    return rule;
  }

  const Eigen::MatrixXd B = moment_matrix(s, ps.X);

  // Largest eigenvalue of the quadratic form's matrix B^T B + 11^T by power
  // iteration; the fixed step 1/(2L) then guarantees descent.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  for (Eigen::Index i = 0; i < n; i += 2) v[i] += 0.5;
  v.normalize();
  double L = 1.0;
  for (int it = 0; it < 80; ++it) {
    Eigen::VectorXd Mv = B.transpose() * (B * v) + Eigen::VectorXd::Constant(n, v.sum());
    L = Mv.norm();
    if (L <= 0.0) break;
    v = Mv / L;
  }
  L = std::max(L * 1.02, 1e-30);
  const double step = 1.0 / (2.0 * L);

  double E = 0.0;
  double window_E = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (long it = 0; it < opts.max_iters; ++it) {
    const Eigen::VectorXd r = B * w;
    const double mass = w.sum() - 1.0;
    E = r.squaredNorm() + mass * mass;
    if (E <= 0.25 * opts.tol) {
      converged = true;
      break;
    }
    if (it % 400 == 399) {
      if (E > opts.tol && window_E - E < 1e-3 * window_E)
        throw InfeasibleDegree("compute_weights: stalled at E = " + std::to_string(E) +
                               " for degree " + std::to_string(s));
      window_E = E;
    }
    w = (w - step * 2.0 * (B.transpose() * r + Eigen::VectorXd::Constant(n, mass)))
            .cwiseMax(floor);
  }
  if (!converged && E > opts.tol)
    throw InfeasibleDegree("compute_weights: budget exhausted at E = " + std::to_string(E) +
                           " for degree " + std::to_string(s));

  // Tighten the mass identity; the correction is O(sqrt(tol)) so the
  // functional stays under tol.
  w /= w.sum();
  w = w.cwiseMax(floor);
  rule.w = w;
  const double mass = w.sum() - 1.0;
  rule.residual = (B * w).squaredNorm() + mass * mass;
  return rule;
}

QuadratureRule equal_weight_rule(const PointSet& ps, int degree_checked) {
  if (ps.size() < 1) throw InvalidArgument("equal_weight_rule: empty point set");
  QuadratureRule rule;
  rule.pts = ps;
  rule.w = Eigen::VectorXd::Constant(ps.size(), 1.0 / static_cast<double>(ps.size()));
  rule.degree = degree_checked;
  rule.residual = design_discrepancy(ps, rule.w, degree_checked);
  return rule;
}

bool is_dtype(const QuadratureRule& rule, double c_star) {
  const double cap = c_star / static_cast<double>(rule.pts.size());
  for (Eigen::Index i = 0; i < rule.w.size(); ++i)
    if (!(rule.w[i] > 0.0) || rule.w[i] > cap) return false;
  return true;
}

int max_exact_degree(const QuadratureRule& rule, double tol, int cap) {
  if (cap < 0) cap = 2 * std::max(rule.degree, 8) + 16;
  const double mass = rule.w.sum() - 1.0;
  double E = mass * mass;
  if (E > tol) return -1;
  int best = 0;
  HarmonicRows hr(rule.pts.X);
  Eigen::MatrixXd rows;
  for (int k = 1; k <= cap; ++k) {
    hr.next_degree(rows);
    E += (rows * rule.w).squaredNorm();
    if (E > tol) break;
    best = k;
  }
  return best;
}

namespace {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w) {
  x.resize(static_cast<std::size_t>(m));
  w.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 1; k < m; ++k) {
        const double p2 = ((2.0 * k + 1.0) * z * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      pp = m * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

} // namespace

QuadratureRule product_rule(int s) {
  if (s < 0) throw InvalidArgument("product_rule: degree must be nonnegative");
  const int m = s / 2 + 1;
  const int nphi = s + 1;
  std::vector<double> gx, gw;
  gauss_legendre(m, gx, gw);
  QuadratureRule rule;
  rule.degree = s;
  rule.residual = std::numeric_limits<double>::quiet_NaN(); // exact by construction
  rule.pts.X.resize(static_cast<Eigen::Index>(m) * nphi, 3);
  rule.w.resize(static_cast<Eigen::Index>(m) * nphi);
  Eigen::Index row = 0;
  for (int i = 0; i < m; ++i) {
    const double z = gx[static_cast<std::size_t>(i)];
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double wi = 0.5 * gw[static_cast<std::size_t>(i)] / nphi;
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2.0 * M_PI * j / nphi;
      rule.pts.X(row, 0) = r * std::cos(phi);
      rule.pts.X(row, 1) = r * std::sin(phi);
      rule.pts.X(row, 2) = z;
      rule.w[row] = wi;
      ++row;
    }
  }
  return rule;
}

void save_rule(const QuadratureRule& rule, const std::string& csv_path,
               const std::string& json_path, double c_star) {
  std::ofstream f(csv_path);
  if (!f) throw IoError("cannot open " + csv_path + " for writing");
  f << "x,y,z,w\n";
  char buf[192];
  for (Eigen::Index i = 0; i < rule.pts.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", rule.pts.X(i, 0),
                  rule.pts.X(i, 1), rule.pts.X(i, 2), rule.w[i]);
    f << buf;
  }
  if (!f) throw IoError("write failure on " + csv_path);

  nlohmann::json j;
  j["degree"] = rule.degree;
  if (std::isnan(rule.residual))
    j["residual"] = nullptr;
  else
    j["residual"] = rule.residual;
  j["c_star"] = c_star;
  j["c_star_check"] = is_dtype(rule, c_star);
  std::ofstream jf(json_path);
  if (!jf) throw IoError("cannot open " + json_path + " for writing");
  jf << j.dump(2) << "\n";
  if (!jf) throw IoError("write failure on " + json_path);
}

QuadratureRule load_rule(const std::string& csv_path, const std::string& json_path) {
  std::ifstream f(csv_path);
  if (!f) throw IoError("cannot open " + csv_path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty file " + csv_path);
  // Reuse the point loader conventions: header then rows.
  {
    std::string hdr = line;
    if (!hdr.empty() && hdr.back() == '\r') hdr.pop_back();
    if (hdr != "x,y,z,w") throw IoError("expected header x,y,z,w in " + csv_path);
  }
  std::vector<double> xs, ys, zs, ws;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    double a, b, c, d;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &a, &b, &c, &d) != 4)
      throw IoError("expected 4 fields per row in " + csv_path);
    xs.push_back(a);
    ys.push_back(b);
    zs.push_back(c);
    ws.push_back(d);
  }
  QuadratureRule rule;
  const auto n = static_cast<Eigen::Index>(xs.size());
  rule.pts.X.resize(n, 3);
  rule.w.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVector3d p(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(i)],
                         zs[static_cast<std::size_t>(i)]);
    const double nrm = p.norm();
    if (std::abs(nrm - 1.0) > 1e-6)
      throw NumericalError("point norm too far from 1 in " + csv_path);
    rule.pts.X.row(i) = p / nrm;
    if (ws[static_cast<std::size_t>(i)] < 0.0)
      throw NumericalError("negative weight in " + csv_path);
    rule.w[i] = ws[static_cast<std::size_t>(i)];
  }

  std::ifstream jf(json_path);
  if (!jf) throw IoError("cannot open " + json_path);
  nlohmann::json j;
  try {
    jf >> j;
  } catch (const std::exception& e) {
    throw IoError("invalid JSON in " + json_path + ": " + e.what());
  }
  rule.degree = j.value("degree", 0);
  rule.residual = j.contains("residual") && !j["residual"].is_null()
                      ? j["residual"].get<double>()
                      : std::numeric_limits<double>::quiet_NaN();
  return rule;
}

} // namespace sphfit
