#include "core/estimator.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/harmonics.hpp"

namespace sphfit {

Eigen::VectorXd evaluate(const Fitted& f, const PointSet& queries) {
  if (f.a.size() != f.centers.size()) throw InvalidArgument("evaluate: coefficient length mismatch");
  const Eigen::MatrixXd G = zonal_gram(f.spec.d, kernel_coeffs(f.spec), queries.X, f.centers.X);
  return G * f.a;
}

WsfaSolver::WsfaSolver(const KernelSpec& spec, const QuadratureRule& rule)
    : spec_(spec), rule_(rule) {
  spec_.validate();
  const Eigen::Index n = rule_.pts.size();
  if (n < 1) throw InvalidArgument("WsfaSolver: empty rule");
  if (rule_.w.size() != n) throw InvalidArgument("WsfaSolver: weight length mismatch");
  kappa_sq_ = kernel_value(spec_, 1.0);
  psi_ = weighted_kernel_matrix(spec_, rule_.pts.X, rule_.w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(psi_);
  if (es.info() != Eigen::Success) throw NumericalError("WsfaSolver: eigendecomposition failed");
  U_ = es.eigenvectors();
  sigma_ = es.eigenvalues().cwiseMax(0.0);
  sqrt_w_ = rule_.w.array().sqrt();
}

double WsfaSolver::recon_error() const {
  const Eigen::MatrixXd R = U_ * sigma_.asDiagonal() * U_.transpose() - psi_;
  return R.norm() / psi_.norm();
}

Fitted WsfaSolver::fit(const Eigen::VectorXd& y, const FilterSpec& filter, double lambda) const {
  const Eigen::Index n = rule_.pts.size();
  if (y.size() != n) throw InvalidArgument("WsfaSolver::fit: data length mismatch");
  const FilterSpec f = filter.has_intrinsic_lambda() && lambda > 0.0
                           ? filter.at_lambda(lambda)
                           : filter;
  const double lam = f.has_intrinsic_lambda() ? f.intrinsic_lambda() : lambda;
  if (!(lam > 0.0)) throw InvalidArgument("WsfaSolver::fit: lambda must be positive");

  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; ++i) g[i] = apply_filter(f, sigma_[i], lam);

  const Eigen::VectorXd ytilde = sqrt_w_.cwiseProduct(y);
  const Eigen::VectorXd z = U_ * g.cwiseProduct(U_.transpose() * ytilde);
  Fitted out;
  out.centers = rule_.pts;
  out.a = sqrt_w_.cwiseProduct(z);
  out.spec = spec_;
  out.filter = f.str();
  out.lambda = lam;
  return out;
}

Fitted fit_wsfa(const DataSet& data, const QuadratureRule& rule, const KernelSpec& spec,
                const FilterSpec& filter, double lambda) {
  if (data.pts.size() != rule.pts.size() || !data.pts.X.isApprox(rule.pts.X))
    throw InvalidArgument("fit_wsfa: data sites must coincide with the rule's nodes");
  WsfaSolver solver(spec, rule);
  return solver.fit(data.y, filter, lambda);
}

Fitted fit_landweber_iterative(const DataSet& data, const QuadratureRule& rule,
                               const KernelSpec& spec, double tau, int t) {
  if (t < 1) throw InvalidArgument("fit_landweber_iterative: t must be positive");
  if (data.pts.size() != rule.pts.size() || !data.pts.X.isApprox(rule.pts.X))
    throw InvalidArgument("fit_landweber_iterative: data sites must coincide with the rule's nodes");
  const Eigen::MatrixXd psi = weighted_kernel_matrix(spec, rule.pts.X, rule.w);
  if (tau <= 0.0) tau = 1.0 / psi.trace();
  const Eigen::VectorXd sqrt_w = rule.w.array().sqrt();
  const Eigen::VectorXd ytilde = sqrt_w.cwiseProduct(data.y);
  const double guard = 1e12 * std::max(ytilde.norm(), 1.0);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(ytilde.size());
  for (int it = 0; it < t; ++it) {
    c += tau * (ytilde - psi * c);
    if (c.norm() > guard)
      throw NumericalError("fit_landweber_iterative: iteration diverged (tau too large)");
  }
  Fitted out;
  out.centers = rule.pts;
  out.a = sqrt_w.cwiseProduct(c);
  out.spec = spec;
  FilterSpec f;
  f.kind = FilterKind::Landweber;
  f.tau = tau;
  f.t = t;
  out.filter = f.str();
  out.lambda = f.intrinsic_lambda();
  return out;
}

Fitted fit_interpolant(const DataSet& data, const KernelSpec& spec, double ridge) {
  const Eigen::Index n = data.pts.size();
  if (n < 1) throw InvalidArgument("fit_interpolant: empty data");
  if (data.y.size() != n) throw InvalidArgument("fit_interpolant: data length mismatch");
  if (ridge < 0.0) throw InvalidArgument("fit_interpolant: ridge must be nonnegative");
  Eigen::MatrixXd Phi = kernel_matrix(spec, data.pts.X);
  if (ridge > 0.0) Phi.diagonal().array() += ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Phi);
  if (ridge == 0.0) {
    const Eigen::VectorXd D = ldlt.vectorD();
    const double dmax = D.maxCoeff();
    const double dmin = D.minCoeff();
    if (!(dmin > 0.0) || dmax / dmin > 1e14)
      throw IllConditioned("fit_interpolant: kernel matrix condition estimate exceeds 1e14");
  }
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("fit_interpolant: factorization failed");
  Fitted out;
  out.centers = data.pts;
  out.a = ldlt.solve(data.y);
  out.spec = spec;
  out.filter = "interpolant";
  out.lambda = ridge;
  return out;
}

double graded_norm(const Fitted& f, const QuadratureRule& rule, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("graded_norm: lambda must be positive");
  const Eigen::VectorXd fx = evaluate(f, rule.pts);
  const double empirical = rule.w.dot(fx.cwiseProduct(fx));
  // ||f||_phi^2 = a^T Phi a over the expansion's own centers.
  double native;
  if (f.centers.size() == rule.pts.size() && f.centers.X.isApprox(rule.pts.X)) {
    native = f.a.dot(fx);
  } else {
    const Eigen::MatrixXd Phi = kernel_matrix(f.spec, f.centers.X);
    native = f.a.dot(Phi * f.a);
  }
  return std::sqrt(std::max(0.0, empirical + lambda * native));
}

void save_fitted(const Fitted& f, const std::string& csv_path, const std::string& json_path) {
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot open " + csv_path + " for writing");
  out << "x,y,z,a\n";
  char buf[192];
  for (Eigen::Index i = 0; i < f.centers.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", f.centers.X(i, 0),
                  f.centers.X(i, 1), f.centers.X(i, 2), f.a[i]);
    out << buf;
  }
  if (!out) throw IoError("write failure on " + csv_path);

  nlohmann::json j;
  j["d"] = f.spec.d;
  j["gamma"] = f.spec.gamma;
  j["kmax"] = f.spec.kmax;
  j["power"] = f.spec.power;
  j["filter"] = f.filter;
  j["lambda"] = f.lambda;
  std::ofstream jf(json_path);
  if (!jf) throw IoError("cannot open " + json_path + " for writing");
  jf << j.dump(2) << "\n";
  if (!jf) throw IoError("write failure on " + json_path);
}

Fitted load_fitted(const std::string& csv_path, const std::string& json_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file " + csv_path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,z,a") throw IoError("expected header x,y,z,a in " + csv_path);
  std::vector<Eigen::RowVector3d> rows;
  std::vector<double> coeffs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double x, y, z, a;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &x, &y, &z, &a) != 4)
      throw IoError("expected 4 fields per row in " + csv_path);
    Eigen::RowVector3d p(x, y, z);
    const double nrm = p.norm();
    if (std::abs(nrm - 1.0) > 1e-6) throw NumericalError("point norm too far from 1 in " + csv_path);
    rows.push_back(p / nrm);
    coeffs.push_back(a);
  }
  Fitted f;
  f.centers.X.resize(static_cast<Eigen::Index>(rows.size()), 3);
  f.a.resize(static_cast<Eigen::Index>(coeffs.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    f.centers.X.row(static_cast<Eigen::Index>(i)) = rows[i];
    f.a[static_cast<Eigen::Index>(i)] = coeffs[i];
  }
  std::ifstream jf(json_path);
  if (!jf) throw IoError("cannot open " + json_path);
  nlohmann::json j;
  try {
    jf >> j;
  } catch (const std::exception& e) {
    throw IoError("invalid JSON in " + json_path + ": " + e.what());
  }
  f.spec.d = j.value("d", 2);
  f.spec.gamma = j.value("gamma", 1.5);
  f.spec.kmax = j.value("kmax", 200);
  f.spec.power = j.value("power", 1.0);
  f.filter = j.value("filter", "");
  f.lambda = j.value("lambda", 0.0);
  f.spec.validate();
  return f;
}

} // namespace sphfit
