#pragma once

#include <Eigen/Dense>
#include <string>

#include "core/filters.hpp"
#include "core/geometry.hpp"
#include "core/kernel.hpp"
#include "core/quadrature.hpp"

namespace sphfit {

// Kernel expansion f = sum_i a_i phi(x_i . ), the output of every fit.
struct Fitted {
  PointSet centers;
  Eigen::VectorXd a;
  KernelSpec spec;
  std::string filter = "";
  double lambda = 0.0;
};

Eigen::VectorXd evaluate(const Fitted& f, const PointSet& queries);

// Precomputes the weighted kernel matrix Psi = W^{1/2} Phi W^{1/2} and its
// eigendecomposition once per (kernel, rule) so many right-hand sides and
// regularization levels can be fitted cheaply.
class WsfaSolver {
public:
  WsfaSolver(const KernelSpec& spec, const QuadratureRule& rule);

  // Coefficients a = W^{1/2} U g(Sigma) U^T W^{1/2} y.
  Fitted fit(const Eigen::VectorXd& y, const FilterSpec& filter, double lambda) const;

  const Eigen::VectorXd& eigenvalues() const { return sigma_; }
  const Eigen::MatrixXd& eigenvectors() const { return U_; }
  const QuadratureRule& rule() const { return rule_; }
  const KernelSpec& spec() const { return spec_; }
  double kappa_sq() const { return kappa_sq_; }
  // Frobenius reconstruction error of the eigendecomposition, relative to
  // ||Psi||_F (contract: <= 1e-12).
  double recon_error() const;

private:
  KernelSpec spec_;
  QuadratureRule rule_;
  Eigen::MatrixXd psi_;
  Eigen::MatrixXd U_;
  Eigen::VectorXd sigma_; // clamped at zero
  Eigen::VectorXd sqrt_w_;
  double kappa_sq_ = 0.0;
};

// One-shot weighted spectral-filter fit.
Fitted fit_wsfa(const DataSet& data, const QuadratureRule& rule, const KernelSpec& spec,
                const FilterSpec& filter, double lambda);

// Landweber by explicit iteration c <- c + tau (ytilde - Psi c), t steps from
// zero; tau <= 0 selects the default 1/trace(Psi).  Must agree with the
// spectral form of the same filter.
Fitted fit_landweber_iterative(const DataSet& data, const QuadratureRule& rule,
                               const KernelSpec& spec, double tau, int t);

// Kernel interpolation: solve (Phi + ridge I) a = y.  With ridge = 0 an
// estimated condition number above 1e14 raises IllConditioned.
Fitted fit_interpolant(const DataSet& data, const KernelSpec& spec, double ridge = 0.0);

// sqrt( sum_i w_i f(x_i)^2 + lambda ||f||_phi^2 ) evaluated on the rule's
// nodes; the regularized empirical norm used by the parameter selector.
double graded_norm(const Fitted& f, const QuadratureRule& rule, double lambda);

// CSV x,y,z,a plus JSON sidecar with the kernel/filter metadata.
void save_fitted(const Fitted& f, const std::string& csv_path, const std::string& json_path);
Fitted load_fitted(const std::string& csv_path, const std::string& json_path);

} // namespace sphfit
