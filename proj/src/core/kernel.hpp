#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace sphfit {

// Truncated zonal kernel family on S^d.  The base coefficient law is
// phi_k = (1 + k)^(-2 gamma); `power` selects the family member whose
// coefficients are phi_k^power, so power = 1 is the fitting kernel and
// power = alpha describes smoother target classes.
struct KernelSpec {
  int d = 2;
  double gamma = 1.5;
  int kmax = 200;
  double power = 1.0;

  void validate() const;
  // phi_k^power for one degree.
  double coeff(int k) const;
  // (1 + k)^(-2 gamma), the base law regardless of `power`.
  double base_coeff(int k) const;
};

// Per-degree multiplier sequence applied on top of the base coefficients,
// e.g. powers of phi_k or rational functions involving a regularization
// parameter.  Receives (k, phi_k) with phi_k the base law.
using CoeffTransform = std::function<double(int k, double phik)>;

namespace transforms {
CoeffTransform power(double s);
// phi_k / (phi_k + lambda)
CoeffTransform tikhonov_ratio(double lambda);
// (phi_k + lambda)^(-u)
CoeffTransform resolvent_power(double lambda, double u);
CoeffTransform multiply(CoeffTransform a, CoeffTransform b);
} // namespace transforms

// Coefficients of spec's family member (length kmax + 1).
std::vector<double> kernel_coeffs(const KernelSpec& spec);

// Per-degree coefficients after a transform of the base law.
std::vector<double> transformed_coeffs(const KernelSpec& spec, const CoeffTransform& t);

// Sum_k c_k Z(d,k) P_k(t) for caller-supplied coefficients c.
double zonal_sum(int d, const std::vector<double>& c, double t);

// Kernel value phi(t) for t = x . x' in [-1, 1].
double kernel_value(const KernelSpec& spec, double t);

// Integral upper bound for the dropped tail Sum_{k > kmax} (phi_k^power)^s Z(d,k).
double truncation_tail(const KernelSpec& spec, double s);

// Gram matrix with entries Sum_k c_k Z(d,k) P_k(x_i . y_j) for row points X
// (n x 3) and column points Y (m x 3).
Eigen::MatrixXd zonal_gram(int d, const std::vector<double>& c,
                           const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& X,
                           const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& Y);

Eigen::MatrixXd zonal_gram_sym(int d, const std::vector<double>& c,
                               const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& X);

// Kernel matrix Phi with entries phi(x_i . x_j) (symmetric, diag = phi(1)).
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec,
                              const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& X);

// W^{1/2} Phi W^{1/2} for quadrature weights w (all nonnegative).
Eigen::MatrixXd weighted_kernel_matrix(const KernelSpec& spec,
                                       const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& X,
                                       const Eigen::VectorXd& w);

// Sum_k c_k Z(d,k) Sum_{i,i'} a_i b_{i'} P_k(x_i . y_{i'}) with c_k given by
// `transform` applied to the base law.  With c_k = phi_k this is the native
// inner product of the kernel expansions with coefficients a and b; other
// transforms give the L2 and intermediate-norm pairings.
double filtered_quadratic_form(const KernelSpec& spec,
                               const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& X,
                               const Eigen::VectorXd& a,
                               const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& Y,
                               const Eigen::VectorXd& b,
                               const CoeffTransform& transform);

} // namespace sphfit
