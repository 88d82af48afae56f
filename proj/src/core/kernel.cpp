#include "core/kernel.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "core/harmonics.hpp"

namespace sphfit {

void KernelSpec::validate() const {
  if (d < 2 || d > 8) throw InvalidArgument("kernel: d must be in [2, 8]");
  if (!(gamma > 0.5 * d)) throw InvalidArgument("kernel: gamma must exceed d/2");
  if (kmax < 0) throw InvalidArgument("kernel: kmax must be nonnegative");
  if (!(power > 0.0)) throw InvalidArgument("kernel: power must be positive");
}

double KernelSpec::base_coeff(int k) const {
  return std::pow(1.0 + k, -2.0 * gamma);
}

double KernelSpec::coeff(int k) const {
  return std::pow(base_coeff(k), power);
}

namespace transforms {

CoeffTransform power(double s) {
  return [s](int, double phik) { return std::pow(phik, s); };
}

CoeffTransform tikhonov_ratio(double lambda) {
  return [lambda](int, double phik) { return phik / (phik + lambda); };
}

CoeffTransform resolvent_power(double lambda, double u) {
  return [lambda, u](int, double phik) { return std::pow(phik + lambda, -u); };
}

CoeffTransform multiply(CoeffTransform a, CoeffTransform b) {
  return [a = std::move(a), b = std::move(b)](int k, double phik) {
    return a(k, phik) * b(k, phik);
  };
}

} // namespace transforms

std::vector<double> kernel_coeffs(const KernelSpec& spec) {
  spec.validate();
  std::vector<double> c(static_cast<std::size_t>(spec.kmax) + 1);
  for (int k = 0; k <= spec.kmax; ++k) c[static_cast<std::size_t>(k)] = spec.coeff(k);
  return c;
}

std::vector<double> transformed_coeffs(const KernelSpec& spec, const CoeffTransform& t) {
  spec.validate();
  std::vector<double> c(static_cast<std::size_t>(spec.kmax) + 1);
  for (int k = 0; k <= spec.kmax; ++k)
    c[static_cast<std::size_t>(k)] = t(k, spec.base_coeff(k));
  return c;
}

namespace {

// q_k = c_k * Z(d, k); every zonal sum below runs on these.
std::vector<double> scaled_coeffs(int d, const std::vector<double>& c) {
  std::vector<double> q(c.size());
  for (std::size_t k = 0; k < c.size(); ++k)
    q[k] = c[k] * static_cast<double>(harmonics::dim_harmonic(d, static_cast<int>(k)));
  return q;
}

// Sum_k q_k P_k(t) with the recurrence inlined (no temporary buffer).
double zonal_sum_scaled(double lam, const std::vector<double>& q, double t) {
  const int kmax = static_cast<int>(q.size()) - 1;
  double acc = q[0];
  if (kmax == 0) return acc;
  double pm = 1.0, pc = t;
  acc += q[1] * pc;
  for (int k = 1; k < kmax; ++k) {
    const double pn = (2.0 * (k + lam) * t * pc - k * pm) / (k + 2.0 * lam);
    pm = pc;
    pc = pn;
    acc += q[static_cast<std::size_t>(k) + 1] * pn;
  }
  return acc;
}

} // namespace

double zonal_sum(int d, const std::vector<double>& c, double t) {
  if (c.empty()) throw InvalidArgument("zonal_sum: empty coefficient vector");
  t = harmonics::clamp_cosine(t);
  return zonal_sum_scaled(0.5 * (d - 1), scaled_coeffs(d, c), t);
}

double kernel_value(const KernelSpec& spec, double t) {
  return zonal_sum(spec.d, kernel_coeffs(spec), t);
}

double truncation_tail(const KernelSpec& spec, double s) {
  spec.validate();
  const double e = 2.0 * spec.gamma * spec.power * s;
  const double K1 = 1.0 + spec.kmax;
  if (!(e > spec.d)) throw InvalidArgument("truncation_tail: decay exponent must exceed d");
  if (spec.d == 2) {
    // Sum_{k>K} (1+k)^(-e} (2k+1) <= int_K^inf (1+u)^(-e) (2u+1) du
    return 2.0 * std::pow(K1, 2.0 - e) / (e - 2.0) - std::pow(K1, 1.0 - e) / (e - 1.0);
  }
  // Z(d,k) <= 2 (1+k)^(d-1)
  return 2.0 * std::pow(K1, spec.d - e) / (e - spec.d);
}

Eigen::MatrixXd zonal_gram(int d, const std::vector<double>& c,
                           const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& X,
                           const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& Y) {
  if (c.empty()) throw InvalidArgument("zonal_gram: empty coefficient vector");
  const auto q = scaled_coeffs(d, c);
  const double lam = 0.5 * (d - 1);
  const Eigen::Index n = X.rows(), m = Y.rows();
  Eigen::MatrixXd G(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double t = harmonics::clamp_cosine(X.row(i).dot(Y.row(j)));
      G(i, j) = zonal_sum_scaled(lam, q, t);
    }
  }
  return G;
}

Eigen::MatrixXd zonal_gram_sym(int d, const std::vector<double>& c,
                               const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& X) {
  if (c.empty()) throw InvalidArgument("zonal_gram_sym: empty coefficient vector");
  const auto q = scaled_coeffs(d, c);
  const double lam = 0.5 * (d - 1);
  const Eigen::Index n = X.rows();
  const double diag = zonal_sum_scaled(lam, q, 1.0);
  Eigen::MatrixXd G(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    G(i, i) = diag;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double t = harmonics::clamp_cosine(X.row(i).dot(X.row(j)));
      const double v = zonal_sum_scaled(lam, q, t);
      G(i, j) = v;
      G(j, i) = v;
    }
  }
  return G;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec,
                              const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& X) {
  return zonal_gram_sym(spec.d, kernel_coeffs(spec), X);
}

Eigen::MatrixXd weighted_kernel_matrix(const KernelSpec& spec,
                                       const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& X,
                                       const Eigen::VectorXd& w) {
  if (w.size() != X.rows()) throw InvalidArgument("weighted_kernel_matrix: weight length mismatch");
  if ((w.array() < 0.0).any()) throw InvalidArgument("weighted_kernel_matrix: negative weight");
  const Eigen::VectorXd r = w.array().sqrt();
  Eigen::MatrixXd Psi = kernel_matrix(spec, X);
  Psi = r.asDiagonal() * Psi * r.asDiagonal();
  // Symmetrize away the last-bit asymmetry of the two diagonal scalings.
  Psi = 0.5 * (Psi + Psi.transpose()).eval();
  return Psi;
}

double filtered_quadratic_form(const KernelSpec& spec,
                               const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& X,
                               const Eigen::VectorXd& a,
                               const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>& Y,
                               const Eigen::VectorXd& b,
                               const CoeffTransform& transform) {
  if (a.size() != X.rows() || b.size() != Y.rows())
    throw InvalidArgument("filtered_quadratic_form: coefficient length mismatch");
  const auto c = transformed_coeffs(spec, transform);
  const auto q = scaled_coeffs(spec.d, c);
  const double lam = 0.5 * (spec.d - 1);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (a[i] == 0.0) continue;
    double row = 0.0;
    for (Eigen::Index j = 0; j < Y.rows(); ++j) {
      if (b[j] == 0.0) continue;
      const double t = harmonics::clamp_cosine(X.row(i).dot(Y.row(j)));
      row += b[j] * zonal_sum_scaled(lam, q, t);
    }
    acc += a[i] * row;
  }
  return acc;
}

} // namespace sphfit
