#include "core/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "core/errors.hpp"
#include "core/harmonics.hpp"

namespace sphfit {

namespace {

// Inner-product coefficient exponent bookkeeping: a kernel expansion with
// coefficients a has degree-k harmonic content phi_k * (harmonics of a), so
// pairing two expansions under the beta-graded norm multiplies by
// phi_k^(-beta) and one factor of phi_k per expansion.
double require_beta(double beta, double alpha) {
  const double cap = std::min(1.0, alpha);
  if (!(beta >= 0.0 && beta <= cap + 1e-12))
    throw InvalidArgument("error norm exponent must lie in [0, min(1, alpha)]");
  return beta;
}

} // namespace

Target make_target(const TargetSpec& ts, const KernelSpec& spec) {
  spec.validate();
  if (spec.power != 1.0)
    throw InvalidArgument("targets are defined against the base fitting kernel (power = 1)");
  Target t;
  t.spec_ = spec;
  t.kind_ = ts.kind;
  if (ts.kind == TargetSpec::Kind::KernelCombo) {
    if (!(ts.alpha >= 1.0)) throw InvalidArgument("combo target needs alpha >= 1");
    if (!(ts.alpha * spec.gamma > 0.5 * spec.d))
      throw InvalidArgument("combo target needs alpha * gamma > d / 2");
    t.alpha_ = ts.alpha;
    if (ts.b.size() > 0) {
      if (ts.centers.size() != ts.b.size())
        throw InvalidArgument("combo target: centers and coefficients differ in length");
      t.centers_ = ts.centers;
      t.b_ = ts.b;
    } else {
      if (ts.n_centers < 1) throw InvalidArgument("combo target: n_centers must be positive");
      t.centers_ = random_uniform_points(ts.n_centers, derive_seed(ts.seed, 0x74676374)); // "tgct"
      Rng rng(derive_seed(ts.seed, 0x74676362)); // "tgcb"
      t.b_.resize(ts.n_centers);
      for (int i = 0; i < ts.n_centers; ++i) t.b_[i] = rng.normal();
      const double nsq = filtered_quadratic_form(spec, t.centers_.X, t.b_, t.centers_.X, t.b_,
                                                 transforms::power(ts.alpha));
      if (!(nsq > 0.0)) throw NumericalError("combo target: degenerate random draw");
      t.b_ *= ts.radius / std::sqrt(nsq);
    }
  } else {
    t.alpha_ = std::numeric_limits<double>::infinity();
    t.axis_ = ts.axis.normalized();
    if (ts.axis.norm() < 1e-12) throw InvalidArgument("polynomial target: zero axis");
    t.poly_coeffs_ = ts.poly_coeffs;
    if (static_cast<int>(t.poly_coeffs_.size()) > spec.kmax + 1)
      throw InvalidArgument("polynomial target degree exceeds the kernel truncation");
  }
  return t;
}

Eigen::VectorXd Target::evaluate(const PointSet& queries) const {
  const Eigen::Index n = queries.size();
  if (kind_ == TargetSpec::Kind::KernelCombo) {
    const auto c = transformed_coeffs(spec_, transforms::power(alpha_));
    return zonal_gram(spec_.d, c, queries.X, centers_.X) * b_;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  if (poly_coeffs_.empty()) return out;
  const int L = static_cast<int>(poly_coeffs_.size()) - 1;
  std::vector<double> pk(static_cast<std::size_t>(L) + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double tcos = harmonics::clamp_cosine(queries.X.row(i).dot(axis_));
    harmonics::gegenbauer_batch(spec_.d, L, tcos, pk.data());
    double acc = 0.0;
    for (int k = 0; k <= L; ++k) acc += poly_coeffs_[static_cast<std::size_t>(k)] * pk[static_cast<std::size_t>(k)];
    out[i] = acc;
  }
  return out;
}

double Target::norm_sq(double beta) const {
  if (kind_ == TargetSpec::Kind::KernelCombo) {
    return filtered_quadratic_form(spec_, centers_.X, b_, centers_.X, b_,
                                   transforms::power(2.0 * alpha_ - beta));
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < poly_coeffs_.size(); ++k) {
    const double u = poly_coeffs_[k];
    if (u == 0.0) continue;
    const double z = static_cast<double>(harmonics::dim_harmonic(spec_.d, static_cast<int>(k)));
    acc += u * u / (z * std::pow(spec_.base_coeff(static_cast<int>(k)), beta));
  }
  return acc;
}

Eigen::VectorXd Target::cross_vector(const PointSet& centers, double beta) const {
  if (kind_ == TargetSpec::Kind::KernelCombo) {
    const auto c = transformed_coeffs(spec_, transforms::power(1.0 + alpha_ - beta));
    return zonal_gram(spec_.d, c, centers.X, centers_.X) * b_;
  }
  const Eigen::Index n = centers.size();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  if (poly_coeffs_.empty()) return r;
  const int L = static_cast<int>(poly_coeffs_.size()) - 1;
  std::vector<double> pk(static_cast<std::size_t>(L) + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double tcos = harmonics::clamp_cosine(centers.X.row(i).dot(axis_));
    harmonics::gegenbauer_batch(spec_.d, L, tcos, pk.data());
    double acc = 0.0;
    for (int k = 0; k <= L; ++k) {
      const double u = poly_coeffs_[static_cast<std::size_t>(k)];
      if (u == 0.0) continue;
      acc += std::pow(spec_.base_coeff(k), 1.0 - beta) * u * pk[static_cast<std::size_t>(k)];
    }
    r[i] = acc;
  }
  return r;
}

double Target::cross(const Fitted& f, double beta) const {
  return f.a.dot(cross_vector(f.centers, beta));
}

NoiseSpec NoiseSpec::parse(const std::string& s) {
  NoiseSpec out;
  const auto colon = s.find(':');
  const std::string head = s.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : s.substr(colon + 1);
  auto level = [&](double fallback) {
    if (rest.empty()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(rest, &used);
      if (used != rest.size()) throw std::invalid_argument(rest);
      return v;
    } catch (const std::exception&) {
      throw InvalidArgument("bad noise level in '" + s + "'");
    }
  };
  if (head == "gaussian") {
    out.kind = Kind::Gaussian;
    out.sigma = level(out.sigma);
    if (out.sigma < 0.0) throw InvalidArgument("noise sigma must be nonnegative");
  } else if (head == "uniform") {
    out.kind = Kind::UniformBounded;
    out.bound = level(out.bound);
    if (out.bound < 0.0) throw InvalidArgument("noise bound must be nonnegative");
  } else if (head == "bernoulli") {
    out.kind = Kind::SymmetricBernoulli;
    if (!rest.empty()) throw InvalidArgument("bernoulli noise takes no level");
  } else {
    throw InvalidArgument("unknown noise kind '" + head + "'");
  }
  return out;
}

std::string NoiseSpec::str() const {
  char buf[64];
  switch (kind) {
  case Kind::Gaussian:
    std::snprintf(buf, sizeof buf, "gaussian:%g", sigma);
    return buf;
  case Kind::UniformBounded:
    std::snprintf(buf, sizeof buf, "uniform:%g", bound);
    return buf;
  case Kind::SymmetricBernoulli:
    return "bernoulli";
  }
  return "";
}

Eigen::VectorXd sample_noise(const NoiseSpec& spec, Eigen::Index n) {
  if (n < 1) throw InvalidArgument("sample_noise: n must be positive");
  if (spec.sigma < 0.0 || spec.bound < 0.0)
    throw InvalidArgument("sample_noise: negative noise level");
  Rng rng(derive_seed(spec.seed, 0x6e6f6973)); // "nois"
  Eigen::VectorXd eps(n);
  switch (spec.kind) {
  case NoiseSpec::Kind::Gaussian:
    for (Eigen::Index i = 0; i < n; ++i) eps[i] = spec.sigma * rng.normal();
    break;
  case NoiseSpec::Kind::UniformBounded:
    for (Eigen::Index i = 0; i < n; ++i) eps[i] = rng.uniform(-spec.bound, spec.bound);
    break;
  case NoiseSpec::Kind::SymmetricBernoulli:
    for (Eigen::Index i = 0; i < n; ++i) eps[i] = rng.sign();
    break;
  }
  return eps;
}

double sub_gaussian_norm(const NoiseSpec& spec) {
  constexpr double inv_sqrt_ln2 = 1.2011224087864498; // 1 / sqrt(ln 2)
  switch (spec.kind) {
  case NoiseSpec::Kind::Gaussian:
    return std::sqrt(8.0 / 3.0) * spec.sigma;
  case NoiseSpec::Kind::UniformBounded:
    return spec.bound * inv_sqrt_ln2;
  case NoiseSpec::Kind::SymmetricBernoulli:
    return inv_sqrt_ln2;
  }
  return 0.0;
}

double error_norm(const Fitted& f, const Target& target, double beta) {
  require_beta(beta, target.alpha());
  const KernelSpec& ks = target.spec();
  if (f.spec.d != ks.d || f.spec.gamma != ks.gamma || f.spec.kmax != ks.kmax ||
      f.spec.power != ks.power)
    throw InvalidArgument("error_norm: fitted kernel and target kernel differ");
  const double self = filtered_quadratic_form(ks, f.centers.X, f.a, f.centers.X, f.a,
                                              transforms::power(2.0 - beta));
  const double cross = target.cross(f, beta);
  const double tsq = target.norm_sq(beta);
  return std::sqrt(std::max(0.0, self - 2.0 * cross + tsq));
}

ErrorEvaluator::ErrorEvaluator(const Target& target, const PointSet& centers,
                               const std::vector<double>& betas)
    : betas_(betas) {
  const KernelSpec& ks = target.spec();
  for (double beta : betas_) {
    require_beta(beta, target.alpha());
    const auto c = transformed_coeffs(ks, transforms::power(2.0 - beta));
    self_gram_.push_back(zonal_gram_sym(ks.d, c, centers.X));
    cross_.push_back(target.cross_vector(centers, beta));
    target_sq_.push_back(target.norm_sq(beta));
  }
}

double ErrorEvaluator::operator()(const Eigen::VectorXd& a, double beta) const {
  for (std::size_t i = 0; i < betas_.size(); ++i) {
    if (betas_[i] == beta) {
      const double sq = a.dot(self_gram_[i] * a) - 2.0 * a.dot(cross_[i]) + target_sq_[i];
      return std::sqrt(std::max(0.0, sq));
    }
  }
  throw InvalidArgument("ErrorEvaluator: exponent was not precomputed");
}

double effective_dimension(const KernelSpec& spec, double lambda) {
  spec.validate();
  if (!(lambda > 0.0)) throw InvalidArgument("effective_dimension: lambda must be positive");
  double acc = 0.0;
  for (int k = 0; k <= spec.kmax; ++k) {
    const double phik = spec.coeff(k);
    acc += phik / (phik + lambda) * static_cast<double>(harmonics::dim_harmonic(spec.d, k));
  }
  return acc;
}

double stability_functional(const QuadratureRule& rule, const KernelSpec& spec,
                            double lambda, const Eigen::VectorXd& eps) {
  if (!(lambda > 0.0)) throw InvalidArgument("stability_functional: lambda must be positive");
  if (eps.size() != rule.pts.size())
    throw InvalidArgument("stability_functional: noise vector length mismatch");
  const Eigen::VectorXd a = rule.w.cwiseProduct(eps);
  const double sq = filtered_quadratic_form(spec, rule.pts.X, a, rule.pts.X, a,
                                            transforms::tikhonov_ratio(lambda));
  return std::sqrt(std::max(0.0, sq));
}

Eigen::MatrixXd stability_gram(const QuadratureRule& rule, const KernelSpec& spec,
                               double lambda) {
  spec.validate();
  if (!(lambda > 0.0)) throw InvalidArgument("stability_gram: lambda must be positive");
  const auto c = transformed_coeffs(spec, transforms::tikhonov_ratio(lambda));
  return zonal_gram_sym(spec.d, c, rule.pts.X);
}

double stability_functional(const QuadratureRule& rule, const Eigen::MatrixXd& gram,
                            const Eigen::VectorXd& eps) {
  if (eps.size() != rule.pts.size())
    throw InvalidArgument("stability_functional: noise vector length mismatch");
  if (gram.rows() != rule.pts.size() || gram.cols() != rule.pts.size())
    throw InvalidArgument("stability_functional: gram size mismatch");
  const Eigen::VectorXd a = rule.w.cwiseProduct(eps);
  return std::sqrt(std::max(0.0, a.dot(gram * a)));
}

double discrepancy_probe(const QuadratureRule& rule, const KernelSpec& spec,
                         double lambda, double u, double alpha, int trials,
                         std::uint64_t seed, int n_centers) {
  spec.validate();
  if (!(lambda > 0.0)) throw InvalidArgument("discrepancy_probe: lambda must be positive");
  if (u < 0.0 || u > 0.5) throw InvalidArgument("discrepancy_probe: u must lie in [0, 1/2]");
  if (trials < 1 || n_centers < 1) throw InvalidArgument("discrepancy_probe: bad trial counts");
  if (!(alpha * spec.gamma > 0.5 * spec.d))
    throw InvalidArgument("discrepancy_probe: alpha * gamma must exceed d / 2");

  const auto c_f = transformed_coeffs(spec, transforms::power(alpha));
  const auto c_g = transformed_coeffs(
      spec, transforms::multiply(transforms::power(1.0), transforms::resolvent_power(lambda, u)));
  const auto cross_transform = transforms::multiply(transforms::power(1.0 + alpha),
                                                    transforms::resolvent_power(lambda, u));
  double probe = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t tag = static_cast<std::uint64_t>(trial);
    const PointSet zf = random_uniform_points(n_centers, derive_seed(seed, tag, 1));
    const PointSet zg = random_uniform_points(n_centers, derive_seed(seed, tag, 2));
    Rng rng(derive_seed(seed, tag, 3));
    Eigen::VectorXd bf(n_centers), cg(n_centers);
    for (int i = 0; i < n_centers; ++i) bf[i] = rng.normal();
    for (int i = 0; i < n_centers; ++i) cg[i] = rng.normal();
    const double nf = filtered_quadratic_form(spec, zf.X, bf, zf.X, bf, transforms::power(alpha));
    const double ng = filtered_quadratic_form(spec, zg.X, cg, zg.X, cg, transforms::power(1.0));
    if (!(nf > 0.0) || !(ng > 0.0)) continue;
    bf /= std::sqrt(nf);
    cg /= std::sqrt(ng);
    const double exact = filtered_quadratic_form(spec, zf.X, bf, zg.X, cg, cross_transform);
    const Eigen::VectorXd fv = zonal_gram(spec.d, c_f, rule.pts.X, zf.X) * bf;
    const Eigen::VectorXd gv = zonal_gram(spec.d, c_g, rule.pts.X, zg.X) * cg;
    const double disc = rule.w.dot(fv.cwiseProduct(gv));
    probe = std::max(probe, std::abs(exact - disc));
  }
  return probe;
}

double PowerRule::at(double n) const { return c * std::pow(n, exponent); }

std::string metric_name(double beta) {
  if (beta == 0.0) return "l2";
  char buf[48];
  std::snprintf(buf, sizeof buf, "psi_%g", beta);
  return buf;
}

StudyResult convergence_study(const StudyConfig& cfg) {
  cfg.kernel.validate();
  if (cfg.sizes.empty()) throw InvalidArgument("convergence_study: no sizes");
  for (std::size_t i = 1; i < cfg.sizes.size(); ++i)
    if (cfg.sizes[i] <= cfg.sizes[i - 1])
      throw InvalidArgument("convergence_study: sizes must be strictly increasing");
  if (cfg.trials < 1) throw InvalidArgument("convergence_study: trials must be positive");
  if (cfg.betas.empty()) throw InvalidArgument("convergence_study: no error metrics requested");
  if (cfg.points_kind != "fibonacci" && cfg.points_kind != "random")
    throw InvalidArgument("convergence_study: unknown point kind '" + cfg.points_kind + "'");

  const Target target = make_target(cfg.target, cfg.kernel);
  StudyResult res;
  for (int n : cfg.sizes) {
    if (n < 1) throw InvalidArgument("convergence_study: sizes must be positive");
    PointSet pts = cfg.points_kind == "fibonacci"
                       ? fibonacci_points(n)
                       : random_uniform_points(n, derive_seed(cfg.master_seed, 0x67656f6d,
                                                              static_cast<std::uint64_t>(n)));
    const int s = std::max(1, static_cast<int>(std::llround(cfg.degree_rule.at(n))));
    const QuadratureRule rule = compute_weights(pts, s);
    const WsfaSolver solver(cfg.kernel, rule);
    const ErrorEvaluator evaluate_error(target, pts, cfg.betas);
    const Eigen::VectorXd clean = target.evaluate(pts);
    const double lam = cfg.lambda_rule.at(n);
    if (!(lam > 0.0)) throw InvalidArgument("convergence_study: lambda rule gave a nonpositive value");

    std::vector<std::vector<double>> per_beta(cfg.betas.size());
    for (int trial = 0; trial < cfg.trials; ++trial) {
      NoiseSpec ns = cfg.noise;
      ns.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(n),
                            static_cast<std::uint64_t>(trial));
      const Eigen::VectorXd y = clean + sample_noise(ns, n);
      const Fitted fit = solver.fit(y, cfg.filter, lam);
      for (std::size_t bi = 0; bi < cfg.betas.size(); ++bi) {
        const double err = evaluate_error(fit.a, cfg.betas[bi]);
        res.rows.push_back({n, trial, metric_name(cfg.betas[bi]), err});
        per_beta[bi].push_back(err);
      }
    }
    for (std::size_t bi = 0; bi < cfg.betas.size(); ++bi) {
      const auto& vals = per_beta[bi];
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double se = 0.0;
      if (vals.size() > 1) {
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        se = std::sqrt(ss / static_cast<double>(vals.size() - 1)) /
             std::sqrt(static_cast<double>(vals.size()));
      }
      res.summary.push_back({n, metric_name(cfg.betas[bi]), mean, se});
    }
  }
  return res;
}

void summary_series(const StudyResult& res, const std::string& metric,
                    std::vector<double>& sizes, std::vector<double>& means) {
  sizes.clear();
  means.clear();
  for (const auto& row : res.summary) {
    if (row.metric == metric) {
      sizes.push_back(static_cast<double>(row.size));
      means.push_back(row.mean);
    }
  }
}

double rate_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidArgument("rate_slope: length mismatch");
  if (x.size() < 3) throw InvalidArgument("rate_slope: need at least three points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw InvalidArgument("rate_slope: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("rate_slope: abscissae are all equal");
  return sxy / sxx;
}

} // namespace sphfit
