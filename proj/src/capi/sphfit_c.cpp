#include "sphfit/sphfit.h"

#include <cmath>
#include <cstring>
#include <string>

#include "core/errors.hpp"
#include "core/estimator.hpp"
#include "core/geometry.hpp"
#include "core/kernel.hpp"
#include "core/quadrature.hpp"
#include "core/runner.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

// Translates the library's exception hierarchy onto the C status codes.
template <typename Fn> sphfit_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SPHFIT_OK;
  } catch (const sphfit::ConfigError& e) {
    set_error(e.what());
    return SPHFIT_EINVAL;
  } catch (const sphfit::InvalidArgument& e) {
    set_error(e.what());
    return SPHFIT_EINVAL;
  } catch (const sphfit::NumericalError& e) {
    set_error(e.what());
    return SPHFIT_ENUMERIC;
  } catch (const sphfit::IoError& e) {
    set_error(e.what());
    return SPHFIT_EIO;
  } catch (const std::exception& e) {
    set_error(e.what());
    return SPHFIT_EINTERNAL;
  } catch (...) {
    set_error("unknown failure");
    return SPHFIT_EINTERNAL;
  }
}

sphfit::KernelSpec to_spec(const sphfit_kernel* kernel) {
  if (kernel == nullptr) throw sphfit::InvalidArgument("kernel must not be NULL");
  sphfit::KernelSpec spec;
  spec.d = kernel->d;
  spec.gamma = kernel->gamma;
  spec.kmax = kernel->k_max;
  spec.validate();
  return spec;
}

template <typename T> T* require(T* p, const char* what) {
  if (p == nullptr) throw sphfit::InvalidArgument(std::string(what) + " must not be NULL");
  return p;
}

void copy_message(char* message, size_t cap, const std::string& text) {
  if (message == nullptr || cap == 0) return;
  const size_t n = text.size() < cap - 1 ? text.size() : cap - 1;
  std::memcpy(message, text.data(), n);
  message[n] = '\0';
}

} // namespace

struct sphfit_points {
  sphfit::PointSet ps;
};

struct sphfit_rule {
  sphfit::QuadratureRule rule;
};

struct sphfit_fitted {
  sphfit::Fitted f;
};

extern "C" {

const char* sphfit_version(void) { return sphfit::run::kVersion; }

const char* sphfit_last_error(void) { return g_last_error.c_str(); }

sphfit_status sphfit_points_fibonacci(int n, sphfit_points** out) {
  return guarded([&] {
    require(out, "out");
    *out = new sphfit_points{sphfit::fibonacci_points(n)};
  });
}

sphfit_status sphfit_points_random(int n, uint64_t seed, sphfit_points** out) {
  return guarded([&] {
    require(out, "out");
    *out = new sphfit_points{sphfit::random_uniform_points(n, seed)};
  });
}

sphfit_status sphfit_points_create(const double* xyz, int n, sphfit_points** out) {
  return guarded([&] {
    require(xyz, "xyz");
    require(out, "out");
    if (n < 1) throw sphfit::InvalidArgument("n must be positive");
    sphfit::PointSet ps;
    ps.X.resize(n, 3);
    for (int i = 0; i < n; ++i) {
      Eigen::RowVector3d row(xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]);
      const double norm = row.norm();
      if (std::abs(norm - 1.0) > 1e-6)
        throw sphfit::InvalidArgument("row " + std::to_string(i) + " is not a unit vector");
      ps.X.row(i) = row / norm;
    }
    *out = new sphfit_points{std::move(ps)};
  });
}

sphfit_status sphfit_points_count(const sphfit_points* pts, int* n) {
  return guarded([&] {
    require(pts, "pts");
    require(n, "n");
    *n = static_cast<int>(pts->ps.size());
  });
}

sphfit_status sphfit_points_get(const sphfit_points* pts, double* xyz) {
  return guarded([&] {
    require(pts, "pts");
    require(xyz, "xyz");
    for (Eigen::Index i = 0; i < pts->ps.size(); ++i)
      for (int c = 0; c < 3; ++c) xyz[3 * i + c] = pts->ps.X(i, c);
  });
}

void sphfit_points_free(sphfit_points* pts) { delete pts; }

sphfit_status sphfit_rule_compute(const sphfit_points* pts, int degree, double tol,
                                  sphfit_rule** out) {
  return guarded([&] {
    require(pts, "pts");
    require(out, "out");
    sphfit::ComputeWeightsOptions opts;
    if (tol > 0.0) opts.tol = tol;
    *out = new sphfit_rule{sphfit::compute_weights(pts->ps, degree, opts)};
  });
}

sphfit_status sphfit_rule_equal_weights(const sphfit_points* pts, int degree,
                                        sphfit_rule** out) {
  return guarded([&] {
    require(pts, "pts");
    require(out, "out");
    *out = new sphfit_rule{sphfit::equal_weight_rule(pts->ps, degree)};
  });
}

sphfit_status sphfit_rule_count(const sphfit_rule* rule, int* n) {
  return guarded([&] {
    require(rule, "rule");
    require(n, "n");
    *n = static_cast<int>(rule->rule.pts.size());
  });
}

sphfit_status sphfit_rule_weights(const sphfit_rule* rule, double* w) {
  return guarded([&] {
    require(rule, "rule");
    require(w, "w");
    for (Eigen::Index i = 0; i < rule->rule.w.size(); ++i) w[i] = rule->rule.w[i];
  });
}

sphfit_status sphfit_rule_info(const sphfit_rule* rule, int* degree, double* residual) {
  return guarded([&] {
    require(rule, "rule");
    if (degree != nullptr) *degree = rule->rule.degree;
    if (residual != nullptr) *residual = rule->rule.residual;
  });
}

sphfit_status sphfit_rule_max_exact_degree(const sphfit_rule* rule, double tol, int* out) {
  return guarded([&] {
    require(rule, "rule");
    require(out, "out");
    *out = sphfit::max_exact_degree(rule->rule, tol > 0.0 ? tol : 1e-12);
  });
}

void sphfit_rule_free(sphfit_rule* rule) { delete rule; }

sphfit_status sphfit_fit(const sphfit_rule* rule, const sphfit_kernel* kernel, const double* y,
                         const char* filter, double lambda, sphfit_fitted** out) {
  return guarded([&] {
    require(rule, "rule");
    require(y, "y");
    require(filter, "filter");
    require(out, "out");
    const sphfit::KernelSpec spec = to_spec(kernel);
    const sphfit::FilterSpec fspec = sphfit::FilterSpec::parse(filter);
    double lam = lambda;
    if (lam <= 0.0) {
      if (fspec.has_intrinsic_lambda() && fspec.t > 0)
        lam = fspec.intrinsic_lambda();
      else
        throw sphfit::InvalidArgument("lambda must be positive");
    }
    const Eigen::Index n = rule->rule.pts.size();
    sphfit::DataSet data;
    data.pts = rule->rule.pts;
    data.y = Eigen::Map<const Eigen::VectorXd>(y, n);
    *out = new sphfit_fitted{sphfit::fit_wsfa(data, rule->rule, spec, fspec, lam)};
  });
}

sphfit_status sphfit_fitted_count(const sphfit_fitted* f, int* n) {
  return guarded([&] {
    require(f, "fitted");
    require(n, "n");
    *n = static_cast<int>(f->f.a.size());
  });
}

sphfit_status sphfit_fitted_coeffs(const sphfit_fitted* f, double* a) {
  return guarded([&] {
    require(f, "fitted");
    require(a, "a");
    for (Eigen::Index i = 0; i < f->f.a.size(); ++i) a[i] = f->f.a[i];
  });
}

sphfit_status sphfit_fitted_evaluate(const sphfit_fitted* f, const sphfit_points* queries,
                                     double* values) {
  return guarded([&] {
    require(f, "fitted");
    require(queries, "queries");
    require(values, "values");
    const Eigen::VectorXd v = sphfit::evaluate(f->f, queries->ps);
    for (Eigen::Index i = 0; i < v.size(); ++i) values[i] = v[i];
  });
}

void sphfit_fitted_free(sphfit_fitted* f) { delete f; }

sphfit_status sphfit_run_json(const char* config_json, const char* out_dir, char* message,
                              size_t message_cap) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out_dir, "out_dir");
    const sphfit::run::Outcome outcome = sphfit::run::run_json_text(config_json, out_dir);
    copy_message(message, message_cap, outcome.message);
  });
}

sphfit_status sphfit_run_manifest(const char* manifest_path, const char* out_dir, char* message,
                                  size_t message_cap) {
  return guarded([&] {
    require(manifest_path, "manifest_path");
    require(out_dir, "out_dir");
    const sphfit::run::Outcome outcome = sphfit::run::run_manifest(manifest_path, out_dir);
    copy_message(message, message_cap, outcome.message);
  });
}

} // extern "C"
