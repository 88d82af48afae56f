#include "core/filters.hpp"

#include <cmath>
#include <cstdio>

#include "core/errors.hpp"

namespace sphfit {

FilterSpec FilterSpec::parse(const std::string& s) {
  FilterSpec f;
  if (s == "tikhonov") {
    f.kind = FilterKind::Tikhonov;
    return f;
  }
  if (s == "cutoff") {
    f.kind = FilterKind::CutOff;
    return f;
  }
  if (s.rfind("itik:", 0) == 0) {
    f.kind = FilterKind::IteratedTikhonov;
    char* end = nullptr;
    const long v = std::strtol(s.c_str() + 5, &end, 10);
    if (end == s.c_str() + 5 || *end != '\0' || v < 1)
      throw InvalidArgument("filter: bad iterated-Tikhonov count in '" + s + "'");
    f.v = static_cast<int>(v);
    return f;
  }
  if (s.rfind("landweber:", 0) == 0) {
    f.kind = FilterKind::Landweber;
    double tau = 0.0;
    long t = 0;
    char extra = 0;
    if (std::sscanf(s.c_str(), "landweber:%lf:%ld%c", &tau, &t, &extra) != 2 || !(tau > 0.0) || t < 1)
      throw InvalidArgument("filter: expected landweber:tau:t in '" + s + "'");
    f.tau = tau;
    f.t = static_cast<int>(t);
    return f;
  }
  throw InvalidArgument("filter: unknown spec '" + s + "'");
}

std::string FilterSpec::str() const {
  char buf[64];
  switch (kind) {
    case FilterKind::Tikhonov:
      return "tikhonov";
    case FilterKind::CutOff:
      return "cutoff";
    case FilterKind::IteratedTikhonov:
      std::snprintf(buf, sizeof(buf), "itik:%d", v);
      return buf;
    case FilterKind::Landweber:
      std::snprintf(buf, sizeof(buf), "landweber:%.17g:%d", tau, t);
      return buf;
  }
  return "";
}

double FilterSpec::intrinsic_lambda() const {
  if (kind != FilterKind::Landweber)
    throw InvalidArgument("filter: only Landweber has an intrinsic lambda");
  return 1.0 / (tau * t);
}

FilterSpec FilterSpec::at_lambda(double lambda) const {
  if (!(lambda > 0.0)) throw InvalidArgument("filter: lambda must be positive");
  FilterSpec f = *this;
  if (kind == FilterKind::Landweber)
    f.t = std::max(1, static_cast<int>(std::llround(1.0 / (tau * lambda))));
  return f;
}

double apply_filter(const FilterSpec& f, double sigma, double lambda) {
  if (sigma < 0.0) throw InvalidArgument("apply_filter: sigma must be nonnegative");
  if (!(lambda > 0.0)) throw InvalidArgument("apply_filter: lambda must be positive");
  switch (f.kind) {
    case FilterKind::Tikhonov:
      return 1.0 / (sigma + lambda);
    case FilterKind::IteratedTikhonov: {
      // ((sigma+lambda)^v - lambda^v) / (sigma (sigma+lambda)^v), limit v/lambda.
      if (sigma < 1e-14 * lambda) return f.v / (sigma + lambda);
      // (1 - (lambda/(sigma+lambda))^v) / sigma without cancellation.
      const double q = sigma / (sigma + lambda);
      return -std::expm1(f.v * std::log1p(-q)) / sigma;
    }
    case FilterKind::CutOff:
      return sigma >= lambda ? 1.0 / sigma : 0.0;
    case FilterKind::Landweber: {
      if (f.t < 1 || !(f.tau > 0.0)) throw InvalidArgument("apply_filter: bad Landweber parameters");
      const double u = f.tau * sigma;
      if (u >= 1.0) return (1.0 - std::pow(1.0 - u, f.t)) / sigma;
      if (sigma < 1e-14 / (f.tau * f.t)) return f.tau * f.t;
      // (1 - (1-u)^t) / sigma computed without cancellation for small u.
      return -std::expm1(static_cast<double>(f.t) * std::log1p(-u)) / sigma;
    }
  }
  throw InvalidArgument("apply_filter: unknown filter kind");
}

double residual_factor(const FilterSpec& f, double sigma, double lambda) {
  if (sigma < 0.0) throw InvalidArgument("residual_factor: sigma must be nonnegative");
  if (!(lambda > 0.0)) throw InvalidArgument("residual_factor: lambda must be positive");
  switch (f.kind) {
    case FilterKind::Tikhonov:
      return lambda / (sigma + lambda);
    case FilterKind::IteratedTikhonov:
      return std::pow(lambda / (sigma + lambda), f.v);
    case FilterKind::CutOff:
      return sigma >= lambda ? 0.0 : 1.0;
    case FilterKind::Landweber:
      return std::pow(1.0 - f.tau * sigma, f.t);
  }
  throw InvalidArgument("residual_factor: unknown filter kind");
}

double qualification(const FilterSpec& f) {
  switch (f.kind) {
    case FilterKind::Tikhonov:
      return 1.0;
    case FilterKind::IteratedTikhonov:
      return f.v;
    case FilterKind::CutOff:
    case FilterKind::Landweber:
      return kInfiniteQualification;
  }
  throw InvalidArgument("qualification: unknown filter kind");
}

double filter_b(const FilterSpec& f) {
  return f.kind == FilterKind::IteratedTikhonov ? static_cast<double>(f.v) : 1.0;
}

} // namespace sphfit
