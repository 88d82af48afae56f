#include "core/harmonics.hpp"

#include <cmath>
#include <limits>

#include "core/errors.hpp"

namespace sphfit::harmonics {

namespace {

void check_d(int d) {
  if (d < 2 || d > 8) throw InvalidArgument("sphere dimension d must be in [2, 8]");
}

// Exact binomial coefficient C(n, r) for small r, with overflow detection.
unsigned __int128 binom_u128(std::int64_t n, int r) {
  if (r < 0 || n < r) return 0;
  unsigned __int128 acc = 1;
  for (int j = 1; j <= r; ++j) {
    acc = acc * static_cast<unsigned __int128>(n - r + j);
    acc /= static_cast<unsigned>(j);
  }
  return acc;
}

} // namespace

std::int64_t dim_harmonic(int d, int k) {
  check_d(d);
  if (k < 0) throw InvalidArgument("degree k must be nonnegative");
  if (k == 0) return 1;
  // dim = dim P_k(R^{d+1}) - dim P_{k-2}(R^{d+1}) restricted to the sphere.
  const unsigned __int128 a = binom_u128(static_cast<std::int64_t>(k) + d, d);
  const unsigned __int128 b = binom_u128(static_cast<std::int64_t>(k) + d - 2, d);
  const unsigned __int128 dim = a - b;
  if (dim > static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max()))
    throw InvalidArgument("harmonic dimension exceeds 64-bit range");
  return static_cast<std::int64_t>(dim);
}

double clamp_cosine(double t) {
  if (t > 1.0) {
    if (t > 1.0 + 1e-12) throw InvalidArgument("cosine argument exceeds 1 beyond tolerance");
    return 1.0;
  }
  if (t < -1.0) {
    if (t < -1.0 - 1e-12) throw InvalidArgument("cosine argument below -1 beyond tolerance");
    return -1.0;
  }
  return t;
}

void gegenbauer_batch(int d, int kmax, double t, double* out) {
  check_d(d);
  if (kmax < 0) throw InvalidArgument("kmax must be nonnegative");
  t = clamp_cosine(t);
  const double lam = 0.5 * (d - 1);
  out[0] = 1.0;
  if (kmax == 0) return;
  out[1] = t;
  // Normalized three-term recurrence:
  //   P_{k+1} = (2(k+lam) t P_k - k P_{k-1}) / (k + 2 lam)
  for (int k = 1; k < kmax; ++k) {
    out[k + 1] = (2.0 * (k + lam) * t * out[k] - k * out[k - 1]) / (k + 2.0 * lam);
  }
}

std::vector<double> gegenbauer_all(int d, int kmax, double t) {
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1);
  gegenbauer_batch(d, kmax, t, out.data());
  return out;
}

double gegenbauer(int d, int k, double t) {
  check_d(d);
  if (k < 0) throw InvalidArgument("degree k must be nonnegative");
  t = clamp_cosine(t);
  if (k == 0) return 1.0;
  const double lam = 0.5 * (d - 1);
  double pm = 1.0, pc = t;
  for (int j = 1; j < k; ++j) {
    const double pn = (2.0 * (j + lam) * t * pc - j * pm) / (j + 2.0 * lam);
    pm = pc;
    pc = pn;
  }
  return pc;
}

} // namespace sphfit::harmonics
