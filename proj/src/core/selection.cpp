#include "core/selection.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace sphfit {

std::vector<double> lambda_grid(double q0, double q, double floor) {
  if (!(q0 > 0.0) || !(q > 0.0) || q >= 1.0)
    throw InvalidArgument("lambda_grid: need q0 > 0 and q in (0, 1)");
  if (!(floor > 0.0)) throw InvalidArgument("lambda_grid: floor must be positive");
  std::vector<double> grid;
  double lam = q0;
  for (int k = 1;; ++k) {
    lam *= q;
    if (lam < floor) break;
    grid.push_back(lam);
    if (k > 10000) throw InvalidArgument("lambda_grid: grid unreasonably long");
  }
  if (grid.empty()) throw InvalidArgument("lambda_grid: empty grid (floor above q0 q)");
  return grid;
}

double default_lambda_floor(int s, double gamma) {
  if (s < 1) throw InvalidArgument("default_lambda_floor: rule degree must be >= 1");
  return std::pow(static_cast<double>(s), -2.0 * gamma);
}

LepskiiResult lepskii_select(const WsfaSolver& solver, const Eigen::VectorXd& y,
                             const FilterSpec& filter, const LepskiiConfig& cfg) {
  const double floor = cfg.lambda_floor > 0.0
                           ? cfg.lambda_floor
                           : default_lambda_floor(solver.rule().degree, solver.spec().gamma);
  LepskiiResult res;
  res.grid = lambda_grid(cfg.q0, cfg.q, floor);
  const int K = static_cast<int>(res.grid.size());
  res.fits.reserve(res.grid.size());
  for (double lam : res.grid) res.fits.push_back(solver.fit(y, filter, lam));

  const double d = solver.spec().d;
  const double gamma = solver.spec().gamma;
  const double n = static_cast<double>(solver.rule().pts.size());
  const double log_term = std::log(6.0 / cfg.delta);

  // The statistic is graded_norm(f_k - f_{k-1}, rule, lambda_k).  Every fit
  // has coefficients a = W^{1/2} U v, for which the empirical term is
  // |Sigma v|^2 and the native term v^T Sigma v, so the norm is evaluated in
  // the eigenbasis instead of assembling an n x n Gram per grid point.
  const Eigen::VectorXd& sig = solver.eigenvalues();
  const Eigen::MatrixXd& U = solver.eigenvectors();
  const Eigen::ArrayXd sqrt_w = solver.rule().w.array().sqrt();
  const bool spectral_ok = (solver.rule().w.array() > 0.0).all();

  res.trace.reserve(static_cast<std::size_t>(std::max(0, K - 1)));
  for (int k = 2; k <= K; ++k) {
    const double lam = res.grid[static_cast<std::size_t>(k - 1)];
    LepskiiTraceRow row;
    row.k = k;
    row.lambda = lam;
    if (spectral_ok) {
      const Eigen::ArrayXd da =
          (res.fits[static_cast<std::size_t>(k - 1)].a - res.fits[static_cast<std::size_t>(k - 2)].a)
              .array();
      const Eigen::ArrayXd dv = (U.transpose() * (da / sqrt_w).matrix()).array();
      row.statistic = std::sqrt(std::max(
          0.0, ((sig.array().square() + lam * sig.array()) * dv.square()).sum()));
    } else {
      Fitted diff = res.fits[static_cast<std::size_t>(k - 1)];
      diff.a -= res.fits[static_cast<std::size_t>(k - 2)].a;
      row.statistic = graded_norm(diff, solver.rule(), lam);
    }
    row.threshold =
        cfg.kappa_lp * std::pow(lam, -d / (4.0 * gamma)) / std::sqrt(n) * log_term;
    row.accepted = row.statistic <= row.threshold;
    res.trace.push_back(row);
  }

  res.k_hat = K;
  res.fallback = true;
  for (int k = K; k >= 2; --k) {
    const auto& row = res.trace[static_cast<std::size_t>(k - 2)];
    if (row.accepted) {
      res.k_hat = k;
      res.fallback = false;
      break;
    }
  }
  res.lambda_hat = res.grid[static_cast<std::size_t>(res.k_hat - 1)];
  return res;
}

std::size_t oracle_best_index(const std::vector<Fitted>& fits,
                              const std::function<double(const Fitted&)>& error_of_fit) {
  if (fits.empty()) throw InvalidArgument("oracle_best_index: no fits");
  std::size_t best = 0;
  double best_err = error_of_fit(fits[0]);
  for (std::size_t i = 1; i < fits.size(); ++i) {
    const double e = error_of_fit(fits[i]);
    if (e < best_err) {
      best_err = e;
      best = i;
    }
  }
  return best;
}

int replay_k_hat(const LepskiiTrialData& trial, double kappa) {
  const int K = static_cast<int>(trial.errors.size());
  for (int k = K; k >= 2; --k) {
    const std::size_t idx = static_cast<std::size_t>(k - 2);
    if (trial.statistics[idx] <= kappa * trial.unit_thresholds[idx]) return k;
  }
  return K;
}

double calibrate_kappa(const std::vector<LepskiiTrialData>& trials,
                       const std::vector<double>& candidates, double ratio_cap) {
  if (candidates.empty()) throw InvalidArgument("calibrate_kappa: no candidates");
  if (trials.empty()) throw InvalidArgument("calibrate_kappa: no trials");
  double best_kappa = candidates.front();
  int best_score = -1;
  for (double kappa : candidates) {
    int score = 0;
    for (const auto& trial : trials) {
      const int k_hat = replay_k_hat(trial, kappa);
      double oracle = trial.errors[0];
      for (double e : trial.errors) oracle = std::min(oracle, e);
      if (trial.errors[static_cast<std::size_t>(k_hat - 1)] <= ratio_cap * oracle) ++score;
    }
    if (score > best_score) {
      best_score = score;
      best_kappa = kappa;
    }
  }
  return best_kappa;
}

} // namespace sphfit
