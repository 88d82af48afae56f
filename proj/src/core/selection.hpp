#pragma once

#include <functional>
#include <vector>

#include "core/estimator.hpp"

namespace sphfit {

// Geometric grid lambda_k = q0 q^k for k = 1..K, K the largest integer with
// q0 q^K >= floor.  Throws if the grid would be empty.
std::vector<double> lambda_grid(double q0, double q, double floor);

// Grid floor tied to the rule degree: s^(-2 gamma).
double default_lambda_floor(int s, double gamma);

struct LepskiiConfig {
  double q0 = 1.0;
  double q = 0.5;
  double lambda_floor = -1.0; // <= 0 means derive from the rule degree
  double kappa_lp = 1.0;
  double delta = 0.05;
};

struct LepskiiTraceRow {
  int k = 0;
  double lambda = 0.0;
  double statistic = 0.0;
  double threshold = 0.0;
  bool accepted = false;
};

struct LepskiiResult {
  double lambda_hat = 0.0;
  int k_hat = 0;
  bool fallback = false; // no k satisfied the inequality
  std::vector<double> grid;
  std::vector<Fitted> fits; // aligned with grid (index 0 <-> k = 1)
  std::vector<LepskiiTraceRow> trace;
};

// Fits every grid lambda, then scans k = K, K-1, ..., 2 and selects the first
// k whose consecutive-fit difference passes
//   graded_norm(f_k - f_{k-1}, rule, lambda_k)
//     <= kappa_lp lambda_k^(-d/(4 gamma)) |Lambda|^(-1/2) log(6/delta).
// Falls back to k = K when no k passes.
LepskiiResult lepskii_select(const WsfaSolver& solver, const Eigen::VectorXd& y,
                             const FilterSpec& filter, const LepskiiConfig& cfg);

// Index into `grid` minimizing `error_of_fit` (calls it once per grid entry).
std::size_t oracle_best_index(const std::vector<Fitted>& fits,
                              const std::function<double(const Fitted&)>& error_of_fit);

// Everything calibration needs from one synthetic trial: the selection
// statistics, the thresholds at kappa_lp = 1, and the true error of each
// grid fit.
struct LepskiiTrialData {
  std::vector<double> statistics;      // index 0 <-> k = 2
  std::vector<double> unit_thresholds; // same indexing
  std::vector<double> errors;          // index 0 <-> k = 1
};

// Replays the scan for a candidate kappa on precomputed statistics.
int replay_k_hat(const LepskiiTrialData& trial, double kappa);

// Picks the candidate kappa maximizing the number of trials whose selected
// fit has error within `ratio_cap` times the trial's oracle error.  Ties go
// to the earliest candidate.
double calibrate_kappa(const std::vector<LepskiiTrialData>& trials,
                       const std::vector<double>& candidates, double ratio_cap = 3.0);

} // namespace sphfit
