#pragma once

#include <Eigen/Dense>
#include <string>

#include "core/geometry.hpp"

namespace sphfit {

struct QuadratureRule {
  PointSet pts;
  Eigen::VectorXd w;
  int degree = 0;      // degree the weights were solved for
  double residual = 0; // design discrepancy at that degree
};

// Exactness functional for weights w on the point set at polynomial degree s:
//   E(w) = (sum_i w_i - 1)^2 + sum_{k=1}^{s} Z(d,k) sum_{i,j} w_i w_j P_k(x_i . x_j).
// Nonnegative, and zero exactly when the rule integrates every spherical
// polynomial of degree <= s (with the uniform measure normalized to mass 1).
double design_discrepancy(const PointSet& ps, const Eigen::VectorXd& w, int s, int d = 2);

struct ComputeWeightsOptions {
  double tol = 1e-20;
  long max_iters = 100000;
  double w_floor_scale = 1e-12; // floor = scale / n
};

// Solves for nonnegative quadrature weights by projected gradient descent on
// E(w) over {w >= floor}, starting from equal weights.  Throws
// InfeasibleDegree when the functional cannot reach `tol`.
QuadratureRule compute_weights(const PointSet& ps, int s,
                               const ComputeWeightsOptions& opts = {});

QuadratureRule equal_weight_rule(const PointSet& ps, int degree_checked = 0);

// All weights positive and bounded by c_star / n.
bool is_dtype(const QuadratureRule& rule, double c_star = 5.0);

// Largest degree s' <= cap with design_discrepancy(w, s') <= tol.
int max_exact_degree(const QuadratureRule& rule, double tol = 1e-12, int cap = -1);

// Gauss-Legendre x equispaced-longitude product rule, exact on spherical
// polynomials of degree <= s.  Used as a dense reference for surface
// integrals; not part of the fitting pipeline.
QuadratureRule product_rule(int s);

// CSV x,y,z,w plus a JSON sidecar carrying degree / residual / D-type check.
void save_rule(const QuadratureRule& rule, const std::string& csv_path,
               const std::string& json_path, double c_star = 5.0);
QuadratureRule load_rule(const std::string& csv_path, const std::string& json_path);

} // namespace sphfit
