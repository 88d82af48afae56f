#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace sphfit {

using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct PointSet {
  Points3 X;

  Eigen::Index size() const { return X.rows(); }
};

struct GeometryStats {
  double separation_radius = 0.0; // half the minimal pairwise geodesic distance
  double mesh_norm = 0.0;         // covering estimate from a dense candidate grid
  double mesh_grid_error = 0.0;   // covering radius of the candidate grid itself
  double mesh_ratio = 0.0;        // mesh_norm / separation_radius
};

// Spherical Fibonacci lattice with n points (deterministic).
PointSet fibonacci_points(int n);

// n i.i.d. uniform points from normalized 3-D Gaussian draws.
PointSet random_uniform_points(int n, std::uint64_t seed);

// Exact separation radius plus a grid-based mesh-norm estimate using a
// Fibonacci candidate grid of at least `grid_size` points.
GeometryStats geometry_stats(const PointSet& ps, int grid_size = 10000);

// Splits `ps` into J subsets.  The sphere is cut into roughly |ps|/J
// equal-area zonal cells (latitude collars divided into equal longitude
// sectors); sweeping the cells in zonal order, each point joins the subset
// farthest from it among those still below the balance cap.  Every subset
// then covers the whole sphere, and keeps its members separated, at a
// spacing near sqrt(J) times the full set's.
std::vector<PointSet> partition_equal_area(const PointSet& ps, int J);

// Same split, but returns the original row indices of each subset.
std::vector<std::vector<Eigen::Index>> partition_equal_area_indices(const PointSet& ps, int J);

// CSV persistence: header "x,y,z", one row per point, >= 15 significant
// digits.  On load, rows whose norm deviates from 1 by at most 1e-6 are
// normalized; worse rows are rejected.
void save_points_csv(const PointSet& ps, const std::string& path);
PointSet load_points_csv(const std::string& path);

// Data files carry a fourth column "value".
struct DataSet {
  PointSet pts;
  Eigen::VectorXd y;
};
void save_data_csv(const DataSet& ds, const std::string& path);
DataSet load_data_csv(const std::string& path);

double geodesic_distance(const Eigen::RowVector3d& a, const Eigen::RowVector3d& b);

} // namespace sphfit
