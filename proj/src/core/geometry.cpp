#include "core/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"
#include "core/harmonics.hpp"
#include "core/rng.hpp"

namespace sphfit {

namespace {

// Measured covering constant of the spherical Fibonacci grid: the covering
// radius of an n-point grid is below this over sqrt(n) for n >= 1000.
constexpr double kFibonacciCoverConstant = 3.4;

std::string format_row(const double* vals, int count) {
  char buf[128];
  std::string out;
  for (int i = 0; i < count; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", vals[i]);
    if (i) out += ',';
    out += buf;
  }
  out += '\n';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r' && ch != '\n') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw IoError("malformed numeric field '" + s + "' in " + path);
  return v;
}

Eigen::RowVector3d normalize_row(const Eigen::RowVector3d& x, const std::string& path) {
  const double nrm = x.norm();
  if (std::abs(nrm - 1.0) > 1e-6)
    throw NumericalError("point norm " + std::to_string(nrm) + " too far from 1 in " + path);
  return x / nrm;
}

} // namespace

double geodesic_distance(const Eigen::RowVector3d& a, const Eigen::RowVector3d& b) {
  return std::acos(harmonics::clamp_cosine(a.dot(b)));
}

PointSet fibonacci_points(int n) {
  if (n < 1) throw InvalidArgument("fibonacci_points: n must be positive");
  PointSet ps;
  ps.X.resize(n, 3);
  const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    ps.X(i, 0) = r * std::cos(phi);
    ps.X(i, 1) = r * std::sin(phi);
    ps.X(i, 2) = z;
  }
  return ps;
}

PointSet random_uniform_points(int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("random_uniform_points: n must be positive");
  Rng rng(derive_seed(seed, 0x706f696e7473ull));
  PointSet ps;
  ps.X.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    double nrm = 0.0;
    Eigen::RowVector3d g;
    do {
      g << rng.normal(), rng.normal(), rng.normal();
      nrm = g.norm();
    } while (nrm < 1e-12);
    ps.X.row(i) = g / nrm;
  }
  return ps;
}

GeometryStats geometry_stats(const PointSet& ps, int grid_size) {
  const Eigen::Index n = ps.size();
  if (n < 1) throw InvalidArgument("geometry_stats: empty point set");
  GeometryStats st;

  double min_pair = M_PI;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      min_pair = std::min(min_pair, geodesic_distance(ps.X.row(i), ps.X.row(j)));
  st.separation_radius = (n >= 2) ? 0.5 * min_pair : M_PI;

  const int G = std::max(grid_size, 10000);
  const PointSet grid = fibonacci_points(G);
  double mesh = 0.0;
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    // min over data points of the geodesic distance == max over cosines
    double best_cos = -1.0;
    for (Eigen::Index i = 0; i < n; ++i)
      best_cos = std::max(best_cos, grid.X.row(g).dot(ps.X.row(i)));
    mesh = std::max(mesh, std::acos(harmonics::clamp_cosine(best_cos)));
  }
  st.mesh_norm = mesh;
  st.mesh_grid_error = kFibonacciCoverConstant / std::sqrt(static_cast<double>(G));
  st.mesh_ratio = st.mesh_norm / st.separation_radius;
  return st;
}

namespace {

// Equal-area zonal decomposition of the sphere into C cells: two polar caps
// plus collars split into equal longitude sectors.
struct ZonalCells {
  // Collar boundaries in colatitude, ascending, including both cap angles.
  std::vector<double> theta_edges;
  std::vector<int> sectors_per_collar; // empty for the caps
  int total = 0;

  // Cells are numbered north cap, collar cells (west to east), ..., south cap.
  int locate(double theta, double phi) const {
    if (total == 1) return 0;
    if (theta <= theta_edges.front()) return 0;
    if (theta >= theta_edges.back()) return total - 1;
    int cell = 1;
    for (std::size_t c = 0; c + 1 < theta_edges.size(); ++c) {
      if (theta < theta_edges[c + 1] || c + 2 == theta_edges.size()) {
        const int m = sectors_per_collar[c];
        int sec = static_cast<int>(std::floor(phi / (2.0 * M_PI) * m));
        sec = std::clamp(sec, 0, m - 1);
        return cell + sec;
      }
      cell += sectors_per_collar[c];
    }
    return total - 1;
  }
};

ZonalCells make_cells(int C) {
  ZonalCells cells;
  cells.total = C;
  if (C == 1) return cells;
  if (C == 2) {
    cells.theta_edges = {0.5 * M_PI, 0.5 * M_PI};
    cells.sectors_per_collar = {};
    return cells;
  }
  const double theta_cap = std::acos(1.0 - 2.0 / C);
  const double ideal = std::sqrt(4.0 * M_PI / C);
  const int n_collars = std::max(1, static_cast<int>(std::llround((M_PI - 2.0 * theta_cap) / ideal)));
  cells.theta_edges.resize(static_cast<std::size_t>(n_collars) + 1);
  for (int j = 0; j <= n_collars; ++j)
    cells.theta_edges[static_cast<std::size_t>(j)] =
        theta_cap + (M_PI - 2.0 * theta_cap) * j / n_collars;
  cells.sectors_per_collar.resize(static_cast<std::size_t>(n_collars));
  // Distribute the C - 2 collar cells proportionally to collar area,
  // carrying the rounding remainder so the counts sum exactly.
  const int inner = C - 2;
  double carry = 0.0;
  int assigned = 0;
  for (int j = 0; j < n_collars; ++j) {
    const double a0 = std::cos(cells.theta_edges[static_cast<std::size_t>(j)]);
    const double a1 = std::cos(cells.theta_edges[static_cast<std::size_t>(j) + 1]);
    const double frac = (a0 - a1) / (std::cos(theta_cap) - std::cos(M_PI - theta_cap));
    double want = frac * inner + carry;
    int m = std::max(1, static_cast<int>(std::llround(want)));
    if (j + 1 == n_collars) m = inner - assigned;
    m = std::max(1, m);
    carry = want - m;
    assigned += m;
    cells.sectors_per_collar[static_cast<std::size_t>(j)] = m;
  }
  return cells;
}

} // namespace

std::vector<std::vector<Eigen::Index>> partition_equal_area_indices(const PointSet& ps, int J) {
  const Eigen::Index n = ps.size();
  if (J < 1) throw InvalidArgument("partition_equal_area: J must be positive");
  if (J > 1 && static_cast<Eigen::Index>(J) * 4 > n)
    throw InvalidArgument("partition_equal_area: J may not exceed |ps|/4");
  if (J == 1) {
    std::vector<std::vector<Eigen::Index>> all(1);
    all[0].resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) all[0][static_cast<std::size_t>(i)] = i;
    return all;
  }

  const int C = std::max(1, static_cast<int>(std::llround(static_cast<double>(n) / J)));
  const ZonalCells cells = make_cells(C);

  // Sweep the points cell by cell (west to east inside each collar) so the
  // assignment below sees them in a spatially coherent order.
  struct Member {
    double phi;
    Eigen::Index idx;
  };
  std::vector<std::vector<Member>> members(static_cast<std::size_t>(cells.total));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = std::clamp(ps.X(i, 2), -1.0, 1.0);
    const double theta = std::acos(z);
    double phi = std::atan2(ps.X(i, 1), ps.X(i, 0));
    if (phi < 0.0) phi += 2.0 * M_PI;
    members[static_cast<std::size_t>(cells.locate(theta, phi))].push_back({phi, i});
  }
  std::vector<Eigen::Index> order;
  order.reserve(static_cast<std::size_t>(n));
  for (auto& mem : members) {
    std::sort(mem.begin(), mem.end(), [](const Member& a, const Member& b) {
      return a.phi != b.phi ? a.phi < b.phi : a.idx < b.idx;
    });
    for (const Member& m : mem) order.push_back(m.idx);
  }

  // Assign each point to the subset it is farthest from (ties to the lowest
  // index), capped near n/J for balance.  Of the at most J - 1 other points
  // inside any cap of the target spacing, each can block only one subset, so
  // the chosen subset keeps a separation at the sqrt(J)-cell scale; balanced
  // local assignment keeps every subset's covering at that same scale.
  const std::size_t cap = static_cast<std::size_t>((n + J - 1) / J) + 2;
  std::vector<std::vector<Eigen::Index>> subsets(static_cast<std::size_t>(J));
  for (Eigen::Index i : order) {
    const Eigen::RowVector3d p = ps.X.row(i);
    int best = -1;
    double best_d = -1.0;
    for (int j = 0; j < J; ++j) {
      const auto& s = subsets[static_cast<std::size_t>(j)];
      if (s.size() >= cap) continue;
      double d = 5.0; // above any squared chord
      for (Eigen::Index m : s) d = std::min(d, (p - ps.X.row(m)).squaredNorm());
      if (d > best_d) {
        best_d = d;
        best = j;
      }
    }
    subsets[static_cast<std::size_t>(best)].push_back(i);
  }
  return subsets;
}

std::vector<PointSet> partition_equal_area(const PointSet& ps, int J) {
  const auto subsets = partition_equal_area_indices(ps, J);
  std::vector<PointSet> out(subsets.size());
  for (std::size_t j = 0; j < subsets.size(); ++j) {
    const auto& idx = subsets[j];
    out[j].X.resize(static_cast<Eigen::Index>(idx.size()), 3);
    for (std::size_t r2 = 0; r2 < idx.size(); ++r2)
      out[j].X.row(static_cast<Eigen::Index>(r2)) = ps.X.row(idx[r2]);
  }
  return out;
}

void save_points_csv(const PointSet& ps, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "x,y,z\n";
  for (Eigen::Index i = 0; i < ps.size(); ++i) {
    const double row[3] = {ps.X(i, 0), ps.X(i, 1), ps.X(i, 2)};
    f << format_row(row, 3);
  }
  if (!f) throw IoError("write failure on " + path);
}

PointSet load_points_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty file " + path);
  auto hdr = split_csv_line(line);
  if (hdr != std::vector<std::string>{"x", "y", "z"})
    throw IoError("expected header x,y,z in " + path);
  std::vector<Eigen::RowVector3d> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 3) throw IoError("expected 3 fields per row in " + path);
    Eigen::RowVector3d x(parse_double(fields[0], path), parse_double(fields[1], path),
                         parse_double(fields[2], path));
    rows.push_back(normalize_row(x, path));
  }
  PointSet ps;
  ps.X.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i)
    ps.X.row(static_cast<Eigen::Index>(i)) = rows[i];
  return ps;
}

void save_data_csv(const DataSet& ds, const std::string& path) {
  if (ds.y.size() != ds.pts.size()) throw InvalidArgument("save_data_csv: length mismatch");
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "x,y,z,value\n";
  for (Eigen::Index i = 0; i < ds.pts.size(); ++i) {
    const double row[4] = {ds.pts.X(i, 0), ds.pts.X(i, 1), ds.pts.X(i, 2), ds.y[i]};
    f << format_row(row, 4);
  }
  if (!f) throw IoError("write failure on " + path);
}

DataSet load_data_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty file " + path);
  auto hdr = split_csv_line(line);
  if (hdr != std::vector<std::string>{"x", "y", "z", "value"})
    throw IoError("expected header x,y,z,value in " + path);
  std::vector<Eigen::RowVector3d> rows;
  std::vector<double> vals;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 4) throw IoError("expected 4 fields per row in " + path);
    Eigen::RowVector3d x(parse_double(fields[0], path), parse_double(fields[1], path),
                         parse_double(fields[2], path));
    rows.push_back(normalize_row(x, path));
    vals.push_back(parse_double(fields[3], path));
  }
  DataSet ds;
  ds.pts.X.resize(static_cast<Eigen::Index>(rows.size()), 3);
  ds.y.resize(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.pts.X.row(static_cast<Eigen::Index>(i)) = rows[i];
    ds.y[static_cast<Eigen::Index>(i)] = vals[i];
  }
  return ds;
}

} // namespace sphfit
