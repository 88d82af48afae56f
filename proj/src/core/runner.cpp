#include "core/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/analysis.hpp"
#include "core/distributed.hpp"
#include "core/errors.hpp"
#include "core/estimator.hpp"
#include "core/geometry.hpp"
#include "core/kernel.hpp"
#include "core/quadrature.hpp"
#include "core/rng.hpp"
#include "core/selection.hpp"

namespace sphfit::run {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmtg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// --- config plumbing -------------------------------------------------------

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

const json& need_object(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  return j;
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) bad(where, "unknown key '" + it.key() + "'");
  }
}

bool has(const json& j, const char* key) { return j.contains(key); }

double get_num(const json& j, const std::string& where, const char* key, double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number()) bad(where, std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

double need_num(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) bad(where, std::string("missing key '") + key + "'");
  if (!j[key].is_number()) bad(where, std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

long get_int(const json& j, const std::string& where, const char* key, long dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number_integer()) bad(where, std::string("'") + key + "' must be an integer");
  return j[key].get<long>();
}

long need_int(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) bad(where, std::string("missing key '") + key + "'");
  if (!j[key].is_number_integer()) bad(where, std::string("'") + key + "' must be an integer");
  return j[key].get<long>();
}

std::uint64_t get_seed(const json& j, const std::string& where, const char* key,
                       std::uint64_t dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number_integer()) bad(where, std::string("'") + key + "' must be an integer");
  if (j[key].is_number_unsigned()) return j[key].get<std::uint64_t>();
  const long long v = j[key].get<long long>();
  if (v < 0) bad(where, std::string("'") + key + "' must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

std::string get_str(const json& j, const std::string& where, const char* key,
                    const std::string& dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_string()) bad(where, std::string("'") + key + "' must be a string");
  return j[key].get<std::string>();
}

std::string need_str(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) bad(where, std::string("missing key '") + key + "'");
  if (!j[key].is_string()) bad(where, std::string("'") + key + "' must be a string");
  return j[key].get<std::string>();
}

// --- block parsers (each returns the resolved echo) ------------------------

KernelSpec parse_kernel(const json& j, json& echo) {
  need_object(j, "kernel");
  check_keys(j, "kernel", {"d", "gamma", "k_max"});
  KernelSpec spec;
  spec.d = static_cast<int>(get_int(j, "kernel", "d", 2));
  spec.gamma = get_num(j, "kernel", "gamma", 1.5);
  spec.kmax = static_cast<int>(get_int(j, "kernel", "k_max", 200));
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    bad("kernel", e.what());
  }
  echo = {{"d", spec.d}, {"gamma", spec.gamma}, {"k_max", spec.kmax}};
  return spec;
}

PointSet parse_points(const json& j, json& echo) {
  need_object(j, "points");
  if (has(j, "file")) {
    check_keys(j, "points", {"file"});
    const std::string file = need_str(j, "points", "file");
    echo = {{"file", file}};
    return load_points_csv(file);
  }
  check_keys(j, "points", {"kind", "n", "seed"});
  const std::string kind = get_str(j, "points", "kind", "fibonacci");
  const long n = need_int(j, "points", "n");
  const std::uint64_t seed = get_seed(j, "points", "seed", 1);
  if (n < 1) bad("points", "'n' must be positive");
  echo = {{"kind", kind}, {"n", n}, {"seed", seed}};
  if (kind == "fibonacci") return fibonacci_points(static_cast<int>(n));
  if (kind == "random") return random_uniform_points(static_cast<int>(n), seed);
  bad("points", "unknown kind '" + kind + "'");
}

TargetSpec parse_target(const json& j, json& echo) {
  need_object(j, "target");
  TargetSpec ts;
  const std::string kind = get_str(j, "target", "kind", "combo");
  if (kind == "combo") {
    check_keys(j, "target", {"kind", "alpha", "n_centers", "seed", "radius"});
    ts.kind = TargetSpec::Kind::KernelCombo;
    ts.alpha = get_num(j, "target", "alpha", 1.0);
    ts.n_centers = static_cast<int>(get_int(j, "target", "n_centers", 16));
    ts.seed = get_seed(j, "target", "seed", 7);
    ts.radius = get_num(j, "target", "radius", 1.0);
    echo = {{"kind", "combo"},
            {"alpha", ts.alpha},
            {"n_centers", ts.n_centers},
            {"seed", ts.seed},
            {"radius", ts.radius}};
  } else if (kind == "poly") {
    check_keys(j, "target", {"kind", "axis", "coeffs"});
    ts.kind = TargetSpec::Kind::HarmonicPoly;
    if (has(j, "axis")) {
      if (!j["axis"].is_array() || j["axis"].size() != 3)
        bad("target", "'axis' must be an array of three numbers");
      for (int i = 0; i < 3; ++i) {
        if (!j["axis"][i].is_number()) bad("target", "'axis' must be numeric");
        ts.axis[i] = j["axis"][i].get<double>();
      }
    }
    if (!has(j, "coeffs") || !j["coeffs"].is_array())
      bad("target", "'coeffs' must be an array");
    for (const auto& v : j["coeffs"]) {
      if (!v.is_number()) bad("target", "'coeffs' must be numeric");
      ts.poly_coeffs.push_back(v.get<double>());
    }
    echo = {{"kind", "poly"},
            {"axis", {ts.axis[0], ts.axis[1], ts.axis[2]}},
            {"coeffs", ts.poly_coeffs}};
  } else {
    bad("target", "unknown kind '" + kind + "'");
  }
  return ts;
}

NoiseSpec parse_noise(const json& j, json& echo) {
  need_object(j, "noise");
  check_keys(j, "noise", {"kind", "level", "seed"});
  NoiseSpec ns;
  const std::string kind = get_str(j, "noise", "kind", "gaussian");
  const double level = get_num(j, "noise", "level", 0.1);
  ns.seed = get_seed(j, "noise", "seed", 0);
  if (level < 0.0) bad("noise", "'level' must be nonnegative");
  if (kind == "gaussian") {
    ns.kind = NoiseSpec::Kind::Gaussian;
    ns.sigma = level;
    echo = {{"kind", kind}, {"level", level}, {"seed", ns.seed}};
  } else if (kind == "uniform") {
    ns.kind = NoiseSpec::Kind::UniformBounded;
    ns.bound = level;
    echo = {{"kind", kind}, {"level", level}, {"seed", ns.seed}};
  } else if (kind == "bernoulli") {
    ns.kind = NoiseSpec::Kind::SymmetricBernoulli;
    echo = {{"kind", kind}, {"seed", ns.seed}};
  } else {
    bad("noise", "unknown kind '" + kind + "'");
  }
  return ns;
}

FilterSpec parse_filter(const json& parent, const std::string& where) {
  const std::string s = need_str(parent, where, "filter");
  try {
    return FilterSpec::parse(s);
  } catch (const InvalidArgument& e) {
    bad(where, e.what());
  }
}

struct QuadBlock {
  int degree = 0;
  ComputeWeightsOptions opts;
};

QuadBlock parse_quadrature(const json& j, json& echo) {
  need_object(j, "quadrature");
  check_keys(j, "quadrature", {"degree", "tol"});
  QuadBlock q;
  q.degree = static_cast<int>(need_int(j, "quadrature", "degree"));
  q.opts.tol = get_num(j, "quadrature", "tol", 1e-20);
  if (q.degree < 0) bad("quadrature", "'degree' must be nonnegative");
  if (!(q.opts.tol > 0.0)) bad("quadrature", "'tol' must be positive");
  echo = {{"degree", q.degree}, {"tol", q.opts.tol}};
  return q;
}

LepskiiConfig parse_lepskii(const json& j, json& echo) {
  need_object(j, "lepskii");
  check_keys(j, "lepskii", {"q0", "q", "lambda_floor", "kappa_lp", "delta"});
  LepskiiConfig cfg;
  cfg.q0 = get_num(j, "lepskii", "q0", 1.0);
  cfg.q = get_num(j, "lepskii", "q", 0.5);
  cfg.lambda_floor = get_num(j, "lepskii", "lambda_floor", -1.0);
  cfg.kappa_lp = get_num(j, "lepskii", "kappa_lp", 1.0);
  cfg.delta = get_num(j, "lepskii", "delta", 0.05);
  if (!(cfg.q0 > 0.0)) bad("lepskii", "'q0' must be positive");
  if (!(cfg.q > 0.0 && cfg.q < 1.0)) bad("lepskii", "'q' must lie in (0, 1)");
  if (!(cfg.kappa_lp > 0.0)) bad("lepskii", "'kappa_lp' must be positive");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) bad("lepskii", "'delta' must lie in (0, 1)");
  echo = {{"q0", cfg.q0},
          {"q", cfg.q},
          {"lambda_floor", cfg.lambda_floor},
          {"kappa_lp", cfg.kappa_lp},
          {"delta", cfg.delta}};
  return cfg;
}

DcConfig parse_dc(const json& j, json& echo) {
  need_object(j, "dc");
  check_keys(j, "dc", {"c_dia", "tol", "c_star", "stats_grid"});
  DcConfig cfg;
  cfg.c_dia = get_num(j, "dc", "c_dia", 0.5);
  cfg.tol = get_num(j, "dc", "tol", 1e-20);
  cfg.c_star = get_num(j, "dc", "c_star", 5.0);
  cfg.stats_grid = static_cast<int>(get_int(j, "dc", "stats_grid", 10000));
  if (!(cfg.c_dia > 0.0)) bad("dc", "'c_dia' must be positive");
  echo = {{"c_dia", cfg.c_dia},
          {"tol", cfg.tol},
          {"c_star", cfg.c_star},
          {"stats_grid", cfg.stats_grid}};
  return cfg;
}

PowerRule parse_power_rule(const json& j, const std::string& where, json& echo) {
  need_object(j, where);
  check_keys(j, where, {"c", "exponent"});
  PowerRule rule;
  rule.c = need_num(j, where, "c");
  rule.exponent = need_num(j, where, "exponent");
  echo = {{"c", rule.c}, {"exponent", rule.exponent}};
  return rule;
}

// Observations: either a CSV file or a synthetic draw target(points) + noise.
DataSet parse_data(const json& j, const KernelSpec& spec, json& echo) {
  need_object(j, "data");
  if (has(j, "file")) {
    check_keys(j, "data", {"file"});
    const std::string file = need_str(j, "data", "file");
    echo = {{"file", file}};
    return load_data_csv(file);
  }
  check_keys(j, "data", {"points", "target", "noise"});
  if (!has(j, "points") || !has(j, "target"))
    bad("data", "need either 'file' or 'points' + 'target'");
  json pecho, techo;
  DataSet ds;
  ds.pts = parse_points(j["points"], pecho);
  const TargetSpec ts = parse_target(j["target"], techo);
  Target target = make_target(ts, spec);
  ds.y = target.evaluate(ds.pts);
  echo = {{"points", pecho}, {"target", techo}};
  if (has(j, "noise")) {
    json necho;
    const NoiseSpec ns = parse_noise(j["noise"], necho);
    ds.y += sample_noise(ns, ds.pts.size());
    echo["noise"] = necho;
  }
  return ds;
}

// --- output helpers ---------------------------------------------------------

fs::path prepare_out_dir(const std::string& out_dir) {
  fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("write failure on " + path.string());
}

void write_json_file(const fs::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_study_rows(const fs::path& path, const std::vector<StudyRow>& rows) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << "size,trial,metric,value\n";
  for (const auto& r : rows)
    f << r.size << "," << r.trial << "," << r.metric << "," << fmt17(r.value) << "\n";
  if (!f) throw IoError("write failure on " + path.string());
}

void write_study_summary(const fs::path& path, const std::vector<StudySummaryRow>& rows) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << "size,metric,mean,stderr\n";
  for (const auto& r : rows)
    f << r.size << "," << r.metric << "," << fmt17(r.mean) << "," << fmt17(r.stderr_) << "\n";
  if (!f) throw IoError("write failure on " + path.string());
}

void write_lepskii_trace(const fs::path& path, const std::vector<LepskiiTraceRow>& trace) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << "k,lambda,statistic,threshold,accepted\n";
  for (const auto& r : trace)
    f << r.k << "," << fmt17(r.lambda) << "," << fmt17(r.statistic) << ","
      << fmt17(r.threshold) << "," << (r.accepted ? 1 : 0) << "\n";
  if (!f) throw IoError("write failure on " + path.string());
}

void write_dc_subsets(const fs::path& path, const std::vector<DcSubsetInfo>& subsets) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << "subset,size,degree,residual,equal_weight_fallback,separation,mesh_norm,mesh_ratio\n";
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    const auto& s = subsets[i];
    f << i << "," << s.size << "," << s.degree << "," << fmt17(s.residual) << ","
      << (s.equal_weight_fallback ? 1 : 0) << "," << fmt17(s.stats.separation_radius) << ","
      << fmt17(s.stats.mesh_norm) << "," << fmt17(s.stats.mesh_ratio) << "\n";
  }
  if (!f) throw IoError("write failure on " + path.string());
}

// --- commands ---------------------------------------------------------------

Outcome cmd_gen_points(const json& cfg, const fs::path& dir, json& echo) {
  check_keys(cfg, "gen-points", {"command", "kind", "n", "seed", "output"});
  const std::string kind = get_str(cfg, "gen-points", "kind", "fibonacci");
  const long n = need_int(cfg, "gen-points", "n");
  const std::uint64_t seed = get_seed(cfg, "gen-points", "seed", 1);
  const std::string output = get_str(cfg, "gen-points", "output", "points.csv");
  if (n < 1) bad("gen-points", "'n' must be positive");
  PointSet pts;
  if (kind == "fibonacci")
    pts = fibonacci_points(static_cast<int>(n));
  else if (kind == "random")
    pts = random_uniform_points(static_cast<int>(n), seed);
  else
    bad("gen-points", "unknown kind '" + kind + "'");
  save_points_csv(pts, (dir / output).string());
  echo = {{"command", "gen-points"}, {"kind", kind}, {"n", n}, {"seed", seed}, {"output", output}};
  Outcome out;
  out.files = {output};
  out.message = "wrote " + std::to_string(n) + " " + kind + " points to " + output;
  return out;
}

Outcome cmd_quadrature(const json& cfg, const fs::path& dir, json& echo) {
  check_keys(cfg, "quadrature", {"command", "points", "degree", "tol", "c_star", "output"});
  json pecho;
  if (!has(cfg, "points")) bad("quadrature", "missing key 'points'");
  const PointSet pts = parse_points(cfg["points"], pecho);
  const int degree = static_cast<int>(need_int(cfg, "quadrature", "degree"));
  ComputeWeightsOptions opts;
  opts.tol = get_num(cfg, "quadrature", "tol", 1e-20);
  const double c_star = get_num(cfg, "quadrature", "c_star", 5.0);
  const std::string output = get_str(cfg, "quadrature", "output", "rule");
  if (degree < 0) bad("quadrature", "'degree' must be nonnegative");
  if (!(opts.tol > 0.0)) bad("quadrature", "'tol' must be positive");

  const QuadratureRule rule = compute_weights(pts, degree, opts);
  save_rule(rule, (dir / (output + ".csv")).string(), (dir / (output + ".json")).string(),
            c_star);
  echo = {{"command", "quadrature"}, {"points", pecho},    {"degree", degree},
          {"tol", opts.tol},         {"c_star", c_star},   {"output", output}};
  Outcome out;
  out.files = {output + ".csv", output + ".json"};
  out.message = "degree " + std::to_string(degree) + " rule on " + std::to_string(pts.size()) +
                " points, residual " + fmt17(rule.residual) +
                (is_dtype(rule, c_star) ? ", D-type" : ", not D-type");
  return out;
}

Outcome cmd_fit(const json& cfg, const fs::path& dir, json& echo) {
  check_keys(cfg, "fit", {"command", "kernel", "data", "quadrature", "filter", "lambda", "output"});
  json kecho, decho, qecho;
  const KernelSpec spec = parse_kernel(cfg.value("kernel", json::object()), kecho);
  if (!has(cfg, "data")) bad("fit", "missing key 'data'");
  const DataSet data = parse_data(cfg["data"], spec, decho);
  if (!has(cfg, "quadrature")) bad("fit", "missing key 'quadrature'");
  const QuadBlock q = parse_quadrature(cfg["quadrature"], qecho);
  const FilterSpec filter = parse_filter(cfg, "fit");
  double lambda = get_num(cfg, "fit", "lambda", -1.0);
  if (lambda <= 0.0) {
    if (filter.has_intrinsic_lambda() && filter.t > 0)
      lambda = filter.intrinsic_lambda();
    else
      bad("fit", "'lambda' must be positive");
  }
  const std::string output = get_str(cfg, "fit", "output", "fitted");

  const QuadratureRule rule = compute_weights(data.pts, q.degree, q.opts);
  const Fitted fitted = fit_wsfa(data, rule, spec, filter, lambda);
  save_fitted(fitted, (dir / (output + ".csv")).string(), (dir / (output + ".json")).string());
  echo = {{"command", "fit"},       {"kernel", kecho}, {"data", decho},
          {"quadrature", qecho},    {"filter", filter.str()}, {"lambda", lambda},
          {"output", output}};
  Outcome out;
  out.files = {output + ".csv", output + ".json"};
  out.message = "fit: n=" + std::to_string(data.pts.size()) + " filter=" + fitted.filter +
                " lambda=" + fmtg(fitted.lambda);
  return out;
}

Outcome cmd_lepskii(const json& cfg, const fs::path& dir, json& echo) {
  check_keys(cfg, "lepskii",
             {"command", "kernel", "data", "quadrature", "filter", "lepskii", "output"});
  json kecho, decho, qecho, lecho;
  const KernelSpec spec = parse_kernel(cfg.value("kernel", json::object()), kecho);
  if (!has(cfg, "data")) bad("lepskii", "missing key 'data'");
  const DataSet data = parse_data(cfg["data"], spec, decho);
  if (!has(cfg, "quadrature")) bad("lepskii", "missing key 'quadrature'");
  const QuadBlock q = parse_quadrature(cfg["quadrature"], qecho);
  const FilterSpec filter = parse_filter(cfg, "lepskii");
  const LepskiiConfig lcfg = parse_lepskii(cfg.value("lepskii", json::object()), lecho);
  const std::string output = get_str(cfg, "lepskii", "output", "lepskii");

  const QuadratureRule rule = compute_weights(data.pts, q.degree, q.opts);
  const WsfaSolver solver(spec, rule);
  const LepskiiResult res = lepskii_select(solver, data.y, filter, lcfg);

  write_lepskii_trace((dir / (output + "_trace.csv")), res.trace);
  json sel = {{"lambda_hat", res.lambda_hat},
              {"k_hat", res.k_hat},
              {"fallback", res.fallback},
              {"grid", res.grid},
              {"kappa_lp", lcfg.kappa_lp},
              {"delta", lcfg.delta}};
  write_json_file(dir / (output + "_selection.json"), sel);
  const Fitted& chosen = res.fits[static_cast<std::size_t>(res.k_hat - 1)];
  save_fitted(chosen, (dir / (output + "_fitted.csv")).string(),
              (dir / (output + "_fitted.json")).string());

  echo = {{"command", "lepskii"},  {"kernel", kecho},        {"data", decho},
          {"quadrature", qecho},   {"filter", filter.str()}, {"lepskii", lecho},
          {"output", output}};
  Outcome out;
  out.files = {output + "_trace.csv", output + "_selection.json", output + "_fitted.csv",
               output + "_fitted.json"};
  out.message = "lepskii: K=" + std::to_string(res.grid.size()) +
                " k_hat=" + std::to_string(res.k_hat) + " lambda_hat=" + fmtg(res.lambda_hat) +
                (res.fallback ? " (fallback)" : "");
  return out;
}

Outcome cmd_dcfit(const json& cfg, const fs::path& dir, json& echo) {
  check_keys(cfg, "dcfit",
             {"command", "kernel", "data", "partitions", "filter", "lambda", "dc", "output"});
  json kecho, decho, dcecho = {{"c_dia", 0.5}, {"tol", 1e-20}, {"c_star", 5.0}, {"stats_grid", 10000}};
  const KernelSpec spec = parse_kernel(cfg.value("kernel", json::object()), kecho);
  if (!has(cfg, "data")) bad("dcfit", "missing key 'data'");
  const DataSet data = parse_data(cfg["data"], spec, decho);
  const int J = static_cast<int>(need_int(cfg, "dcfit", "partitions"));
  const FilterSpec filter = parse_filter(cfg, "dcfit");
  const double lambda = need_num(cfg, "dcfit", "lambda");
  DcConfig dcfg;
  if (has(cfg, "dc")) dcfg = parse_dc(cfg["dc"], dcecho);
  const std::string output = get_str(cfg, "dcfit", "output", "dc");
  if (J < 1) bad("dcfit", "'partitions' must be positive");
  if (!(lambda > 0.0)) bad("dcfit", "'lambda' must be positive");

  const DcResult res = dc_fit(data, J, spec, filter, lambda, dcfg);
  save_fitted(res.fitted, (dir / (output + "_fitted.csv")).string(),
              (dir / (output + "_fitted.json")).string());
  write_dc_subsets(dir / (output + "_subsets.csv"), res.subsets);

  echo = {{"command", "dcfit"},    {"kernel", kecho},        {"data", decho},
          {"partitions", J},       {"filter", filter.str()}, {"lambda", lambda},
          {"dc", dcecho},          {"output", output}};
  Outcome out;
  out.files = {output + "_fitted.csv", output + "_fitted.json", output + "_subsets.csv"};
  int fallbacks = 0;
  for (const auto& s : res.subsets) fallbacks += s.equal_weight_fallback ? 1 : 0;
  out.message = "dcfit: J=" + std::to_string(res.subsets.size()) + " lambda=" + fmtg(lambda) +
                " equal-weight fallbacks=" + std::to_string(fallbacks);
  return out;
}

Outcome cmd_study(const json& cfg, const fs::path& dir, json& echo) {
  check_keys(cfg, "study", {"command", "study", "output"});
  if (!has(cfg, "study")) bad("study", "missing key 'study'");
  const json& sj = need_object(cfg["study"], "study");
  check_keys(sj, "study",
             {"kernel", "sizes", "trials", "points_kind", "master_seed", "target", "noise",
              "filter", "lambda_rule", "degree_rule", "betas"});
  StudyConfig sc;
  json kecho, techo, necho, lrecho, drecho;
  sc.kernel = parse_kernel(sj.value("kernel", json::object()), kecho);
  if (!has(sj, "sizes") || !sj["sizes"].is_array() || sj["sizes"].empty())
    bad("study", "'sizes' must be a nonempty array of integers");
  for (const auto& v : sj["sizes"]) {
    if (!v.is_number_integer()) bad("study", "'sizes' must be integers");
    sc.sizes.push_back(v.get<int>());
  }
  sc.trials = static_cast<int>(get_int(sj, "study", "trials", 1));
  sc.points_kind = get_str(sj, "study", "points_kind", "fibonacci");
  sc.master_seed = get_seed(sj, "study", "master_seed", 1);
  if (!has(sj, "target")) bad("study", "missing key 'target'");
  sc.target = parse_target(sj["target"], techo);
  if (has(sj, "noise"))
    sc.noise = parse_noise(sj["noise"], necho);
  else {
    sc.noise = NoiseSpec{NoiseSpec::Kind::Gaussian, 0.0, 0.0, 0};
    necho = {{"kind", "gaussian"}, {"level", 0.0}, {"seed", 0}};
  }
  sc.filter = parse_filter(sj, "study");
  if (!has(sj, "lambda_rule")) bad("study", "missing key 'lambda_rule'");
  sc.lambda_rule = parse_power_rule(sj["lambda_rule"], "lambda_rule", lrecho);
  if (has(sj, "degree_rule"))
    sc.degree_rule = parse_power_rule(sj["degree_rule"], "degree_rule", drecho);
  else
    drecho = {{"c", sc.degree_rule.c}, {"exponent", sc.degree_rule.exponent}};
  if (has(sj, "betas")) {
    sc.betas.clear();
    if (!sj["betas"].is_array() || sj["betas"].empty())
      bad("study", "'betas' must be a nonempty array");
    for (const auto& v : sj["betas"]) {
      if (!v.is_number()) bad("study", "'betas' must be numeric");
      sc.betas.push_back(v.get<double>());
    }
  }
  const std::string output = get_str(cfg, "study", "output", "study");

  StudyResult res;
  try {
    res = convergence_study(sc);
  } catch (const InvalidArgument& e) {
    bad("study", e.what());
  }
  write_study_rows(dir / (output + "_rows.csv"), res.rows);
  write_study_summary(dir / (output + "_summary.csv"), res.summary);

  echo = {{"command", "study"},
          {"study",
           {{"kernel", kecho},
            {"sizes", sc.sizes},
            {"trials", sc.trials},
            {"points_kind", sc.points_kind},
            {"master_seed", sc.master_seed},
            {"target", techo},
            {"noise", necho},
            {"filter", sc.filter.str()},
            {"lambda_rule", lrecho},
            {"degree_rule", drecho},
            {"betas", sc.betas}}},
          {"output", output}};
  Outcome out;
  out.files = {output + "_rows.csv", output + "_summary.csv"};
  out.message = "study: " + std::to_string(sc.sizes.size()) + " sizes x " +
                std::to_string(sc.trials) + " trials";
  if (sc.sizes.size() >= 3) {
    for (double beta : sc.betas) {
      std::vector<double> xs, ys;
      summary_series(res, metric_name(beta), xs, ys);
      bool positive = true;
      for (double v : ys) positive = positive && v > 0.0;
      if (positive) out.message += ", slope(" + metric_name(beta) + ")=" + fmtg(rate_slope(xs, ys));
    }
  }
  return out;
}

Outcome cmd_diagnostics(const json& cfg, const fs::path& dir, json& echo) {
  const std::string mode = need_str(cfg, "diagnostics", "mode");
  json kecho;
  const KernelSpec spec = parse_kernel(cfg.value("kernel", json::object()), kecho);
  Outcome out;

  if (mode == "effective-dimension") {
    check_keys(cfg, "diagnostics",
               {"command", "mode", "kernel", "lambda_min", "lambda_max", "count", "output"});
    const double lmin = get_num(cfg, "diagnostics", "lambda_min", 1e-6);
    const double lmax = get_num(cfg, "diagnostics", "lambda_max", 1e-2);
    const long count = get_int(cfg, "diagnostics", "count", 13);
    const std::string output = get_str(cfg, "diagnostics", "output", "diag_effdim");
    if (!(lmin > 0.0 && lmax > lmin)) bad("diagnostics", "need 0 < lambda_min < lambda_max");
    if (count < 2) bad("diagnostics", "'count' must be at least 2");

    std::vector<double> lambdas(static_cast<std::size_t>(count)), values(lambdas.size());
    const double step = std::log(lmax / lmin) / static_cast<double>(count - 1);
    std::ofstream f(dir / (output + ".csv"));
    if (!f) throw IoError("cannot open diagnostics output for writing");
    f << "lambda,n_eff\n";
    for (long i = 0; i < count; ++i) {
      lambdas[static_cast<std::size_t>(i)] = lmin * std::exp(step * static_cast<double>(i));
      values[static_cast<std::size_t>(i)] =
          effective_dimension(spec, lambdas[static_cast<std::size_t>(i)]);
      f << fmt17(lambdas[static_cast<std::size_t>(i)]) << ","
        << fmt17(values[static_cast<std::size_t>(i)]) << "\n";
    }
    if (!f) throw IoError("write failure on diagnostics output");
    echo = {{"command", "diagnostics"}, {"mode", mode},   {"kernel", kecho},
            {"lambda_min", lmin},       {"lambda_max", lmax}, {"count", count},
            {"output", output}};
    out.files = {output + ".csv"};
    out.message = "effective dimension: slope " + fmtg(rate_slope(lambdas, values));
    return out;
  }

  if (mode == "stability") {
    check_keys(cfg, "diagnostics",
               {"command", "mode", "kernel", "points", "degree", "tol", "noise", "draws",
                "lambda_min", "lambda_max", "count", "master_seed", "output"});
    json pecho, necho;
    if (!has(cfg, "points")) bad("diagnostics", "missing key 'points'");
    const PointSet pts = parse_points(cfg["points"], pecho);
    const int degree = static_cast<int>(need_int(cfg, "diagnostics", "degree"));
    ComputeWeightsOptions opts;
    opts.tol = get_num(cfg, "diagnostics", "tol", 1e-20);
    NoiseSpec ns;
    if (has(cfg, "noise"))
      ns = parse_noise(cfg["noise"], necho);
    else
      necho = {{"kind", "gaussian"}, {"level", ns.sigma}, {"seed", ns.seed}};
    const long draws = get_int(cfg, "diagnostics", "draws", 200);
    const double lmin = get_num(cfg, "diagnostics", "lambda_min", 1e-4);
    const double lmax = get_num(cfg, "diagnostics", "lambda_max", 1e-2);
    const long count = get_int(cfg, "diagnostics", "count", 9);
    const std::uint64_t master = get_seed(cfg, "diagnostics", "master_seed", 1);
    const std::string output = get_str(cfg, "diagnostics", "output", "diag_stability");
    if (draws < 1) bad("diagnostics", "'draws' must be positive");
    if (!(lmin > 0.0 && lmax > lmin)) bad("diagnostics", "need 0 < lambda_min < lambda_max");
    if (count < 2) bad("diagnostics", "'count' must be at least 2");

    const QuadratureRule rule = compute_weights(pts, degree, opts);
    std::vector<Eigen::VectorXd> eps(static_cast<std::size_t>(draws));
    for (long t = 0; t < draws; ++t) {
      NoiseSpec draw = ns;
      draw.seed = derive_seed(master, static_cast<std::uint64_t>(t));
      eps[static_cast<std::size_t>(t)] = sample_noise(draw, pts.size());
    }
    const double step = std::log(lmax / lmin) / static_cast<double>(count - 1);
    std::ofstream rows(dir / (output + ".csv"));
    if (!rows) throw IoError("cannot open diagnostics output for writing");
    rows << "lambda,draw,value\n";
    std::vector<double> lambdas, p90;
    for (long i = 0; i < count; ++i) {
      const double lam = lmin * std::exp(step * static_cast<double>(i));
      const Eigen::MatrixXd gram = stability_gram(rule, spec, lam);
      std::vector<double> vals(static_cast<std::size_t>(draws));
      for (long t = 0; t < draws; ++t) {
        vals[static_cast<std::size_t>(t)] =
            stability_functional(rule, gram, eps[static_cast<std::size_t>(t)]);
        rows << fmt17(lam) << "," << t << "," << fmt17(vals[static_cast<std::size_t>(t)]) << "\n";
      }
      std::sort(vals.begin(), vals.end());
      const std::size_t idx = static_cast<std::size_t>(
          std::max<long>(0, static_cast<long>(std::ceil(0.9 * static_cast<double>(draws))) - 1));
      lambdas.push_back(lam);
      p90.push_back(vals[idx]);
    }
    if (!rows) throw IoError("write failure on diagnostics output");
    std::ofstream sf(dir / (output + "_p90.csv"));
    if (!sf) throw IoError("cannot open diagnostics summary for writing");
    sf << "lambda,p90\n";
    for (std::size_t i = 0; i < lambdas.size(); ++i)
      sf << fmt17(lambdas[i]) << "," << fmt17(p90[i]) << "\n";
    if (!sf) throw IoError("write failure on diagnostics summary");

    echo = {{"command", "diagnostics"},
            {"mode", mode},
            {"kernel", kecho},
            {"points", pecho},
            {"degree", degree},
            {"tol", opts.tol},
            {"noise", necho},
            {"draws", draws},
            {"lambda_min", lmin},
            {"lambda_max", lmax},
            {"count", count},
            {"master_seed", master},
            {"output", output}};
    out.files = {output + ".csv", output + "_p90.csv"};
    out.message = "stability functional: p90 slope " + fmtg(rate_slope(lambdas, p90));
    return out;
  }

  if (mode == "discrepancy") {
    check_keys(cfg, "diagnostics",
               {"command", "mode", "kernel", "points", "degree", "tol", "lambda", "u", "alpha",
                "trials", "seed", "n_centers", "output"});
    json pecho;
    if (!has(cfg, "points")) bad("diagnostics", "missing key 'points'");
    const PointSet pts = parse_points(cfg["points"], pecho);
    const int degree = static_cast<int>(need_int(cfg, "diagnostics", "degree"));
    ComputeWeightsOptions opts;
    opts.tol = get_num(cfg, "diagnostics", "tol", 1e-20);
    const double lambda = need_num(cfg, "diagnostics", "lambda");
    const double u = get_num(cfg, "diagnostics", "u", 0.5);
    const double alpha = get_num(cfg, "diagnostics", "alpha", 1.0);
    const long trials = get_int(cfg, "diagnostics", "trials", 50);
    const std::uint64_t seed = get_seed(cfg, "diagnostics", "seed", 1);
    const long n_centers = get_int(cfg, "diagnostics", "n_centers", 16);
    const std::string output = get_str(cfg, "diagnostics", "output", "diag_discrepancy");

    const QuadratureRule rule = compute_weights(pts, degree, opts);
    double probe = 0.0;
    try {
      probe = discrepancy_probe(rule, spec, lambda, u, alpha, static_cast<int>(trials), seed,
                                static_cast<int>(n_centers));
    } catch (const InvalidArgument& e) {
      bad("diagnostics", e.what());
    }
    json jres = {{"probe", probe}, {"lambda", lambda}, {"u", u},
                 {"alpha", alpha}, {"trials", trials}, {"degree", degree}};
    write_json_file(dir / (output + ".json"), jres);
    echo = {{"command", "diagnostics"},
            {"mode", mode},
            {"kernel", kecho},
            {"points", pecho},
            {"degree", degree},
            {"tol", opts.tol},
            {"lambda", lambda},
            {"u", u},
            {"alpha", alpha},
            {"trials", trials},
            {"seed", seed},
            {"n_centers", n_centers},
            {"output", output}};
    out.files = {output + ".json"};
    out.message = "discrepancy probe: " + fmt17(probe);
    return out;
  }

  bad("diagnostics", "unknown mode '" + mode + "'");
}

Outcome cmd_calibrate(const json& cfg, const fs::path& dir, json& echo) {
  check_keys(cfg, "calibrate",
             {"command", "kernel", "points", "quadrature", "target", "noise", "filter", "lepskii",
              "beta", "trials", "candidates", "master_seed", "output"});
  json kecho, pecho, qecho, techo, necho, lecho;
  const KernelSpec spec = parse_kernel(cfg.value("kernel", json::object()), kecho);
  if (!has(cfg, "points")) bad("calibrate", "missing key 'points'");
  const PointSet pts = parse_points(cfg["points"], pecho);
  if (!has(cfg, "quadrature")) bad("calibrate", "missing key 'quadrature'");
  const QuadBlock q = parse_quadrature(cfg["quadrature"], qecho);
  if (!has(cfg, "target")) bad("calibrate", "missing key 'target'");
  const TargetSpec ts = parse_target(cfg["target"], techo);
  if (!has(cfg, "noise")) bad("calibrate", "missing key 'noise'");
  const NoiseSpec base_noise = parse_noise(cfg["noise"], necho);
  const FilterSpec filter = parse_filter(cfg, "calibrate");
  LepskiiConfig lcfg = parse_lepskii(cfg.value("lepskii", json::object()), lecho);
  const double beta = get_num(cfg, "calibrate", "beta", 0.0);
  const long trials = get_int(cfg, "calibrate", "trials", 20);
  const std::uint64_t master = get_seed(cfg, "calibrate", "master_seed", 1);
  const std::string output = get_str(cfg, "calibrate", "output", "calibration");
  std::vector<double> candidates;
  if (has(cfg, "candidates")) {
    if (!cfg["candidates"].is_array() || cfg["candidates"].empty())
      bad("calibrate", "'candidates' must be a nonempty array");
    for (const auto& v : cfg["candidates"]) {
      if (!v.is_number() || !(v.get<double>() > 0.0))
        bad("calibrate", "'candidates' must be positive numbers");
      candidates.push_back(v.get<double>());
    }
  } else {
    candidates = {0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0};
  }
  if (trials < 1) bad("calibrate", "'trials' must be positive");

  const QuadratureRule rule = compute_weights(pts, q.degree, q.opts);
  const WsfaSolver solver(spec, rule);
  const Target target = make_target(ts, spec);
  const ErrorEvaluator evaluate_error(target, pts, {beta});
  const Eigen::VectorXd clean = target.evaluate(pts);

  lcfg.kappa_lp = 1.0; // thresholds collected at unit kappa, then rescaled
  std::vector<LepskiiTrialData> data(static_cast<std::size_t>(trials));
  for (long t = 0; t < trials; ++t) {
    NoiseSpec ns = base_noise;
    ns.seed = derive_seed(master, static_cast<std::uint64_t>(t));
    const Eigen::VectorXd y = clean + sample_noise(ns, pts.size());
    const LepskiiResult res = lepskii_select(solver, y, filter, lcfg);
    LepskiiTrialData& td = data[static_cast<std::size_t>(t)];
    for (const auto& row : res.trace) {
      td.statistics.push_back(row.statistic);
      td.unit_thresholds.push_back(row.threshold);
    }
    for (const auto& f : res.fits) td.errors.push_back(evaluate_error(f.a, beta));
  }
  const double kappa = calibrate_kappa(data, candidates);
  long successes = 0;
  for (const auto& td : data) {
    const int k_hat = replay_k_hat(td, kappa);
    const double err = td.errors[static_cast<std::size_t>(k_hat - 1)];
    const double best = *std::min_element(td.errors.begin(), td.errors.end());
    if (err <= 3.0 * best) ++successes;
  }
  json jres = {{"kappa_lp", kappa},
               {"successes", successes},
               {"trials", trials},
               {"candidates", candidates},
               {"beta", beta}};
  write_json_file(dir / (output + ".json"), jres);

  echo = {{"command", "calibrate"},
          {"kernel", kecho},
          {"points", pecho},
          {"quadrature", qecho},
          {"target", techo},
          {"noise", necho},
          {"filter", filter.str()},
          {"lepskii", lecho},
          {"beta", beta},
          {"trials", trials},
          {"candidates", candidates},
          {"master_seed", master},
          {"output", output}};
  Outcome out;
  out.files = {output + ".json"};
  out.message = "calibrate: kappa_lp=" + fmtg(kappa) + " successes=" + std::to_string(successes) +
                "/" + std::to_string(trials);
  return out;
}

} // namespace

Outcome run_command(const json& config, const std::string& out_dir) {
  need_object(config, "config");
  const std::string command = need_str(config, "config", "command");
  const fs::path dir = prepare_out_dir(out_dir);

  json echo;
  Outcome out;
  if (command == "gen-points")
    out = cmd_gen_points(config, dir, echo);
  else if (command == "quadrature")
    out = cmd_quadrature(config, dir, echo);
  else if (command == "fit")
    out = cmd_fit(config, dir, echo);
  else if (command == "lepskii")
    out = cmd_lepskii(config, dir, echo);
  else if (command == "dcfit")
    out = cmd_dcfit(config, dir, echo);
  else if (command == "study")
    out = cmd_study(config, dir, echo);
  else if (command == "diagnostics")
    out = cmd_diagnostics(config, dir, echo);
  else if (command == "calibrate")
    out = cmd_calibrate(config, dir, echo);
  else
    bad("config", "unknown command '" + command + "'");

  json manifest = {{"tool", "sphfit"},
                   {"version", kVersion},
                   {"command", command},
                   {"config", echo},
                   {"outputs", out.files}};
  const std::string mname = command + "_manifest.json";
  write_json_file(dir / mname, manifest);
  out.files.push_back(mname);
  return out;
}

Outcome run_json_text(const std::string& config_text, const std::string& out_dir) {
  json config;
  try {
    config = json::parse(config_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return run_command(config, out_dir);
}

Outcome run_manifest(const std::string& manifest_path, const std::string& out_dir) {
  std::ifstream f(manifest_path);
  if (!f) throw IoError("cannot open " + manifest_path);
  json manifest;
  try {
    f >> manifest;
  } catch (const json::parse_error& e) {
    throw IoError("invalid JSON in " + manifest_path + ": " + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("config"))
    throw ConfigError("manifest has no 'config' block: " + manifest_path);
  return run_command(manifest["config"], out_dir);
}

} // namespace sphfit::run
