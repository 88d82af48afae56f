// Command-line front end.  Every subcommand assembles a JSON config and hands
// it to the shared library's batch runner, so flag-driven runs, config-file
// runs, and manifest reruns all execute the same code path and produce
// byte-identical outputs for identical configs.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sphfit/sphfit.h"

using nlohmann::json;

namespace {

struct KernelFlags {
  int d = 2;
  double gamma = 1.5;
  int k_max = 200;

  void attach(CLI::App* cmd) {
    cmd->add_option("--d", d, "Sphere dimension (S^d)")->capture_default_str();
    cmd->add_option("--gamma", gamma, "Kernel smoothness exponent, > d/2")
        ->capture_default_str();
    cmd->add_option("--k-max", k_max, "Kernel truncation degree")->capture_default_str();
  }

  json to_json() const { return {{"d", d}, {"gamma", gamma}, {"k_max", k_max}}; }
};

struct PointsFlags {
  std::string file;
  std::string kind = "fibonacci";
  int n = 0;
  std::uint64_t seed = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--points-file", file, "Read points from a CSV instead of generating");
    cmd->add_option("--points-kind", kind, "fibonacci | random")->capture_default_str();
    cmd->add_option("--n", n, "Number of points to generate");
    cmd->add_option("--points-seed", seed, "Seed for random point generation")
        ->capture_default_str();
  }

  json to_json() const {
    if (!file.empty()) return {{"file", file}};
    return {{"kind", kind}, {"n", n}, {"seed", seed}};
  }
};

struct TargetFlags {
  double alpha = 1.0;
  int centers = 16;
  std::uint64_t seed = 7;
  double radius = 1.0;
  std::vector<double> poly_coeffs;
  std::vector<double> poly_axis{0.0, 0.0, 1.0};

  void attach(CLI::App* cmd) {
    cmd->add_option("--target-alpha", alpha, "Smoothness exponent of the synthetic target")
        ->capture_default_str();
    cmd->add_option("--target-centers", centers, "Number of kernel centers in the target")
        ->capture_default_str();
    cmd->add_option("--target-seed", seed, "Seed for the random target")->capture_default_str();
    cmd->add_option("--target-radius", radius, "Smoothness-norm radius of the target")
        ->capture_default_str();
    cmd->add_option("--poly-coeffs", poly_coeffs,
                    "Zonal polynomial target: comma-separated coefficients of P_0, P_1, ...")
        ->delimiter(',');
    cmd->add_option("--poly-axis", poly_axis, "Axis of the zonal polynomial target")
        ->delimiter(',')
        ->expected(3);
  }

  json to_json() const {
    if (!poly_coeffs.empty())
      return {{"kind", "poly"},
              {"axis", {poly_axis[0], poly_axis[1], poly_axis[2]}},
              {"coeffs", poly_coeffs}};
    return {{"kind", "combo"},
            {"alpha", alpha},
            {"n_centers", centers},
            {"seed", seed},
            {"radius", radius}};
  }
};

struct NoiseFlags {
  std::string spec; // "gaussian:0.1" | "uniform:0.2" | "bernoulli"
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--noise", spec,
                    "Noise model: gaussian:<sigma> | uniform:<bound> | bernoulli");
    cmd->add_option("--noise-seed", seed, "Noise seed")->capture_default_str();
  }

  json to_json() const {
    const auto colon = spec.find(':');
    json j = {{"kind", spec.substr(0, colon)}, {"seed", seed}};
    if (colon != std::string::npos) {
      try {
        j["level"] = std::stod(spec.substr(colon + 1));
      } catch (const std::exception&) {
        j["level"] = -1.0; // rejected downstream with a clear message
      }
    }
    return j;
  }
};

// Observations: an explicit CSV or a synthetic target + optional noise.
struct DataFlags {
  std::string file;
  PointsFlags points;
  TargetFlags target;
  NoiseFlags noise;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data-file", file, "Read x,y,z,value observations from a CSV");
    points.attach(cmd);
    target.attach(cmd);
    noise.attach(cmd);
  }

  json to_json() const {
    if (!file.empty()) return {{"file", file}};
    json j = {{"points", points.to_json()}, {"target", target.to_json()}};
    if (!noise.spec.empty()) j["noise"] = noise.to_json();
    return j;
  }
};

int execute(const json& config, const std::string& out_dir) {
  char message[512] = {0};
  const sphfit_status st =
      sphfit_run_json(config.dump().c_str(), out_dir.c_str(), message, sizeof message);
  if (st == SPHFIT_OK) {
    if (message[0] != '\0') std::printf("%s\n", message);
    return 0;
  }
  std::fprintf(stderr, "error: %s\n", sphfit_last_error());
  return static_cast<int>(st);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scattered-data fitting on the unit sphere via weighted spectral filters"};
  app.require_subcommand(1);
  std::string out_dir = ".";
  app.add_option("--out", out_dir, "Directory for output files")->capture_default_str();

  // gen-points
  auto* gen = app.add_subcommand("gen-points", "Generate a point set CSV");
  std::string gen_kind = "fibonacci";
  int gen_n = 0;
  std::uint64_t gen_seed = 1;
  std::string gen_output = "points.csv";
  gen->add_option("--kind", gen_kind, "fibonacci | random")->capture_default_str();
  gen->add_option("--n", gen_n, "Number of points")->required();
  gen->add_option("--seed", gen_seed, "Seed for random points")->capture_default_str();
  gen->add_option("--output", gen_output, "Output file name")->capture_default_str();

  // quadrature
  auto* quad = app.add_subcommand("quadrature", "Solve for quadrature weights on a point set");
  PointsFlags quad_points;
  int quad_degree = 0;
  double quad_tol = 1e-20;
  double quad_cstar = 5.0;
  std::string quad_output = "rule";
  quad_points.attach(quad);
  quad->add_option("--degree", quad_degree, "Polynomial exactness degree")->required();
  quad->add_option("--tol", quad_tol, "Discrepancy tolerance")->capture_default_str();
  quad->add_option("--c-star", quad_cstar, "Weight-bound constant for the D-type check")
      ->capture_default_str();
  quad->add_option("--output", quad_output, "Output name stem")->capture_default_str();

  // fit
  auto* fit = app.add_subcommand("fit", "Weighted spectral-filter fit");
  KernelFlags fit_kernel;
  DataFlags fit_data;
  int fit_degree = 0;
  double fit_tol = 1e-20;
  std::string fit_filter = "tikhonov";
  double fit_lambda = -1.0;
  std::string fit_output = "fitted";
  fit_kernel.attach(fit);
  fit_data.attach(fit);
  fit->add_option("--degree", fit_degree, "Quadrature exactness degree")->required();
  fit->add_option("--tol", fit_tol, "Quadrature tolerance")->capture_default_str();
  fit->add_option("--filter", fit_filter,
                  "tikhonov | itik:<v> | cutoff | landweber:<tau>:<t>")
      ->capture_default_str();
  fit->add_option("--lambda", fit_lambda, "Regularization level");
  fit->add_option("--output", fit_output, "Output name stem")->capture_default_str();

  // lepskii
  auto* lep = app.add_subcommand("lepskii", "Adaptive lambda selection on a geometric grid");
  KernelFlags lep_kernel;
  DataFlags lep_data;
  int lep_degree = 0;
  double lep_tol = 1e-20;
  std::string lep_filter = "tikhonov";
  double lep_q0 = 1.0, lep_q = 0.5, lep_floor = -1.0, lep_kappa = 1.0, lep_delta = 0.05;
  std::string lep_output = "lepskii";
  lep_kernel.attach(lep);
  lep_data.attach(lep);
  lep->add_option("--degree", lep_degree, "Quadrature exactness degree")->required();
  lep->add_option("--tol", lep_tol, "Quadrature tolerance")->capture_default_str();
  lep->add_option("--filter", lep_filter, "Spectral filter")->capture_default_str();
  lep->add_option("--q0", lep_q0, "Grid anchor")->capture_default_str();
  lep->add_option("--q", lep_q, "Grid ratio in (0,1)")->capture_default_str();
  lep->add_option("--lambda-floor", lep_floor,
                  "Smallest grid value (<= 0 derives s^(-2 gamma) from the rule degree)")
      ->capture_default_str();
  lep->add_option("--kappa-lp", lep_kappa, "Threshold scale")->capture_default_str();
  lep->add_option("--delta", lep_delta, "Confidence level in (0,1)")->capture_default_str();
  lep->add_option("--output", lep_output, "Output name stem")->capture_default_str();

  // dcfit
  auto* dc = app.add_subcommand("dcfit", "Divide-and-conquer distributed fit");
  KernelFlags dc_kernel;
  DataFlags dc_data;
  int dc_parts = 0;
  std::string dc_filter = "tikhonov";
  double dc_lambda = 0.0;
  double dc_cdia = 0.5;
  std::string dc_output = "dc";
  dc_kernel.attach(dc);
  dc_data.attach(dc);
  dc->add_option("--partitions", dc_parts, "Number of data subsets")->required();
  dc->add_option("--filter", dc_filter, "Spectral filter")->capture_default_str();
  dc->add_option("--lambda", dc_lambda, "Regularization level")->required();
  dc->add_option("--c-dia", dc_cdia, "Per-subset degree constant")->capture_default_str();
  dc->add_option("--output", dc_output, "Output name stem")->capture_default_str();

  // study
  auto* study = app.add_subcommand("study", "Seeded convergence-rate study");
  KernelFlags st_kernel;
  TargetFlags st_target;
  NoiseFlags st_noise;
  std::vector<int> st_sizes;
  int st_trials = 1;
  std::string st_points_kind = "fibonacci";
  std::uint64_t st_master = 1;
  std::string st_filter = "tikhonov";
  double st_lc = 1.0, st_le = -0.6, st_dc = 0.5, st_de = 0.5;
  std::vector<double> st_betas{0.0};
  std::string st_output = "study";
  st_kernel.attach(study);
  st_target.attach(study);
  st_noise.attach(study);
  study->add_option("--sizes", st_sizes, "Comma-separated sample sizes")
      ->delimiter(',')
      ->required();
  study->add_option("--trials", st_trials, "Noise draws per size")->capture_default_str();
  study->add_option("--points-kind", st_points_kind, "fibonacci | random")
      ->capture_default_str();
  study->add_option("--master-seed", st_master, "Master seed")->capture_default_str();
  study->add_option("--filter", st_filter, "Spectral filter")->capture_default_str();
  study->add_option("--lambda-c", st_lc, "lambda(n) = c n^e, constant")->capture_default_str();
  study->add_option("--lambda-exp", st_le, "lambda(n) = c n^e, exponent")
      ->capture_default_str();
  study->add_option("--degree-c", st_dc, "degree(n) = c n^e, constant")->capture_default_str();
  study->add_option("--degree-exp", st_de, "degree(n) = c n^e, exponent")
      ->capture_default_str();
  study->add_option("--betas", st_betas, "Error-norm exponents to record")
      ->delimiter(',')
      ->capture_default_str();
  study->add_option("--output", st_output, "Output name stem")->capture_default_str();

  // diagnostics
  auto* diag = app.add_subcommand("diagnostics", "Effective dimension, stability, discrepancy");
  KernelFlags dg_kernel;
  PointsFlags dg_points;
  NoiseFlags dg_noise;
  std::string dg_mode = "effective-dimension";
  int dg_degree = 0, dg_count = 13, dg_draws = 200, dg_trials = 50, dg_ncenters = 16;
  double dg_lmin = 1e-6, dg_lmax = 1e-2, dg_lambda = 1e-4, dg_u = 0.5, dg_alpha = 1.0;
  std::uint64_t dg_master = 1;
  std::string dg_output;
  dg_kernel.attach(diag);
  dg_points.attach(diag);
  dg_noise.attach(diag);
  diag->add_option("--mode", dg_mode, "effective-dimension | stability | discrepancy")
      ->capture_default_str();
  diag->add_option("--degree", dg_degree, "Quadrature exactness degree");
  diag->add_option("--count", dg_count, "Number of lambda grid values")->capture_default_str();
  diag->add_option("--draws", dg_draws, "Noise draws (stability mode)")->capture_default_str();
  diag->add_option("--trials", dg_trials, "Random pairs (discrepancy mode)")
      ->capture_default_str();
  diag->add_option("--n-centers", dg_ncenters, "Centers per random combo (discrepancy mode)")
      ->capture_default_str();
  diag->add_option("--lambda-min", dg_lmin, "Smallest lambda")->capture_default_str();
  diag->add_option("--lambda-max", dg_lmax, "Largest lambda")->capture_default_str();
  diag->add_option("--lambda", dg_lambda, "Lambda (discrepancy mode)")->capture_default_str();
  diag->add_option("--u", dg_u, "Resolvent exponent in [0, 1/2] (discrepancy mode)")
      ->capture_default_str();
  diag->add_option("--alpha", dg_alpha, "Smoothness of the probe ball (discrepancy mode)")
      ->capture_default_str();
  diag->add_option("--master-seed", dg_master, "Seed")->capture_default_str();
  diag->add_option("--output", dg_output, "Output name stem");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Calibrate the selection threshold scale");
  KernelFlags cal_kernel;
  PointsFlags cal_points;
  TargetFlags cal_target;
  NoiseFlags cal_noise;
  int cal_degree = 0, cal_trials = 20;
  double cal_tol = 1e-20;
  std::string cal_filter = "tikhonov";
  double cal_q0 = 1.0, cal_q = 0.5, cal_floor = -1.0, cal_delta = 0.05, cal_beta = 0.0;
  std::vector<double> cal_candidates;
  std::uint64_t cal_master = 1;
  std::string cal_output = "calibration";
  cal_kernel.attach(cal);
  cal_points.attach(cal);
  cal_target.attach(cal);
  cal_noise.attach(cal);
  cal->add_option("--degree", cal_degree, "Quadrature exactness degree")->required();
  cal->add_option("--tol", cal_tol, "Quadrature tolerance")->capture_default_str();
  cal->add_option("--filter", cal_filter, "Spectral filter")->capture_default_str();
  cal->add_option("--q0", cal_q0, "Grid anchor")->capture_default_str();
  cal->add_option("--q", cal_q, "Grid ratio in (0,1)")->capture_default_str();
  cal->add_option("--lambda-floor", cal_floor, "Smallest grid value")->capture_default_str();
  cal->add_option("--delta", cal_delta, "Confidence level")->capture_default_str();
  cal->add_option("--beta", cal_beta, "Error-norm exponent scored against the oracle")
      ->capture_default_str();
  cal->add_option("--trials", cal_trials, "Calibration trials")->capture_default_str();
  cal->add_option("--candidates", cal_candidates, "Threshold scales to try")->delimiter(',');
  cal->add_option("--master-seed", cal_master, "Master seed")->capture_default_str();
  cal->add_option("--output", cal_output, "Output name stem")->capture_default_str();

  // run / rerun
  auto* runc = app.add_subcommand("run", "Execute a JSON config file");
  std::string run_config;
  runc->add_option("--config", run_config, "Path to the config JSON")->required();

  auto* rerun = app.add_subcommand("rerun", "Re-execute the config inside a manifest");
  std::string rerun_manifest;
  rerun->add_option("--manifest", rerun_manifest, "Path to a manifest JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (app.got_subcommand(gen)) {
    json cfg = {{"command", "gen-points"},
                {"kind", gen_kind},
                {"n", gen_n},
                {"seed", gen_seed},
                {"output", gen_output}};
    return execute(cfg, out_dir);
  }
  if (app.got_subcommand(quad)) {
    json cfg = {{"command", "quadrature"}, {"points", quad_points.to_json()},
                {"degree", quad_degree},   {"tol", quad_tol},
                {"c_star", quad_cstar},    {"output", quad_output}};
    return execute(cfg, out_dir);
  }
  if (app.got_subcommand(fit)) {
    json cfg = {{"command", "fit"},
                {"kernel", fit_kernel.to_json()},
                {"data", fit_data.to_json()},
                {"quadrature", {{"degree", fit_degree}, {"tol", fit_tol}}},
                {"filter", fit_filter},
                {"output", fit_output}};
    if (fit_lambda > 0.0) cfg["lambda"] = fit_lambda;
    return execute(cfg, out_dir);
  }
  if (app.got_subcommand(lep)) {
    json cfg = {{"command", "lepskii"},
                {"kernel", lep_kernel.to_json()},
                {"data", lep_data.to_json()},
                {"quadrature", {{"degree", lep_degree}, {"tol", lep_tol}}},
                {"filter", lep_filter},
                {"lepskii",
                 {{"q0", lep_q0},
                  {"q", lep_q},
                  {"lambda_floor", lep_floor},
                  {"kappa_lp", lep_kappa},
                  {"delta", lep_delta}}},
                {"output", lep_output}};
    return execute(cfg, out_dir);
  }
  if (app.got_subcommand(dc)) {
    json cfg = {{"command", "dcfit"},
                {"kernel", dc_kernel.to_json()},
                {"data", dc_data.to_json()},
                {"partitions", dc_parts},
                {"filter", dc_filter},
                {"lambda", dc_lambda},
                {"dc", {{"c_dia", dc_cdia}}},
                {"output", dc_output}};
    return execute(cfg, out_dir);
  }
  if (app.got_subcommand(study)) {
    json sj = {{"kernel", st_kernel.to_json()},
               {"sizes", st_sizes},
               {"trials", st_trials},
               {"points_kind", st_points_kind},
               {"master_seed", st_master},
               {"target", st_target.to_json()},
               {"filter", st_filter},
               {"lambda_rule", {{"c", st_lc}, {"exponent", st_le}}},
               {"degree_rule", {{"c", st_dc}, {"exponent", st_de}}},
               {"betas", st_betas}};
    if (!st_noise.spec.empty()) sj["noise"] = st_noise.to_json();
    json cfg = {{"command", "study"}, {"study", sj}, {"output", st_output}};
    return execute(cfg, out_dir);
  }
  if (app.got_subcommand(diag)) {
    json cfg = {{"command", "diagnostics"}, {"mode", dg_mode}, {"kernel", dg_kernel.to_json()}};
    if (dg_mode == "effective-dimension") {
      cfg["lambda_min"] = dg_lmin;
      cfg["lambda_max"] = dg_lmax;
      cfg["count"] = dg_count;
    } else if (dg_mode == "stability") {
      cfg["points"] = dg_points.to_json();
      cfg["degree"] = dg_degree;
      if (!dg_noise.spec.empty()) cfg["noise"] = dg_noise.to_json();
      cfg["draws"] = dg_draws;
      cfg["lambda_min"] = dg_lmin;
      cfg["lambda_max"] = dg_lmax;
      cfg["count"] = dg_count;
      cfg["master_seed"] = dg_master;
    } else {
      cfg["points"] = dg_points.to_json();
      cfg["degree"] = dg_degree;
      cfg["lambda"] = dg_lambda;
      cfg["u"] = dg_u;
      cfg["alpha"] = dg_alpha;
      cfg["trials"] = dg_trials;
      cfg["seed"] = dg_master;
      cfg["n_centers"] = dg_ncenters;
    }
    if (!dg_output.empty()) cfg["output"] = dg_output;
    return execute(cfg, out_dir);
  }
  if (app.got_subcommand(cal)) {
    json cfg = {{"command", "calibrate"},
                {"kernel", cal_kernel.to_json()},
                {"points", cal_points.to_json()},
                {"quadrature", {{"degree", cal_degree}, {"tol", cal_tol}}},
                {"target", cal_target.to_json()},
                {"noise", cal_noise.spec.empty() ? json({{"kind", "gaussian"}, {"seed", 0}})
                                                 : cal_noise.to_json()},
                {"filter", cal_filter},
                {"lepskii",
                 {{"q0", cal_q0}, {"q", cal_q}, {"lambda_floor", cal_floor}, {"delta", cal_delta}}},
                {"beta", cal_beta},
                {"trials", cal_trials},
                {"master_seed", cal_master},
                {"output", cal_output}};
    if (!cal_candidates.empty()) cfg["candidates"] = cal_candidates;
    return execute(cfg, out_dir);
  }
  if (app.got_subcommand(runc)) {
    std::ifstream f(run_config);
    if (!f) {
      std::fprintf(stderr, "error: cannot open %s\n", run_config.c_str());
      return 4;
    }
    std::ostringstream text;
    text << f.rdbuf();
    json cfg;
    try {
      cfg = json::parse(text.str());
    } catch (const json::parse_error& e) {
      std::fprintf(stderr, "error: %s is not valid JSON: %s\n", run_config.c_str(), e.what());
      return 2;
    }
    return execute(cfg, out_dir);
  }
  if (app.got_subcommand(rerun)) {
    char message[512] = {0};
    const sphfit_status st = sphfit_run_manifest(rerun_manifest.c_str(), out_dir.c_str(),
                                                 message, sizeof message);
    if (st == SPHFIT_OK) {
      if (message[0] != '\0') std::printf("%s\n", message);
      return 0;
    }
    std::fprintf(stderr, "error: %s\n", sphfit_last_error());
    return static_cast<int>(st);
  }
  return 2;
}
