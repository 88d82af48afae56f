#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
  int code = -1;
  std::string output; // stdout and stderr interleaved
};

CmdResult run_cli(const std::string& args) {
  const std::string command = std::string(SPHFIT_CLI_BIN) + " " + args + " 2>&1";
  CmdResult res;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) res.output += buf;
  const int status = pclose(pipe);
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

std::string fresh_dir(const std::string& name) {
  const std::string dir = "/tmp/sphfit_cli_" + name;
  fs::remove_all(dir);
  return dir;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("help and argument errors") {
  const CmdResult help = run_cli("--help");
  CHECK(help.code == 0);
  CHECK(contains(help.output, "gen-points"));
  CHECK(contains(help.output, "study"));

  CHECK(run_cli("").code == 2);            // a subcommand is required
  CHECK(run_cli("bogus").code == 2);       // unknown subcommand
  CHECK(run_cli("gen-points").code == 2);  // missing --n
  CHECK(run_cli("gen-points --n 8 --frobnicate").code == 2);
}

TEST_CASE("gen-points is deterministic and validates input") {
  const std::string dir_a = fresh_dir("gen_a");
  const std::string dir_b = fresh_dir("gen_b");
  const CmdResult a = run_cli("--out " + dir_a + " gen-points --n 40 --output p.csv");
  CHECK(a.code == 0);
  CHECK(contains(a.output, "wrote 40 fibonacci points to p.csv"));
  const CmdResult b = run_cli("--out " + dir_b + " gen-points --n 40 --output p.csv");
  CHECK(b.code == 0);
  CHECK(slurp(dir_a + "/p.csv") == slurp(dir_b + "/p.csv"));
  const auto rows = lines_of(dir_a + "/p.csv");
  REQUIRE(rows.size() == 41);
  CHECK(rows[0] == "x,y,z");

  const CmdResult rnd = run_cli("--out " + dir_a + " gen-points --kind random --n 12 --seed 9");
  CHECK(rnd.code == 0);
  CHECK(contains(rnd.output, "wrote 12 random points to points.csv"));

  const CmdResult bad = run_cli("--out " + dir_a + " gen-points --n 0");
  CHECK(bad.code == 2);
  CHECK(contains(bad.output, "error:"));
}

TEST_CASE("quadrature recovers the octahedron rule from a points file") {
  const std::string dir = fresh_dir("quad");
  fs::create_directories(dir);
  const std::string pts_file = dir + "/oct.csv";
  {
    std::ofstream f(pts_file);
    f << "x,y,z\n1,0,0\n-1,0,0\n0,1,0\n0,-1,0\n0,0,1\n0,0,-1\n";
  }
  const CmdResult r =
      run_cli("--out " + dir + " quadrature --points-file " + pts_file + " --degree 3");
  CHECK(r.code == 0);
  CHECK(contains(r.output, "degree 3 rule on 6 points, residual"));
  CHECK(contains(r.output, ", D-type"));
  const auto rows = lines_of(dir + "/rule.csv");
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == "x,y,z,w");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto fields = split_csv(rows[i]);
    REQUIRE(fields.size() == 4);
    CHECK(std::abs(std::stod(fields[3]) - 1.0 / 6.0) < 1e-12);
  }

  const CmdResult infeasible =
      run_cli("--out " + dir + " quadrature --points-kind fibonacci --n 9 --degree 10");
  CHECK(infeasible.code == 3);
  CHECK(contains(infeasible.output, "error:"));
}

TEST_CASE("fit writes coefficients and reports the filter") {
  const std::string dir = fresh_dir("fit");
  const CmdResult r = run_cli("--out " + dir +
                              " fit --n 36 --degree 3 --k-max 40 --target-centers 6"
                              " --filter tikhonov --lambda 0.01");
  CHECK(r.code == 0);
  CHECK(contains(r.output, "fit: n=36 filter=tikhonov lambda=0.01"));
  const auto rows = lines_of(dir + "/fitted.csv");
  REQUIRE(rows.size() == 37);
  CHECK(rows[0] == "x,y,z,a");

  // A zero target with no noise fits to exactly zero coefficients.
  const CmdResult z = run_cli("--out " + dir +
                              " fit --n 36 --degree 3 --k-max 40 --poly-coeffs 0"
                              " --filter tikhonov --lambda 0.01 --output zero");
  CHECK(z.code == 0);
  const auto zrows = lines_of(dir + "/zero.csv");
  REQUIRE(zrows.size() == 37);
  for (std::size_t i = 1; i < zrows.size(); ++i) {
    const auto fields = split_csv(zrows[i]);
    REQUIRE(fields.size() == 4);
    CHECK(std::stod(fields[3]) == 0.0);
  }

  const CmdResult bad_noise = run_cli("--out " + dir +
                                      " fit --n 36 --degree 3 --target-centers 6"
                                      " --noise gaussian:xyz --lambda 0.01");
  CHECK(bad_noise.code == 2);
  CHECK(contains(bad_noise.output, "error:"));
}

TEST_CASE("lepskii emits a trace and a selection") {
  const std::string dir = fresh_dir("lepskii");
  const CmdResult r = run_cli("--out " + dir +
                              " lepskii --n 64 --degree 4 --k-max 60 --target-centers 8"
                              " --noise gaussian:0.05 --noise-seed 3 --q0 1 --q 0.5");
  CHECK(r.code == 0);
  CHECK(contains(r.output, "lepskii: K="));
  CHECK(contains(r.output, "lambda_hat="));

  const json sel = json::parse(slurp(dir + "/lepskii_selection.json"));
  CHECK(sel.at("lambda_hat").get<double>() > 0.0);
  CHECK(sel.at("k_hat").get<int>() >= 1);
  REQUIRE(sel.at("grid").is_array());
  const std::size_t K = sel.at("grid").size();
  CHECK(K >= 2);
  CHECK(contains(r.output, "lepskii: K=" + std::to_string(K)));

  const auto trace = lines_of(dir + "/lepskii_trace.csv");
  REQUIRE(trace.size() >= 2);
  CHECK(trace[0] == "k,lambda,statistic,threshold,accepted");
  CHECK(fs::exists(dir + "/lepskii_fitted.csv"));
  CHECK(fs::exists(dir + "/lepskii_fitted.json"));
}

TEST_CASE("dcfit reports per-subset geometry") {
  const std::string dir = fresh_dir("dc");
  const CmdResult r = run_cli("--out " + dir +
                              " dcfit --n 120 --partitions 3 --k-max 40 --target-centers 6"
                              " --filter tikhonov --lambda 0.01");
  CHECK(r.code == 0);
  CHECK(contains(r.output, "dcfit: J=3 lambda=0.01 equal-weight fallbacks="));
  const auto rows = lines_of(dir + "/dc_subsets.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] ==
        "subset,size,degree,residual,equal_weight_fallback,separation,mesh_norm,mesh_ratio");
  long total = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto fields = split_csv(rows[i]);
    REQUIRE(fields.size() == 8);
    total += std::stol(fields[1]);
    CHECK(std::stod(fields[7]) > 0.0);
  }
  CHECK(total == 120);
  CHECK(fs::exists(dir + "/dc_fitted.csv"));
}

TEST_CASE("study reruns are byte-identical") {
  const std::string dir_a = fresh_dir("study_a");
  const std::string dir_b = fresh_dir("study_b");
  const std::string flags =
      " study --sizes 36,64 --trials 2 --k-max 40 --target-centers 6"
      " --noise gaussian:0.05 --filter tikhonov --betas 0";
  const CmdResult a = run_cli("--out " + dir_a + flags);
  CHECK(a.code == 0);
  CHECK(contains(a.output, "study: 2 sizes x 2 trials"));
  const CmdResult b = run_cli("--out " + dir_b + flags);
  CHECK(b.code == 0);
  CHECK(slurp(dir_a + "/study_rows.csv") == slurp(dir_b + "/study_rows.csv"));
  CHECK(slurp(dir_a + "/study_summary.csv") == slurp(dir_b + "/study_summary.csv"));

  const auto rows = lines_of(dir_a + "/study_rows.csv");
  REQUIRE(rows.size() == 5); // 2 sizes x 2 trials x 1 beta
  CHECK(rows[0] == "size,trial,metric,value");

  // Replaying the recorded manifest reproduces the same bytes again.
  const std::string dir_c = fresh_dir("study_c");
  const CmdResult c =
      run_cli("--out " + dir_c + " rerun --manifest " + dir_a + "/study_manifest.json");
  CHECK(c.code == 0);
  CHECK(slurp(dir_c + "/study_rows.csv") == slurp(dir_a + "/study_rows.csv"));
  CHECK(slurp(dir_c + "/study_summary.csv") == slurp(dir_a + "/study_summary.csv"));
}

TEST_CASE("diagnostics modes write their tables") {
  const std::string dir = fresh_dir("diag");
  const CmdResult eff = run_cli("--out " + dir +
                                " diagnostics --mode effective-dimension --count 5"
                                " --output eff");
  CHECK(eff.code == 0);
  CHECK(contains(eff.output, "effective dimension: slope "));
  const auto eff_rows = lines_of(dir + "/eff.csv");
  REQUIRE(eff_rows.size() == 6);
  CHECK(eff_rows[0] == "lambda,n_eff");
  // n_eff shrinks as lambda grows (rows are in increasing-lambda order).
  double prev = 1e300;
  for (std::size_t i = 1; i < eff_rows.size(); ++i) {
    const double v = std::stod(split_csv(eff_rows[i])[1]);
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
  }

  const CmdResult st = run_cli("--out " + dir +
                               " diagnostics --mode stability --n 36 --degree 3 --k-max 60"
                               " --draws 10 --count 3 --output stab");
  CHECK(st.code == 0);
  CHECK(contains(st.output, "stability functional: p90 slope "));
  CHECK(lines_of(dir + "/stab.csv").size() == 31);
  CHECK(lines_of(dir + "/stab_p90.csv").size() == 4);

  const CmdResult di = run_cli("--out " + dir +
                               " diagnostics --mode discrepancy --n 24 --degree 3 --k-max 60"
                               " --lambda 1e-3 --trials 3 --output disc");
  CHECK(di.code == 0);
  CHECK(contains(di.output, "discrepancy probe: "));
  const json probe = json::parse(slurp(dir + "/disc.json"));
  CHECK(probe.at("probe").get<double>() >= 0.0);
  CHECK(probe.at("trials").get<int>() == 3);
}

TEST_CASE("calibrate scores threshold candidates") {
  const std::string dir = fresh_dir("cal");
  const CmdResult r = run_cli("--out " + dir +
                              " calibrate --n 48 --degree 4 --k-max 40 --target-centers 6"
                              " --noise gaussian:0.1 --trials 3 --candidates 0.5,1,2");
  CHECK(r.code == 0);
  CHECK(contains(r.output, "calibrate: kappa_lp="));
  const json cal = json::parse(slurp(dir + "/calibration.json"));
  const double kappa = cal.at("kappa_lp").get<double>();
  CHECK((kappa == 0.5 || kappa == 1.0 || kappa == 2.0));
  CHECK(cal.at("trials").get<int>() == 3);
  CHECK(cal.at("successes").get<int>() <= 3);
  REQUIRE(cal.at("candidates").is_array());
  CHECK(cal.at("candidates").size() == 3);
}

TEST_CASE("run and rerun execute config files") {
  const std::string dir = fresh_dir("run");
  fs::create_directories(dir);
  const std::string cfg_path = dir + "/cfg.json";
  std::ofstream(cfg_path) << R"({"command":"gen-points","n":20,"output":"pts.csv"})";

  const CmdResult r = run_cli("--out " + dir + " run --config " + cfg_path);
  CHECK(r.code == 0);
  CHECK(contains(r.output, "wrote 20 fibonacci points to pts.csv"));

  const std::string dir2 = fresh_dir("run2");
  const CmdResult rr =
      run_cli("--out " + dir2 + " rerun --manifest " + dir + "/gen-points_manifest.json");
  CHECK(rr.code == 0);
  CHECK(slurp(dir2 + "/pts.csv") == slurp(dir + "/pts.csv"));

  CHECK(run_cli("run --config /tmp/sphfit_cli_missing.json").code == 4);
  const std::string bad_path = dir + "/bad.json";
  std::ofstream(bad_path) << "{not json";
  const CmdResult bad = run_cli("--out " + dir + " run --config " + bad_path);
  CHECK(bad.code == 2);
  CHECK(contains(bad.output, "not valid JSON"));
  CHECK(run_cli("rerun --manifest /tmp/sphfit_cli_missing.json").code == 4);
}

} // TEST_SUITE
