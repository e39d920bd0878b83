#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "tlml/csv.hpp"
#include "tlml/rng.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out_buf, err_buf;
  std::streambuf* old_out = std::cout.rdbuf(out_buf.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(err_buf.rdbuf());
  CliResult r;
  try {
    r.code = tlml::cli::run(args);
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out_buf.str();
  r.err = err_buf.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out << text;
}

std::string read_all(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char ch : text)
    if (ch == '\n') ++n;
  return n;
}

void check_identical_trees(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel_a, rel_b;
  for (const auto& entry : fs::recursive_directory_iterator(a))
    if (entry.is_regular_file()) rel_a.push_back(fs::relative(entry.path(), a));
  for (const auto& entry : fs::recursive_directory_iterator(b))
    if (entry.is_regular_file()) rel_b.push_back(fs::relative(entry.path(), b));
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  REQUIRE(rel_a == rel_b);
  for (const auto& rel : rel_a) CHECK(read_all(a / rel) == read_all(b / rel));
}

}  // namespace

TEST_CASE("usage errors exit with code 2 and help with 0") {
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"simulate", "--bogus-flag", "1"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
  const auto help = run_cli({"simulate", "--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("--seed") != std::string::npos);
}

TEST_CASE("simulate writes a readable path with default settings") {
  const fs::path dir = fresh_dir("tlml_cli_sim");
  const fs::path out = dir / "path.csv";
  const auto r = run_cli({"simulate", "--seed", "9", "--horizon", "150",
                          "--out", out.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("wrote") != std::string::npos);
  const auto parsed = tlml::csv::read_path_csv_file(out);
  CHECK(parsed.population == 5000);
  CHECK(parsed.n2.size() == 151);
  CHECK(parsed.a[42] == 0.2);
  CHECK(parsed.c[42] == 0.196);
  fs::remove_all(dir);
}

TEST_CASE("simulate demands a seed and an output path") {
  const fs::path dir = fresh_dir("tlml_cli_sim_err");
  const auto no_seed = run_cli({"simulate", "--out", (dir / "x.csv").string()});
  CHECK(no_seed.code == 2);
  CHECK(no_seed.err.find("seed is required for simulation") != std::string::npos);
  const auto no_out = run_cli({"simulate", "--seed", "1"});
  CHECK(no_out.code == 2);
  CHECK(no_out.err.find("output path is required") != std::string::npos);
  const auto bad_law = run_cli({"simulate", "--seed", "1", "--law", "negbin",
                                "--out", (dir / "x.csv").string()});
  CHECK(bad_law.code == 2);
  CHECK(bad_law.err.find("expected binomial, poisson, or poisson_positive") !=
        std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("simulate reads its configuration file") {
  const fs::path dir = fresh_dir("tlml_cli_sim_cfg");
  const fs::path out = dir / "from_config.csv";
  write_text(dir / "sim.json",
             "{\"seed\": 12, \"horizon\": 80, \"law\": \"poisson_positive\",\n"
             " \"dynamics\": {\"kind\": \"log_ar1\", \"a_star\": 0.2, \"rho\": 0.99,\n"
             "               \"sigma\": 0.01, \"c\": 0.196},\n"
             " \"output\": \"" + out.string() + "\"}");
  const auto r = run_cli({"simulate", "--config", (dir / "sim.json").string()});
  CHECK(r.code == 0);
  const auto parsed = tlml::csv::read_path_csv_file(out);
  CHECK(parsed.n2.size() == 81);
  // stochastic rates: the parameter column actually varies
  CHECK(parsed.a[5] != parsed.a[60]);
  fs::remove_all(dir);
}

TEST_CASE("flags override configuration values") {
  const fs::path dir = fresh_dir("tlml_cli_precedence");
  const fs::path cfg_out = dir / "cfg.csv";
  const fs::path flag_out = dir / "flag.csv";
  write_text(dir / "sim.json",
             "{\"seed\": 5, \"horizon\": 200, \"output\": \"" + cfg_out.string() + "\"}");
  const auto r = run_cli({"simulate", "--config", (dir / "sim.json").string(),
                          "--horizon", "120", "--out", flag_out.string()});
  CHECK(r.code == 0);
  CHECK(!fs::exists(cfg_out));
  const auto parsed = tlml::csv::read_path_csv_file(flag_out);
  CHECK(parsed.n2.size() == 121);
  fs::remove_all(dir);
}

TEST_CASE("configuration problems are reported precisely") {
  const fs::path dir = fresh_dir("tlml_cli_cfg_err");
  write_text(dir / "unknown.json", "{\"seed\": 1, \"t_mn\": 5}");
  const auto unknown = run_cli({"simulate", "--config", (dir / "unknown.json").string(),
                                "--out", (dir / "x.csv").string()});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("unknown key \"t_mn\"") != std::string::npos);

  write_text(dir / "nested.json",
             "{\"seed\": 1, \"dynamics\": {\"kind\": \"constant\", \"x\": 1}}");
  const auto nested = run_cli({"simulate", "--config", (dir / "nested.json").string(),
                               "--out", (dir / "x.csv").string()});
  CHECK(nested.code == 2);
  CHECK(nested.err.find("unknown key \"dynamics.x\"") != std::string::npos);

  write_text(dir / "both.json",
             "{\"seed\": 1, \"design\": \"constant\", "
             "\"dynamics\": {\"kind\": \"constant\"}}");
  const auto both = run_cli({"simulate", "--config", (dir / "both.json").string(),
                             "--out", (dir / "x.csv").string()});
  CHECK(both.code == 2);
  CHECK(both.err.find("give either design or dynamics, not both") != std::string::npos);

  write_text(dir / "broken.json", "{\"seed\": ");
  const auto broken = run_cli({"simulate", "--config", (dir / "broken.json").string(),
                               "--out", (dir / "x.csv").string()});
  CHECK(broken.code == 2);
  CHECK(broken.err.find("config is not valid JSON") != std::string::npos);

  const auto missing = run_cli({"simulate", "--config", (dir / "nope.json").string(),
                                "--out", (dir / "x.csv").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("cannot open config file") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("unwritable outputs are runtime failures, not usage errors") {
  const auto r = run_cli({"simulate", "--seed", "1", "--out",
                          "/nonexistent_dir_909/path.csv"});
  CHECK(r.code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("estimate runs the default window over a simulated path") {
  const fs::path dir = fresh_dir("tlml_cli_est");
  const fs::path path_csv = dir / "path.csv";
  REQUIRE(run_cli({"simulate", "--seed", "9", "--horizon", "150", "--out",
                   path_csv.string()})
              .code == 0);

  const fs::path est_csv = dir / "est.csv";
  const auto r = run_cli({"estimate", "--input", path_csv.string(), "--out",
                          est_csv.string()});
  CHECK(r.code == 0);
  const std::string text = read_all(est_csv);
  CHECK(line_count(text) == 52);  // header + dates 100..150
  CHECK(text.rfind("t,a_hat,c_hat,R0_hat,loglik,converged,bound_hit,eig1,eig2,foc_norm\n",
                   0) == 0);

  const fs::path narrow_csv = dir / "narrow.csv";
  const auto narrow = run_cli({"estimate", "--input", path_csv.string(), "--out",
                               narrow_csv.string(), "--t-min", "2", "--t-max", "50",
                               "--scheme", "rolling:30", "--family",
                               "poisson_gaussian", "--no-warm-start"});
  CHECK(narrow.code == 0);
  CHECK(line_count(read_all(narrow_csv)) == 50);  // header + dates 2..50
  fs::remove_all(dir);
}

TEST_CASE("estimate rejects bad scheme strings and inputs") {
  const fs::path dir = fresh_dir("tlml_cli_est_err");
  const fs::path path_csv = dir / "path.csv";
  REQUIRE(run_cli({"simulate", "--seed", "9", "--horizon", "120", "--out",
                   path_csv.string()})
              .code == 0);
  const auto bad_rho = run_cli({"estimate", "--input", path_csv.string(), "--out",
                                (dir / "e.csv").string(), "--scheme", "geometric:0"});
  CHECK(bad_rho.code == 2);
  CHECK(bad_rho.err.find("geometric rho must lie in (0,1)") != std::string::npos);

  const auto bad_shape = run_cli({"estimate", "--input", path_csv.string(), "--out",
                                  (dir / "e.csv").string(), "--scheme",
                                  "kernel:tri:0.5:100"});
  CHECK(bad_shape.code == 2);
  CHECK(bad_shape.err.find("expected uniform, triangular, or epanechnikov") !=
        std::string::npos);

  const auto bad_form = run_cli({"estimate", "--input", path_csv.string(), "--out",
                                 (dir / "e.csv").string(), "--scheme", "rolling"});
  CHECK(bad_form.code == 2);
  CHECK(bad_form.err.find("bad scheme") != std::string::npos);

  const auto bad_number = run_cli({"estimate", "--input", path_csv.string(), "--out",
                                   (dir / "e.csv").string(), "--scheme", "geometric:x"});
  CHECK(bad_number.code == 2);
  CHECK(bad_number.err.find("bad number in scheme") != std::string::npos);

  const auto bad_family = run_cli({"estimate", "--input", path_csv.string(), "--out",
                                   (dir / "e.csv").string(), "--family", "gauss"});
  CHECK(bad_family.code == 2);

  const auto no_input = run_cli({"estimate", "--out", (dir / "e.csv").string()});
  CHECK(no_input.code == 2);
  CHECK(no_input.err.find("input path CSV is required") != std::string::npos);

  const auto missing_input = run_cli({"estimate", "--input", (dir / "nope.csv").string(),
                                      "--out", (dir / "e.csv").string()});
  CHECK(missing_input.code == 2);
  CHECK(missing_input.err.find("cannot open") != std::string::npos);

  write_text(dir / "bad.csv", "t,N1\n0,1\n");
  const auto malformed = run_cli({"estimate", "--input", (dir / "bad.csv").string(),
                                  "--out", (dir / "e.csv").string()});
  CHECK(malformed.code == 2);
  CHECK(malformed.err.find("bad path CSV header") != std::string::npos);

  // diagnose-only keys are unknown to estimate
  write_text(dir / "lm.json", "{\"input\": \"" + path_csv.string() +
                                  "\", \"output\": \"" + (dir / "e.csv").string() +
                                  "\", \"level_mult\": 3}");
  const auto foreign = run_cli({"estimate", "--config", (dir / "lm.json").string()});
  CHECK(foreign.code == 2);
  CHECK(foreign.err.find("unknown key \"level_mult\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("scenario writes the study layout for one and many replications") {
  const fs::path flat = fresh_dir("tlml_cli_scen_flat");
  const auto one = run_cli({"scenario", "--seed", "21", "--horizon", "140",
                            "--out", flat.string()});
  CHECK(one.code == 0);
  CHECK(fs::exists(flat / "path.csv"));
  CHECK(fs::exists(flat / "stats.csv"));
  CHECK(fs::exists(flat / "estimates_geom_0.9.csv"));
  CHECK(!fs::exists(flat / "rep0"));

  const fs::path multi = fresh_dir("tlml_cli_scen_multi");
  const auto two = run_cli({"scenario", "--seed", "21", "--horizon", "140",
                            "--replications", "2", "--out", multi.string()});
  CHECK(two.code == 0);
  CHECK(fs::exists(multi / "stats.csv"));
  CHECK(fs::exists(multi / "rep0" / "path.csv"));
  CHECK(fs::exists(multi / "rep1" / "estimates_geom_0.1.csv"));
  CHECK(!fs::exists(multi / "path.csv"));

  // rep0 of the multi-run reproduces the flat run: same derived seed
  CHECK(read_all(flat / "path.csv") == read_all(multi / "rep0" / "path.csv"));
  fs::remove_all(flat);
  fs::remove_all(multi);
}

TEST_CASE("scenario accepts scheme arrays in config form") {
  const fs::path dir = fresh_dir("tlml_cli_scen_cfg");
  const fs::path out = dir / "study";
  write_text(dir / "scen.json",
             "{\"seed\": 30, \"horizon\": 140,\n"
             " \"schemes\": [0.9, {\"kind\": \"uniform\"},\n"
             "               {\"kind\": \"rolling\", \"window\": 7},\n"
             "               {\"kind\": \"kernel\", \"shape\": \"triangular\",\n"
             "                \"c_frac\": 0.5, \"t_ref\": 140}],\n"
             " \"output\": \"" + out.string() + "\"}");
  const auto r = run_cli({"scenario", "--config", (dir / "scen.json").string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(out / "estimates_geom_0.9.csv"));
  CHECK(fs::exists(out / "estimates_uniform.csv"));
  CHECK(fs::exists(out / "estimates_rolling_7.csv"));
  CHECK(fs::exists(out / "estimates_kernel_triangular_0.5.csv"));

  write_text(dir / "empty.json", "{\"seed\": 30, \"schemes\": [], \"output\": \"x\"}");
  const auto empty = run_cli({"scenario", "--config", (dir / "empty.json").string()});
  CHECK(empty.code == 2);
  CHECK(empty.err.find("schemes must be a non-empty array") != std::string::npos);

  const auto dup = run_cli({"scenario", "--seed", "30", "--horizon", "140",
                            "--scheme", "geometric:0.9", "--scheme", "geometric:0.9",
                            "--out", (dir / "dup").string()});
  CHECK(dup.code == 2);
  CHECK(dup.err.find("duplicate weight scheme geom_0.9") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("scenario output equals simulate plus estimate run by hand") {
  const fs::path dir = fresh_dir("tlml_cli_pipeline");
  const fs::path study = dir / "study";
  REQUIRE(run_cli({"scenario", "--seed", "777", "--horizon", "160", "--out",
                   study.string()})
              .code == 0);

  const std::uint64_t rep_seed = tlml::derive_seed(777, 0, 0);
  const fs::path path_csv = dir / "path.csv";
  REQUIRE(run_cli({"simulate", "--seed", std::to_string(rep_seed), "--horizon",
                   "160", "--out", path_csv.string()})
              .code == 0);
  CHECK(read_all(path_csv) == read_all(study / "path.csv"));

  const fs::path est_csv = dir / "est.csv";
  REQUIRE(run_cli({"estimate", "--input", path_csv.string(), "--scheme",
                   "geometric:0.5", "--out", est_csv.string()})
              .code == 0);
  CHECK(read_all(est_csv) == read_all(study / "estimates_geom_0.5.csv"));
  fs::remove_all(dir);
}

TEST_CASE("scenario runs are reproducible and thread-count independent") {
  const fs::path a = fresh_dir("tlml_cli_repro_a");
  const fs::path b = fresh_dir("tlml_cli_repro_b");
  const fs::path c = fresh_dir("tlml_cli_repro_c");
  const std::vector<std::string> base{"scenario", "--seed", "88", "--horizon", "140",
                                      "--replications", "2"};
  auto with = [&](const fs::path& out, const std::string& threads) {
    std::vector<std::string> args = base;
    args.push_back("--threads");
    args.push_back(threads);
    args.push_back("--out");
    args.push_back(out.string());
    return run_cli(args);
  };
  REQUIRE(with(a, "1").code == 0);
  REQUIRE(with(b, "1").code == 0);
  REQUIRE(with(c, "8").code == 0);
  check_identical_trees(a, b);
  check_identical_trees(a, c);
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("diagnose writes the four diagnostic tables") {
  const fs::path dir = fresh_dir("tlml_cli_diag");
  const fs::path path_csv = dir / "path.csv";
  REQUIRE(run_cli({"simulate", "--seed", "9", "--horizon", "160", "--out",
                   path_csv.string()})
              .code == 0);
  const fs::path diag = dir / "diag";
  const auto r = run_cli({"diagnose", "--input", path_csv.string(), "--scheme",
                          "geometric:0.9", "--out", diag.string()});
  CHECK(r.code == 0);
  const std::string ci = read_all(diag / "ci.csv");
  CHECK(ci.rfind("t,a_hat,a_lo,a_hi,c_hat,c_lo,c_hi,available\n", 0) == 0);
  CHECK(line_count(ci) == 62);  // header + dates 100..160
  const std::string eig = read_all(diag / "eigen.csv");
  CHECK(eig.rfind("t,eig_max,eig_min\n", 0) == 0);
  CHECK(line_count(eig) == 62);
  const std::string bias = read_all(diag / "bias.csv");
  CHECK(bias.rfind("t,a_corr,omc_corr,r0_corr\n", 0) == 0);
  CHECK(line_count(bias) == 62);
  const std::string pred = read_all(diag / "prediction.csv");
  CHECK(pred.rfind("t,predicted,actual,residual\n", 0) == 0);
  CHECK(line_count(pred) == 62);
  // the final prediction leaves the unobserved actual as nan
  const std::size_t last_line_start = pred.rfind('\n', pred.size() - 2) + 1;
  const std::string last_line = pred.substr(last_line_start);
  CHECK(last_line.rfind("161,", 0) == 0);
  CHECK(last_line.find("nan") != std::string::npos);

  const auto tuned = run_cli({"diagnose", "--input", path_csv.string(), "--scheme",
                              "geometric:0.9", "--out", (dir / "diag2").string(),
                              "--level-mult", "3", "--max-lag", "4", "--t-min", "120"});
  CHECK(tuned.code == 0);
  CHECK(line_count(read_all(dir / "diag2" / "ci.csv")) == 42);
  fs::remove_all(dir);
}
