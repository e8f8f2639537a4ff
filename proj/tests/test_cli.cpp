#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "sparsetune/records.hpp"
#include "sparsetune/suites.hpp"
#include "sparsetune/version.hpp"

using namespace sparsetune;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sparsetune_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "sparsetune");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Stores a 50 x 100 USE instance with a 3-sparse CARS signal.
ProblemInstance store_instance(const fs::path& dir) {
  auto inst = generate_instance(kStandardSuite, 50, 100, 3, 2024);
  save_dense_matrix(dir / "A.txt", inst.op.matrix());
  save_vector(dir / "y.txt", inst.y);
  return inst;
}

// A small grid that runs in well under a second.
Json small_grid() {
  ExperimentGrid g;
  g.N = 100;
  g.deltas = {0.3, 0.5};
  g.rhos = {{0.01, 0.1, 0.3, 0.6}};
  g.M = 6;
  g.base_seed = 5;
  g.solver = RecommendedSolver{Algorithm::IHT, false};
  return to_json(g);
}

}  // namespace

TEST(Cli, SolveEachAlgorithm) {
  const auto dir = scratch("solve");
  const auto inst = store_instance(dir);
  for (std::string algo : {"tst", "iht", "ist"}) {
    const auto out = dir / ("xhat_" + algo + ".txt");
    const auto r = invoke({"solve", "--matrix", (dir / "A.txt").string(), "--y", (dir / "y.txt").string(), "--algo",
                           algo, "--out", out.string()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(r.out.find("iterations="), std::string::npos);
    EXPECT_LE(relative_error(inst.x0, load_vector(out)), 1e-2) << algo;
  }
}

TEST(Cli, SolveWrongLengthY) {
  const auto dir = scratch("solve_bad");
  store_instance(dir);
  write_text_file(dir / "short.txt", "1\n2\n3\n");
  const auto r = invoke({"solve", "--matrix", (dir / "A.txt").string(), "--y", (dir / "short.txt").string()});
  EXPECT_EQ(r.code, cli::kConfigError);
  EXPECT_NE(r.err.find("dimension"), std::string::npos);
}

TEST(Cli, SolveBadlyScaledMatrix) {
  const auto dir = scratch("solve_scale");
  auto inst = store_instance(dir);
  Matrix a = inst.op.matrix();
  a.col(17) *= 3.0;
  save_dense_matrix(dir / "A.txt", a);
  const auto r = invoke({"solve", "--matrix", (dir / "A.txt").string(), "--y", (dir / "y.txt").string()});
  EXPECT_EQ(r.code, cli::kNumericError);
  EXPECT_NE(r.err.find("column 17"), std::string::npos);
}

TEST(Cli, MissingFileIsIoError) {
  const auto r = invoke({"solve", "--matrix", "/nonexistent/A.txt", "--y", "/nonexistent/y.txt"});
  EXPECT_EQ(r.code, cli::kIoError);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, cli::kUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"--help"}).code, cli::kOk);
}

TEST(Cli, DeskGridRowCountAndResume) {
  const auto dir = scratch("desk");
  auto r = invoke({"run-grid", "--out", dir.string(), "--workers", "2"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(line_count(dir / "cells.csv"), 81u);
  EXPECT_NE(r.out.find("cells run: 80, skipped: 0"), std::string::npos);
  const Json manifest = read_json_file(dir / "manifest.json");
  EXPECT_EQ(manifest["cells_completed"], 80);
  EXPECT_FALSE(manifest["finished_at"].is_null());
  EXPECT_EQ(manifest["tool_version"], kToolVersion);

  r = invoke({"run-grid", "--out", dir.string()});
  ASSERT_EQ(r.code, cli::kOk);
  EXPECT_NE(r.out.find("cells run: 0, skipped: 80, total: 80"), std::string::npos);
}

TEST(Cli, InterruptThenResume) {
  const auto dir = scratch("resume");
  const auto ref = scratch("resume_ref");
  write_text_file(dir / "grid.json", small_grid().dump());
  const std::string cfg = (dir / "grid.json").string();

  cli::RunGridOptions opt;
  opt.config = cfg;
  opt.out = dir / "run";
  opt.workers = 2;
  opt.stop_after = 3;
  cli::RunGridSummary summary;
  std::ostringstream log;
  ASSERT_EQ(cli::cmd_run_grid(opt, log, &summary), cli::kOk);
  EXPECT_EQ(summary.run, 3u);
  EXPECT_TRUE(read_json_file(dir / "run" / "manifest.json")["finished_at"].is_null());

  // Simulate a kill in the middle of a row write.
  {
    std::ofstream tail(dir / "run" / "cells.csv", std::ios::app);
    tail << "0.5,0.1,50";
  }
  opt.stop_after.reset();
  ASSERT_EQ(cli::cmd_run_grid(opt, log, &summary), cli::kOk);
  EXPECT_EQ(summary.run, 5u);
  EXPECT_EQ(summary.skipped, 3u);

  opt.out = ref;
  ASSERT_EQ(cli::cmd_run_grid(opt, log, &summary), cli::kOk);
  EXPECT_EQ(slurp(dir / "run" / "cells.csv"), slurp(ref / "cells.csv"));
}

TEST(Cli, ResumeRefusesDifferentConfig) {
  const auto dir = scratch("mismatch");
  write_text_file(dir / "grid.json", small_grid().dump());
  ASSERT_EQ(invoke({"run-grid", "--config", (dir / "grid.json").string(), "--out", (dir / "run").string()}).code,
            cli::kOk);
  const auto r = invoke({"run-grid", "--config", (dir / "grid.json").string(), "--out", (dir / "run").string(),
                         "--seed", "77"});
  EXPECT_EQ(r.code, cli::kConfigError);
  EXPECT_NE(r.err.find("fingerprint"), std::string::npos);
}

TEST(Cli, BadConfigListsProblems) {
  const auto dir = scratch("badcfg");
  Json j = small_grid();
  j["M"] = 0;
  j["deltas"] = {0.5, 1.5};
  write_text_file(dir / "grid.json", j.dump());
  const auto r = invoke({"run-grid", "--config", (dir / "grid.json").string(), "--out", (dir / "run").string()});
  EXPECT_EQ(r.code, cli::kConfigError);
  EXPECT_NE(r.err.find("M"), std::string::npos);
  EXPECT_NE(r.err.find("deltas"), std::string::npos);
}

TEST(Cli, FitIsByteStableAndFlagsUndefinedRows) {
  const auto dir = scratch("fit");
  write_text_file(dir / "grid.json", small_grid().dump());
  ASSERT_EQ(invoke({"run-grid", "--config", (dir / "grid.json").string(), "--out", (dir / "run").string()}).code,
            cli::kOk);

  // Force the delta = 0.3 row to be all-success.
  auto cells = read_cells_csv(dir / "run" / "cells.csv");
  std::string csv = std::string(kCellCsvHeader) + "\n";
  for (auto& c : cells) {
    if (c.delta == 0.3) c.S = c.M;
    csv += to_csv_row(c) + "\n";
  }
  write_text_file(dir / "run" / "cells.csv", csv);

  const auto first = invoke({"fit", (dir / "run" / "cells.csv").string(), "--out", (dir / "a.json").string()});
  const auto second = invoke({"fit", (dir / "run" / "cells.csv").string(), "--out", (dir / "b.json").string()});
  EXPECT_EQ(first.code, cli::kPartialFailure);
  EXPECT_EQ(second.code, cli::kPartialFailure);
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));

  const Json doc = read_json_file(dir / "a.json");
  ASSERT_EQ(doc["estimates"].size(), 2u);
  EXPECT_EQ(doc["estimates"][0]["status"], "undefined");
  EXPECT_EQ(doc["estimates"][1]["status"], "ok");
  EXPECT_EQ(doc["grid_fingerprint"], read_json_file(dir / "run" / "manifest.json")["grid_fingerprint"]);
  EXPECT_EQ(doc["tool_version"], kToolVersion);
}

TEST(Cli, FitMalformedCsv) {
  const auto dir = scratch("fit_bad");
  write_text_file(dir / "cells.csv", std::string(kCellCsvHeader) + "\n0.5,0.1,oops\n");
  const auto r = invoke({"fit", (dir / "cells.csv").string()});
  EXPECT_EQ(r.code, cli::kIoError);
  EXPECT_NE(r.err.find(":2:"), std::string::npos);
}

TEST(Cli, ReportOrderingAndCurves) {
  const auto dir = scratch("report");
  auto est = [&](const std::string& name, const std::string& algo, double rho, Index N) {
    Json e{{"delta", 0.5}, {"N", N},           {"algo", algo},          {"policy", "p"},
           {"kappa", 1.0}, {"rho_star", rho},  {"method", "logistic"},  {"status", "ok"},
           {"suite", {{"matrix", "USE"}, {"coeff", "CARS"}}}};
    write_text_file(dir / name, Json{{"tol", 0.01}, {"estimates", Json::array({e})}}.dump());
  };
  est("ist.json", "IST", 0.22, 400);
  est("iht.json", "IHT", 0.28, 400);
  est("tst.json", "TST", 0.33, 400);
  auto r = invoke({"report", (dir / "ist.json").string(), (dir / "iht.json").string(), (dir / "tst.json").string(),
                   "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(slurp(dir / "out" / "ordering.txt"), "USE/CARS delta=0.5: TST > IHT > IST\n");
  EXPECT_TRUE(fs::exists(dir / "out" / "curve_TST_USE_CARS.tsv"));

  r = invoke({"report", (dir / "tst.json").string(), "--out", (dir / "single").string()});
  ASSERT_EQ(r.code, cli::kOk);
  std::size_t curves = 0;
  for (const auto& entry : fs::directory_iterator(dir / "single"))
    curves += entry.path().filename().string().starts_with("curve_");
  EXPECT_EQ(curves, 1u);

  est("other_n.json", "IHT", 0.3, 800);
  r = invoke({"report", (dir / "ist.json").string(), (dir / "other_n.json").string(), "--out",
              (dir / "bad").string()});
  EXPECT_EQ(r.code, cli::kConfigError);
  EXPECT_NE(r.err.find("N="), std::string::npos);
}

TEST(Cli, TimeWritesCsv) {
  const auto dir = scratch("time");
  const auto r = invoke({"time", "--sizes", "128,256", "--algo", "tst", "--fast-ops", "--delta", "0.25", "--rho",
                         "0.1", "--reps", "2", "--out", (dir / "t.csv").string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const std::string csv = slurp(dir / "t.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "N,delta,rho,algo,suite,mean_seconds,mean_iterations");
  EXPECT_EQ(line_count(dir / "t.csv"), 3u);
}

TEST(Cli, TuneWritesWinnersAndEstimates) {
  const auto dir = scratch("tune");
  Json cfg = small_grid();
  cfg["deltas"] = {0.5};
  cfg["rhos"] = {0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  cfg["M"] = 8;
  cfg.erase("solver");
  cfg["theta_grid"] = Json::array({to_json(SolverConfig{Algorithm::IST, 0.6, FarPolicy{0.1}}),
                                   to_json(SolverConfig{Algorithm::IST, 0.6, FarPolicy{0.2}})});
  cfg["suites"] = Json::array({Json{{"matrix", "USE"}, {"coeff", "CARS"}}, Json{{"matrix", "USE"}, {"coeff", "UniformSym"}}});
  write_text_file(dir / "tune.json", cfg.dump());
  auto r = invoke({"tune", "--config", (dir / "tune.json").string(), "--out", (dir / "out").string(), "--maximin"});
  ASSERT_EQ(r.code, cli::kOk) << r.err << r.out;
  const Json doc = read_json_file(dir / "out" / "tune.json");
  EXPECT_EQ(doc["results"][0]["status"], "ok");
  EXPECT_EQ(doc["results"][0]["estimates"].size(), 2u);
  EXPECT_EQ(read_json_file(dir / "out" / "estimates.json")["estimates"].size(), 4u);

  cfg.erase("suites");
  write_text_file(dir / "tune.json", cfg.dump());
  r = invoke({"tune", "--config", (dir / "tune.json").string(), "--out", (dir / "out2").string(), "--maximin"});
  EXPECT_EQ(r.code, cli::kConfigError);
}

TEST(Cli, OutputRootFromEnvironment) {
  const auto dir = scratch("env");
  store_instance(dir);
  setenv(cli::kOutputRootEnv, (dir / "root").string().c_str(), 1);
  const auto r = invoke({"solve", "--matrix", (dir / "A.txt").string(), "--y", (dir / "y.txt").string()});
  unsetenv(cli::kOutputRootEnv);
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "root" / "xhat.txt"));
}
