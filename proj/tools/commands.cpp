#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "sparsetune/errors.hpp"
#include "sparsetune/records.hpp"
#include "sparsetune/version.hpp"

namespace sparsetune::cli {

namespace fs = std::filesystem;

namespace {

unsigned resolve_workers(unsigned requested) { return requested == 0 ? default_workers() : requested; }

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Algorithm parse_algo_flag(const std::string& text) {
  const auto algo = parse_algorithm(text);
  if (!algo) throw ConfigError("unknown algorithm '" + text + "' (expected ist, iht or tst)");
  return *algo;
}

ProblemSuite suite_from_cell(const TransitionCell& c) { return c.suite; }

std::string suite_label(const ProblemSuite& s) {
  return std::string(to_string(s.matrix)) + "/" + std::string(to_string(s.coeff));
}

// ---- run-grid --------------------------------------------------------------

struct Manifest {
  std::string config_path;
  std::string output_dir;
  std::string fingerprint;
  std::string started_at;
  std::optional<std::string> finished_at;
  std::size_t completed = 0;
  std::size_t total = 0;

  Json to_json() const {
    return Json{{"config_path", config_path},
                {"output_dir", output_dir},
                {"tool_version", kToolVersion},
                {"grid_fingerprint", fingerprint},
                {"started_at", started_at},
                {"finished_at", finished_at ? Json(*finished_at) : Json(nullptr)},
                {"cells_completed", completed},
                {"cells_total", total}};
  }
};

void write_manifest(const fs::path& dir, const Manifest& m) {
  const fs::path tmp = dir / "manifest.json.tmp";
  write_text_file(tmp, m.to_json().dump(2) + "\n");
  fs::rename(tmp, dir / "manifest.json");
}

// Drops an unterminated final line left by an interrupted writer.
void truncate_partial_tail(const fs::path& csv) {
  const std::string text = read_file(csv);
  if (text.empty() || text.back() == '\n') return;
  const auto last = text.rfind('\n');
  fs::resize_file(csv, last == std::string::npos ? 0 : last + 1);
}

ExperimentGrid load_grid(const std::optional<fs::path>& config, std::optional<std::uint64_t> seed) {
  ExperimentGrid grid = config ? grid_from_json(read_json_file(*config)) : desk_scale_grid();
  if (seed) grid.base_seed = *seed;
  validate(grid);
  return grid;
}

}  // namespace

// ---- solve -----------------------------------------------------------------

int cmd_solve(const SolveOptions& opt, std::ostream& log) {
  const SensingOperator op = load_dense_matrix(opt.matrix);
  check_unit_columns(op, 1e-6);
  const Vector y = load_vector(opt.y);
  if (y.size() != op.rows()) {
    throw DimensionError("y has " + std::to_string(y.size()) + " entries but the matrix has " +
                         std::to_string(op.rows()) + " rows");
  }
  const Algorithm algo = parse_algo_flag(opt.algo);
  const double delta = opt.delta.value_or(static_cast<double>(op.rows()) / static_cast<double>(op.cols()));
  const SolverConfig cfg = recommended_config(algo, delta, opt.fast_ops);
  const SolveResult res = solve(op, y, cfg);
  const fs::path out = opt.out.empty() ? fs::path("xhat.txt") : opt.out;
  if (out.has_parent_path()) ensure_directory(out.parent_path());
  save_vector(out, res.xhat);
  log << "algo=" << to_string(algo) << " delta=" << format_real(delta) << " iterations=" << res.iterations
      << " relative_residual=" << format_real(res.final_relative_residual)
      << " converged=" << (res.converged ? "yes" : "no") << " wrote=" << out.string() << "\n";
  return kOk;
}

// ---- run-grid --------------------------------------------------------------

int cmd_run_grid(const RunGridOptions& opt, std::ostream& log, RunGridSummary* summary) {
  const ExperimentGrid grid = load_grid(opt.config, opt.seed);
  const std::string fp = fingerprint(grid);
  ensure_directory(opt.out);
  const fs::path csv = opt.out / "cells.csv";
  const fs::path manifest_path = opt.out / "manifest.json";
  const std::string canonical = to_json(grid).dump(2) + "\n";

  const auto cells = all_cells(grid);
  std::size_t completed = 0;
  Manifest manifest;
  manifest.config_path = opt.config ? opt.config->string() : std::string("<desk-scale default>");
  manifest.output_dir = opt.out.string();
  manifest.fingerprint = fp;
  manifest.total = cells.size();
  manifest.started_at = utc_now();

  if (fs::exists(csv)) {
    if (!fs::exists(manifest_path)) throw ConfigError(opt.out.string() + " has cells.csv but no manifest.json");
    const Json old = read_json_file(manifest_path);
    if (old.value("grid_fingerprint", std::string()) != fp) {
      throw ConfigError(opt.out.string() + " holds results for a different experiment (fingerprint " +
                        old.value("grid_fingerprint", std::string("?")) + ", this config " + fp + ")");
    }
    manifest.started_at = old.value("started_at", manifest.started_at);
    truncate_partial_tail(csv);
    const auto existing = read_cells_csv(csv);
    if (existing.size() > cells.size()) throw ConfigError("cells.csv has more rows than the grid has cells");
    for (std::size_t i = 0; i < existing.size(); ++i) {
      const auto& want = cells[i];
      const double d = grid.deltas[want.delta_index];
      const double r = grid.rhos_for(want.delta_index)[want.rho_index];
      if (format_real(existing[i].delta) != format_real(d) || format_real(existing[i].rho) != format_real(r)) {
        throw ConfigError("cells.csv row " + std::to_string(i + 2) + " does not match the grid order");
      }
    }
    completed = existing.size();
  } else {
    write_text_file(csv, std::string(kCellCsvHeader) + "\n");
  }
  write_text_file(opt.out / "config.json", canonical);

  std::vector<CellIndex> todo(cells.begin() + static_cast<std::ptrdiff_t>(completed), cells.end());
  if (opt.stop_after && *opt.stop_after < todo.size()) todo.resize(*opt.stop_after);

  manifest.completed = completed;
  manifest.finished_at.reset();
  write_manifest(opt.out, manifest);

  std::ofstream out(csv, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + csv.string());
  const SolverSpec spec = grid.solver;
  run_cells(
      grid, todo, [&spec](double delta) { return resolve(spec, delta); }, resolve_workers(opt.workers),
      [&](const TransitionCell& cell) {
        out << to_csv_row(cell) << '\n';
        out.flush();
        ++manifest.completed;
        write_manifest(opt.out, manifest);
      });
  if (!out) throw IoError("failed writing " + csv.string());

  if (manifest.completed == manifest.total) manifest.finished_at = utc_now();
  write_manifest(opt.out, manifest);

  const std::size_t ran = todo.size();
  log << "cells run: " << ran << ", skipped: " << completed << ", total: " << cells.size()
      << ", fingerprint: " << fp << "\n";
  if (summary) *summary = {ran, completed, cells.size()};
  return kOk;
}

// ---- fit -------------------------------------------------------------------

namespace {

struct GroupKey {
  Index N;
  double delta;
  Algorithm algo;
  std::string policy;
  double kappa;
  ProblemSuite suite;

  bool matches(const TransitionCell& c) const {
    return c.N == N && c.delta == delta && c.algo == algo && c.policy == policy && c.kappa == kappa &&
           c.suite == suite;
  }
};

Json estimate_row(const GroupKey& key) {
  return Json{{"delta", key.delta},
              {"N", key.N},
              {"algo", std::string(to_string(key.algo))},
              {"policy", key.policy},
              {"kappa", key.kappa},
              {"suite", to_json(key.suite)}};
}

}  // namespace

int cmd_fit(const FitOptions& opt, std::ostream& log) {
  const auto cells = read_cells_csv(opt.cells);
  std::vector<GroupKey> keys;
  std::vector<std::vector<TransitionCell>> groups;
  for (const auto& c : cells) {
    auto it = std::find_if(keys.begin(), keys.end(), [&](const GroupKey& k) { return k.matches(c); });
    if (it == keys.end()) {
      keys.push_back({c.N, c.delta, c.algo, c.policy, c.kappa, suite_from_cell(c)});
      groups.emplace_back();
      it = keys.end() - 1;
    }
    groups[static_cast<std::size_t>(it - keys.begin())].push_back(c);
  }

  Json doc{{"tool_version", kToolVersion},
           {"cells_fingerprint", hex64(fnv1a64(read_file(opt.cells)))},
           {"grid_fingerprint", nullptr},
           {"tol", nullptr}};
  const fs::path manifest = opt.cells.parent_path() / "manifest.json";
  const fs::path config = opt.cells.parent_path() / "config.json";
  if (fs::exists(manifest)) doc["grid_fingerprint"] = read_json_file(manifest).value("grid_fingerprint", Json());
  if (fs::exists(config)) {
    const Json grid = read_json_file(config);
    if (grid.contains("tol")) doc["tol"] = grid["tol"];
  }

  Json rows = Json::array();
  std::size_t undefined = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Json row = estimate_row(keys[g]);
    try {
      const TransitionEstimate est = fit_logistic(groups[g]);
      row["status"] = "ok";
      const Json fitted = to_json(est);
      for (auto& [k, v] : fitted.items()) row[k] = v;
      log << "delta=" << format_real(keys[g].delta) << " " << to_string(keys[g].algo) << " "
          << suite_label(keys[g].suite) << ": rho*=" << format_real(est.rho_star) << " (" << to_string(est.method)
          << ")\n";
    } catch (const EstimateUndefinedError& e) {
      row["status"] = "undefined";
      row["error"] = e.what();
      ++undefined;
      log << "delta=" << format_real(keys[g].delta) << " " << to_string(keys[g].algo) << ": estimate undefined\n";
    }
    rows.push_back(std::move(row));
  }
  doc["estimates"] = std::move(rows);

  const fs::path out = opt.out.empty() ? opt.cells.parent_path() / "estimates.json" : opt.out;
  if (out.has_parent_path()) ensure_directory(out.parent_path());
  write_text_file(out, doc.dump(2) + "\n");
  log << "wrote " << out.string() << " (" << groups.size() - undefined << " fitted, " << undefined
      << " undefined)\n";
  return undefined == 0 ? kOk : kPartialFailure;
}

// ---- tune ------------------------------------------------------------------

int cmd_tune(const TuneOptions& opt, std::ostream& log) {
  const Json cfg = read_json_file(opt.config);
  std::vector<std::string> problems;
  ExperimentGrid base = grid_from_json(cfg, problems);
  std::vector<SolverConfig> thetas;
  if (const auto it = cfg.find("theta_grid"); it != cfg.end() && it->is_array() && !it->empty()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      thetas.push_back(solver_config_from_json((*it)[i], "theta_grid[" + std::to_string(i) + "]", problems));
    }
  } else {
    problems.push_back("theta_grid: missing or empty");
  }
  std::vector<ProblemSuite> suites{base.suite};
  if (opt.maximin) {
    suites.clear();
    if (const auto it = cfg.find("suites"); it != cfg.end() && it->is_array()) {
      for (std::size_t i = 0; i < it->size(); ++i) {
        suites.push_back(suite_from_json((*it)[i], "suites[" + std::to_string(i) + "]", problems));
      }
    }
    if (suites.empty()) problems.push_back("suites: --maximin needs a non-empty suite list");
  }
  if (!problems.empty()) {
    std::string msg = "config schema violations:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  if (opt.seed) base.base_seed = *opt.seed;
  if (std::holds_alternative<RecommendedSolver>(base.solver) && !cfg.contains("solver")) {
    base.solver = thetas.front();
  }

  std::vector<ExperimentGrid> grids;
  for (const auto& s : suites) {
    ExperimentGrid g = base;
    g.suite = s;
    validate(g);
    grids.push_back(std::move(g));
  }
  const unsigned workers = resolve_workers(opt.workers);

  Json theta_json = Json::array();
  for (const auto& t : thetas) theta_json.push_back(to_json(t));
  Json suites_json = Json::array();
  for (const auto& s : suites) suites_json.push_back(to_json(s));

  Json results = Json::array();
  Json flat = Json::array();
  std::size_t failed = 0;
  for (double delta : base.deltas) {
    Json entry{{"delta", delta}};
    try {
      const MaximinResult mm = maximin_tune(grids, delta, thetas, workers);
      entry["status"] = "ok";
      entry["winner_index"] = mm.winner;
      entry["winner"] = to_json(mm.config);
      entry["winner_worst_rho_star"] = *mm.worst_rho[mm.winner];
      Json matrix = Json::array();
      for (std::size_t t = 0; t < thetas.size(); ++t) {
        Json row = Json::array();
        for (std::size_t s = 0; s < suites.size(); ++s) {
          Json e = Json{{"theta_index", t}, {"suite", to_json(suites[s])}};
          if (mm.estimates[t][s]) {
            e["status"] = "ok";
            const Json fitted = to_json(*mm.estimates[t][s]);
            for (auto& [k, v] : fitted.items()) e[k] = v;
          } else {
            e["status"] = "undefined";
          }
          row.push_back(e);

          Json f = Json{{"delta", delta},
                        {"N", base.N},
                        {"algo", std::string(to_string(thetas[t].algo))},
                        {"policy", describe(thetas[t].policy)},
                        {"kappa", thetas[t].kappa},
                        {"suite", to_json(suites[s])},
                        {"theta_index", t}};
          for (auto& [k, v] : e.items())
            if (k != "suite" && k != "theta_index") f[k] = v;
          flat.push_back(std::move(f));
        }
        matrix.push_back(std::move(row));
      }
      entry["estimates"] = std::move(matrix);
      Json least = Json::array();
      for (const auto& lf : mm.least_favorable) {
        least.push_back(lf ? Json(suite_label(suites[*lf])) : Json(nullptr));
      }
      entry["least_favorable"] = std::move(least);
      log << "delta=" << format_real(delta) << ": winner theta[" << mm.winner << "] " << to_string(mm.config.algo)
          << " kappa=" << format_real(mm.config.kappa) << " " << describe(mm.config.policy)
          << " rho*=" << format_real(*mm.worst_rho[mm.winner]);
      if (opt.maximin && mm.least_favorable[mm.winner]) {
        log << " least-favorable=" << suite_label(suites[*mm.least_favorable[mm.winner]]);
      }
      log << "\n";
    } catch (const TuningFailedError& e) {
      entry["status"] = "failed";
      entry["error"] = e.what();
      ++failed;
      log << "delta=" << format_real(delta) << ": " << e.what() << "\n";
    }
    results.push_back(std::move(entry));
  }

  ensure_directory(opt.out);
  const Json doc{{"tool_version", kToolVersion},
                 {"grid_fingerprint", fingerprint(grids.front())},
                 {"maximin", opt.maximin},
                 {"N", base.N},
                 {"tol", base.tol},
                 {"theta_grid", theta_json},
                 {"suites", suites_json},
                 {"results", results}};
  write_text_file(opt.out / "tune.json", doc.dump(2) + "\n");
  const Json estimates{{"tool_version", kToolVersion},
                       {"grid_fingerprint", fingerprint(grids.front())},
                       {"tol", base.tol},
                       {"estimates", flat}};
  write_text_file(opt.out / "estimates.json", estimates.dump(2) + "\n");
  log << "wrote " << (opt.out / "tune.json").string() << "\n";
  return failed == 0 ? kOk : kPartialFailure;
}

// ---- time ------------------------------------------------------------------

int cmd_time(const TimeOptions& in, std::ostream& log) {
  TimeOptions opt = in;
  std::string matrix_tag;
  if (opt.config) {
    const Json cfg = read_json_file(*opt.config);
    std::vector<std::string> problems;
    for (const auto& [key, value] : cfg.items()) {
      if (key == "sizes" && value.is_array()) {
        opt.sizes.clear();
        for (const auto& s : value) opt.sizes.push_back(s.get<long>());
      } else if (key == "delta" && value.is_number()) {
        opt.delta = value.get<double>();
      } else if (key == "rho" && value.is_number()) {
        opt.rho = value.get<double>();
      } else if (key == "algo" && value.is_string()) {
        opt.algo = value.get<std::string>();
      } else if (key == "fast_ops" && value.is_boolean()) {
        opt.fast_ops = value.get<bool>();
      } else if (key == "reps" && value.is_number_integer()) {
        opt.reps = value.get<int>();
      } else if (key == "seed" && value.is_number_integer()) {
        opt.seed = value.get<std::uint64_t>();
      } else if (key == "matrix" && value.is_string()) {
        matrix_tag = value.get<std::string>();
      } else {
        problems.push_back(key + ": unknown field or wrong type");
      }
    }
    if (!problems.empty()) {
      std::string msg = "timing config schema violations:";
      for (const auto& p : problems) msg += "\n  - " + p;
      throw ConfigError(msg);
    }
  }
  if (opt.sizes.empty()) throw ConfigError("no problem sizes given");
  if (opt.reps < 1) throw ConfigError("reps must be >= 1");
  if (!(opt.delta > 0 && opt.delta <= 1) || !(opt.rho > 0 && opt.rho < 1)) {
    throw ConfigError("delta must lie in (0,1] and rho in (0,1)");
  }
  const Algorithm algo = parse_algo_flag(opt.algo);
  ProblemSuite suite{opt.fast_ops ? MatrixEnsemble::PartialFourier1D : MatrixEnsemble::USE, CoefficientEnsemble::CARS};
  if (!matrix_tag.empty()) {
    const auto m = parse_matrix_ensemble(matrix_tag);
    if (!m) throw ConfigError("unknown matrix ensemble '" + matrix_tag + "'");
    suite.matrix = *m;
  }
  SolverConfig cfg = recommended_config(algo, opt.delta, opt.fast_ops);
  cfg.residual_stop = kTimingResidualStop;

  std::ostringstream csv;
  csv << "N,delta,rho,algo,suite,mean_seconds,mean_iterations\n";
  for (long N : opt.sizes) {
    const Index n = ceil_ratio(opt.delta, N);
    const Index k = ceil_ratio(opt.rho, n);
    double seconds = 0.0;
    double iterations = 0.0;
    for (int rep = 0; rep < opt.reps; ++rep) {
      const ProblemInstance inst =
          generate_instance(suite, n, N, k, derive_seed(derive_seed(opt.seed, static_cast<std::uint64_t>(N)),
                                                        static_cast<std::uint64_t>(rep)));
      const auto t0 = std::chrono::steady_clock::now();
      const SolveResult res = solve(inst.op, inst.y, cfg);
      seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      iterations += res.iterations;
    }
    csv << N << "," << format_real(opt.delta) << "," << format_real(opt.rho) << "," << to_string(algo) << ","
        << suite_label(suite) << "," << format_real(seconds / opt.reps) << "," << format_real(iterations / opt.reps)
        << "\n";
    log << "N=" << N << " " << to_string(algo) << " mean_seconds=" << format_real(seconds / opt.reps)
        << " mean_iterations=" << format_real(iterations / opt.reps) << "\n";
  }
  const fs::path out = opt.out.empty() ? fs::path("timing.csv") : opt.out;
  if (out.has_parent_path()) ensure_directory(out.parent_path());
  write_text_file(out, csv.str());
  return kOk;
}

// ---- report ----------------------------------------------------------------

int cmd_report(const ReportOptions& opt, std::ostream& log) {
  if (opt.inputs.empty()) throw ConfigError("report needs at least one estimates file");

  struct Point {
    double delta;
    double rho_star;
    std::string method;
    std::string policy;
  };
  // Keyed by (algo, suite label) in first-seen order.
  std::vector<std::pair<std::string, std::string>> curve_keys;
  std::map<std::pair<std::string, std::string>, std::vector<Point>> curves;
  std::optional<Json> common_N;
  std::optional<Json> common_tol;
  std::string N_source, tol_source;

  for (const auto& path : opt.inputs) {
    const Json doc = read_json_file(path);
    if (!doc.contains("estimates") || !doc["estimates"].is_array()) {
      throw ConfigError(path.string() + ": not an estimates document");
    }
    if (doc.contains("tol") && !doc["tol"].is_null()) {
      if (common_tol && *common_tol != doc["tol"]) {
        throw ConfigError("refusing to merge: tol " + doc["tol"].dump() + " in " + path.string() + " differs from " +
                          common_tol->dump() + " in " + tol_source);
      }
      common_tol = doc["tol"];
      tol_source = path.string();
    }
    for (const auto& e : doc["estimates"]) {
      if (e.value("status", std::string()) != "ok") continue;
      const Json N = e.at("N");
      if (common_N && *common_N != N) {
        throw ConfigError("refusing to merge: N=" + N.dump() + " in " + path.string() + " differs from N=" +
                          common_N->dump() + " in " + N_source);
      }
      common_N = N;
      N_source = path.string();
      const std::string algo = e.at("algo").get<std::string>();
      const std::string suite =
          e.at("suite").at("matrix").get<std::string>() + "/" + e.at("suite").at("coeff").get<std::string>();
      const auto key = std::make_pair(algo, suite);
      if (!curves.contains(key)) curve_keys.push_back(key);
      auto& pts = curves[key];
      const double delta = e.at("delta").get<double>();
      if (std::none_of(pts.begin(), pts.end(), [&](const Point& p) { return p.delta == delta; })) {
        pts.push_back({delta, e.at("rho_star").get<double>(), e.value("method", std::string()),
                       e.value("policy", std::string())});
      }
    }
  }

  ensure_directory(opt.out);
  for (const auto& key : curve_keys) {
    auto& pts = curves[key];
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.delta < b.delta; });
    std::string name = "curve_" + key.first + "_" + key.second + ".tsv";
    std::replace(name.begin(), name.end(), '/', '_');
    std::ostringstream tsv;
    tsv << "delta\trho_star\tmethod\tpolicy\n";
    for (const auto& p : pts) {
      tsv << format_real(p.delta) << "\t" << format_real(p.rho_star) << "\t" << p.method << "\t" << p.policy << "\n";
    }
    write_text_file(opt.out / name, tsv.str());
    log << "wrote " << (opt.out / name).string() << "\n";
  }

  // Ordering of algorithms at every delta shared by two or more curves of one suite.
  std::ostringstream ordering;
  std::vector<std::string> suites;
  for (const auto& key : curve_keys)
    if (std::find(suites.begin(), suites.end(), key.second) == suites.end()) suites.push_back(key.second);
  for (const auto& suite : suites) {
    std::map<double, std::vector<std::pair<double, std::string>>> at;
    for (const auto& key : curve_keys) {
      if (key.second != suite) continue;
      for (const auto& p : curves[key]) at[p.delta].emplace_back(p.rho_star, key.first);
    }
    for (auto& [delta, entries] : at) {
      if (entries.size() < 2) continue;
      std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      ordering << suite << " delta=" << format_real(delta) << ": ";
      for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0) ordering << (entries[i - 1].first == entries[i].first ? " = " : " > ");
        ordering << entries[i].second;
      }
      ordering << "\n";
    }
  }
  write_text_file(opt.out / "ordering.txt", ordering.str());
  log << ordering.str();
  return kOk;
}

// ---- argument parsing ------------------------------------------------------

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tuned iterative thresholding for sparse recovery, with phase-transition tooling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  fs::path default_root = ".";
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) default_root = env;

  SolveOptions solve_opt;
  std::optional<double> solve_delta;
  auto* solve_cmd = app.add_subcommand("solve", "Solve y = Ax with a recommended configuration");
  solve_cmd->add_option("--matrix", solve_opt.matrix, "Matrix file: 'n N' header then column-major reals")
      ->required();
  solve_cmd->add_option("--y", solve_opt.y, "Measurements, one real per line")->required();
  solve_cmd->add_option("--algo", solve_opt.algo, "ist, iht or tst")->capture_default_str();
  solve_cmd->add_option("--delta", solve_delta, "Override delta = n/N when picking parameters");
  solve_cmd->add_flag("--fast-ops", solve_opt.fast_ops, "Use the partial-Fourier parameter tables");
  solve_cmd->add_option("--out", solve_opt.out, "Solution file (default $SPARSETUNE_OUT/xhat.txt)");

  RunGridOptions grid_opt;
  std::string grid_config;
  std::uint64_t grid_seed = 0;
  std::size_t stop_after = 0;
  auto* grid_cmd = app.add_subcommand("run-grid", "Run a Monte Carlo (delta, rho) grid; resumable");
  grid_cmd->add_option("--config", grid_config, "Experiment config JSON (default: desk-scale grid)");
  grid_cmd->add_option("--out", grid_opt.out, "Output directory (default $SPARSETUNE_OUT/grid)");
  grid_cmd->add_option("--workers", grid_opt.workers, "Worker threads (default: all cores)");
  auto* grid_seed_opt = grid_cmd->add_option("--seed", grid_seed, "Override base_seed");
  auto* stop_opt = grid_cmd->add_option("--stop-after", stop_after, "Stop after this many new cells");

  FitOptions fit_opt;
  auto* fit_cmd = app.add_subcommand("fit", "Fit logistic transitions to a cells CSV");
  fit_cmd->add_option("cells", fit_opt.cells, "cells.csv from run-grid")->required();
  fit_cmd->add_option("--out", fit_opt.out, "Estimates JSON (default: next to the CSV)");

  TuneOptions tune_opt;
  std::uint64_t tune_seed = 0;
  auto* tune_cmd = app.add_subcommand("tune", "Pick the parameter vector with the highest transition");
  tune_cmd->add_option("--config", tune_opt.config, "Config JSON with theta_grid (and suites)")->required();
  tune_cmd->add_option("--out", tune_opt.out, "Output directory (default $SPARSETUNE_OUT/tune)");
  tune_cmd->add_flag("--maximin", tune_opt.maximin, "Maximize the worst transition over the config's suites");
  tune_cmd->add_option("--workers", tune_opt.workers, "Worker threads (default: all cores)");
  auto* tune_seed_opt = tune_cmd->add_option("--seed", tune_seed, "Override base_seed");

  TimeOptions time_opt;
  std::string time_config;
  auto* time_cmd = app.add_subcommand("time", "Average solve time to relative residual 1e-3");
  time_cmd->add_option("--config", time_config, "Timing config JSON");
  time_cmd->add_option("--sizes", time_opt.sizes, "Problem sizes N")->delimiter(',');
  time_cmd->add_option("--delta", time_opt.delta)->capture_default_str();
  time_cmd->add_option("--rho", time_opt.rho)->capture_default_str();
  time_cmd->add_option("--algo", time_opt.algo)->capture_default_str();
  time_cmd->add_flag("--fast-ops", time_opt.fast_ops, "Partial Fourier operators and tables");
  time_cmd->add_option("--reps", time_opt.reps)->capture_default_str();
  time_cmd->add_option("--seed", time_opt.seed)->capture_default_str();
  time_cmd->add_option("--out", time_opt.out, "Timing CSV (default $SPARSETUNE_OUT/timing.csv)");

  ReportOptions report_opt;
  auto* report_cmd = app.add_subcommand("report", "Write (delta, rho*) curve files and an ordering summary");
  report_cmd->add_option("inputs", report_opt.inputs, "Estimates JSON files")->required();
  report_cmd->add_option("--out", report_opt.out, "Output directory (default $SPARSETUNE_OUT/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*solve_cmd) {
      solve_opt.delta = solve_delta;
      if (solve_opt.out.empty()) solve_opt.out = default_root / "xhat.txt";
      return cmd_solve(solve_opt, out);
    }
    if (*grid_cmd) {
      if (!grid_config.empty()) grid_opt.config = grid_config;
      if (*grid_seed_opt) grid_opt.seed = grid_seed;
      if (*stop_opt) grid_opt.stop_after = stop_after;
      if (grid_opt.out.empty()) grid_opt.out = default_root / "grid";
      return cmd_run_grid(grid_opt, out);
    }
    if (*fit_cmd) return cmd_fit(fit_opt, out);
    if (*tune_cmd) {
      if (*tune_seed_opt) tune_opt.seed = tune_seed;
      if (tune_opt.out.empty()) tune_opt.out = default_root / "tune";
      return cmd_tune(tune_opt, out);
    }
    if (*time_cmd) {
      if (!time_config.empty()) time_opt.config = time_config;
      if (time_opt.out.empty()) time_opt.out = default_root / "timing.csv";
      return cmd_time(time_opt, out);
    }
    if (*report_cmd) {
      if (report_opt.out.empty()) report_opt.out = default_root / "report";
      return cmd_report(report_opt, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.error_class()) {
      case ErrorClass::config: return kConfigError;
      case ErrorClass::io: return kIoError;
      case ErrorClass::numeric: return kNumericError;
    }
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const Json::exception& e) {
    err << "error: malformed JSON document: " << e.what() << "\n";
    return kConfigError;
  }
  return kUsage;
}

}  // namespace sparsetune::cli
