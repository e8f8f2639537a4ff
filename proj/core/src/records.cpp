#include "sparsetune/records.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "sparsetune/errors.hpp"
#include "sparsetune/version.hpp"

namespace sparsetune {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string join_where(const std::string& where, std::string_view key) {
  return where.empty() ? std::string(key) : where + "." + std::string(key);
}

std::optional<double> get_real(const Json& j, std::string_view key, const std::string& where,
                               std::vector<std::string>& problems, bool required) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (required) problems.push_back(join_where(where, key) + ": missing");
    return std::nullopt;
  }
  if (!it->is_number()) {
    problems.push_back(join_where(where, key) + ": expected a number");
    return std::nullopt;
  }
  return it->get<double>();
}

std::optional<std::int64_t> get_int(const Json& j, std::string_view key, const std::string& where,
                                    std::vector<std::string>& problems, bool required) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (required) problems.push_back(join_where(where, key) + ": missing");
    return std::nullopt;
  }
  if (!it->is_number_integer()) {
    problems.push_back(join_where(where, key) + ": expected an integer");
    return std::nullopt;
  }
  return it->get<std::int64_t>();
}

std::optional<std::string> get_string(const Json& j, std::string_view key, const std::string& where,
                                      std::vector<std::string>& problems, bool required) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (required) problems.push_back(join_where(where, key) + ": missing");
    return std::nullopt;
  }
  if (!it->is_string()) {
    problems.push_back(join_where(where, key) + ": expected a string");
    return std::nullopt;
  }
  return it->get<std::string>();
}

void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> allowed, const std::string& where,
                         std::vector<std::string>& problems) {
  const std::set<std::string_view> ok(allowed);
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) problems.push_back(join_where(where, key) + ": unknown field");
  }
}

std::vector<double> real_list(const Json& j, const std::string& where, std::vector<std::string>& problems) {
  std::vector<double> out;
  if (!j.is_array()) {
    problems.push_back(where + ": expected an array of numbers");
    return out;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      problems.push_back(where + "[" + std::to_string(i) + "]: expected a number");
    } else {
      out.push_back(j[i].get<double>());
    }
  }
  return out;
}

[[noreturn]] void throw_problems(const std::string& title, const std::vector<std::string>& problems) {
  std::string msg = title;
  for (const auto& p : problems) msg += "\n  - " + p;
  throw ConfigError(msg);
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json to_json(const ThresholdPolicy& policy) {
  return std::visit(overloaded{
                        [](const FarPolicy& p) { return Json{{"type", "FAR"}, {"far", p.far}}; },
                        [](const OracleKPolicy& p) {
                          Json j{{"type", "OracleK"}, {"alpha", p.alpha}, {"beta", p.beta}};
                          if (p.k) j["k"] = *p.k;
                          return j;
                        },
                        [](const FixedRhoPolicy& p) {
                          return Json{{"type", "FixedRho"}, {"rho_star", p.rho_star}, {"alpha", p.alpha},
                                      {"beta", p.beta}};
                        },
                    },
                    policy);
}

Json to_json(const SolverConfig& cfg) {
  return Json{{"algo", std::string(to_string(cfg.algo))},
              {"kappa", cfg.kappa},
              {"policy", to_json(cfg.policy)},
              {"max_iter", cfg.max_iter},
              {"residual_stop", cfg.residual_stop}};
}

Json to_json(const SolverSpec& spec) {
  if (const auto* rec = std::get_if<RecommendedSolver>(&spec)) {
    return Json{{"recommended", std::string(to_string(rec->algo))}, {"fast_ops", rec->fast_ops}};
  }
  return to_json(std::get<SolverConfig>(spec));
}

Json to_json(const ProblemSuite& suite) {
  return Json{{"matrix", std::string(to_string(suite.matrix))}, {"coeff", std::string(to_string(suite.coeff))}};
}

Json to_json(const ExperimentGrid& grid) {
  Json rhos = Json::array();
  if (grid.rhos.size() == 1) {
    rhos = grid.rhos.front();
  } else {
    for (const auto& r : grid.rhos) rhos.push_back(r);
  }
  return Json{{"schema_version", kConfigSchemaVersion},
              {"N", grid.N},
              {"deltas", grid.deltas},
              {"rhos", rhos},
              {"M", grid.M},
              {"tol", grid.tol},
              {"base_seed", grid.base_seed},
              {"suite", to_json(grid.suite)},
              {"fresh_operator", grid.fresh_operator},
              {"solver", to_json(grid.solver)}};
}

Json to_json(const TransitionEstimate& est) {
  return Json{{"delta", est.delta},
              {"a_hat", est.a_hat},
              {"b_hat", est.b_hat},
              {"rho_star", est.rho_star},
              {"method", std::string(to_string(est.method))},
              {"cells_used", est.cells_used},
              {"extrapolated", est.extrapolated}};
}

ThresholdPolicy policy_from_json(const Json& j, const std::string& where, std::vector<std::string>& problems) {
  if (!j.is_object()) {
    problems.push_back(where + ": expected an object");
    return FarPolicy{};
  }
  const auto type = get_string(j, "type", where, problems, true);
  if (!type) return FarPolicy{};
  if (*type == "FAR") {
    reject_unknown_keys(j, {"type", "far"}, where, problems);
    const auto far = get_real(j, "far", where, problems, true);
    if (far && !(*far > 0.0 && *far < 1.0)) problems.push_back(where + ".far: must lie in (0,1)");
    return FarPolicy{far.value_or(0.01)};
  }
  if (*type == "OracleK" || *type == "FixedRho") {
    const auto alpha = get_real(j, "alpha", where, problems, false).value_or(1.0);
    const auto beta = get_real(j, "beta", where, problems, false).value_or(1.0);
    if (alpha < 1.0) problems.push_back(where + ".alpha: must be >= 1");
    if (beta < 1.0) problems.push_back(where + ".beta: must be >= 1");
    if (*type == "OracleK") {
      reject_unknown_keys(j, {"type", "k", "alpha", "beta"}, where, problems);
      OracleKPolicy p{std::nullopt, alpha, beta};
      if (const auto it = j.find("k"); it != j.end() && !(it->is_string() && *it == "true")) {
        const auto k = get_int(j, "k", where, problems, true);
        if (k && *k < 1) problems.push_back(where + ".k: must be >= 1");
        if (k) p.k = static_cast<Index>(*k);
      }
      return p;
    }
    reject_unknown_keys(j, {"type", "rho_star", "alpha", "beta"}, where, problems);
    const auto rho = get_real(j, "rho_star", where, problems, true);
    if (rho && !(*rho > 0.0 && *rho < 1.0)) problems.push_back(where + ".rho_star: must lie in (0,1)");
    return FixedRhoPolicy{rho.value_or(0.3), alpha, beta};
  }
  problems.push_back(where + ".type: expected FAR, OracleK or FixedRho, got '" + *type + "'");
  return FarPolicy{};
}

SolverConfig solver_config_from_json(const Json& j, const std::string& where, std::vector<std::string>& problems) {
  SolverConfig cfg;
  if (!j.is_object()) {
    problems.push_back(where + ": expected an object");
    return cfg;
  }
  reject_unknown_keys(j, {"algo", "kappa", "policy", "max_iter", "residual_stop"}, where, problems);
  if (const auto algo = get_string(j, "algo", where, problems, true)) {
    if (const auto a = parse_algorithm(*algo)) {
      cfg.algo = *a;
    } else {
      problems.push_back(where + ".algo: expected IST, IHT or TST, got '" + *algo + "'");
    }
  }
  if (const auto kappa = get_real(j, "kappa", where, problems, true)) {
    if (!(*kappa > 0.0 && *kappa <= 1.0)) problems.push_back(where + ".kappa: must lie in (0,1]");
    cfg.kappa = *kappa;
  }
  if (const auto it = j.find("policy"); it != j.end()) {
    cfg.policy = policy_from_json(*it, join_where(where, "policy"), problems);
  } else {
    problems.push_back(join_where(where, "policy") + ": missing");
  }
  if (const auto mi = get_int(j, "max_iter", where, problems, false)) {
    if (*mi < 1) problems.push_back(where + ".max_iter: must be >= 1");
    cfg.max_iter = static_cast<int>(*mi);
  }
  if (const auto rs = get_real(j, "residual_stop", where, problems, false)) {
    if (*rs < 0) problems.push_back(where + ".residual_stop: must be >= 0");
    cfg.residual_stop = *rs;
  }
  return cfg;
}

SolverSpec solver_spec_from_json(const Json& j, const std::string& where, std::vector<std::string>& problems) {
  if (j.is_object() && j.contains("recommended")) {
    reject_unknown_keys(j, {"recommended", "fast_ops"}, where, problems);
    RecommendedSolver rec;
    if (const auto algo = get_string(j, "recommended", where, problems, true)) {
      if (const auto a = parse_algorithm(*algo)) {
        rec.algo = *a;
      } else {
        problems.push_back(where + ".recommended: expected IST, IHT or TST, got '" + *algo + "'");
      }
    }
    if (const auto it = j.find("fast_ops"); it != j.end()) {
      if (it->is_boolean()) {
        rec.fast_ops = it->get<bool>();
      } else {
        problems.push_back(where + ".fast_ops: expected a boolean");
      }
    }
    return rec;
  }
  return solver_config_from_json(j, where, problems);
}

ProblemSuite suite_from_json(const Json& j, const std::string& where, std::vector<std::string>& problems) {
  ProblemSuite suite;
  if (!j.is_object()) {
    problems.push_back(where + ": expected an object");
    return suite;
  }
  reject_unknown_keys(j, {"matrix", "coeff"}, where, problems);
  if (const auto m = get_string(j, "matrix", where, problems, true)) {
    if (const auto e = parse_matrix_ensemble(*m)) {
      suite.matrix = *e;
    } else {
      problems.push_back(where + ".matrix: unknown matrix ensemble '" + *m + "'");
    }
  }
  if (const auto c = get_string(j, "coeff", where, problems, true)) {
    if (const auto e = parse_coefficient_ensemble(*c)) {
      suite.coeff = *e;
    } else {
      problems.push_back(where + ".coeff: unknown coefficient ensemble '" + *c + "'");
    }
  }
  return suite;
}

ExperimentGrid grid_from_json(const Json& j, std::vector<std::string>& problems) {
  ExperimentGrid grid;
  if (!j.is_object()) {
    problems.push_back("config: expected a JSON object");
    return grid;
  }
  reject_unknown_keys(j,
                      {"schema_version", "N", "deltas", "rhos", "M", "tol", "base_seed", "suite", "fresh_operator",
                       "solver", "theta_grid", "suites"},
                      "", problems);
  if (const auto v = get_int(j, "schema_version", "", problems, true); v && *v != kConfigSchemaVersion) {
    problems.push_back("schema_version: unsupported version " + std::to_string(*v));
  }
  if (const auto N = get_int(j, "N", "", problems, true)) {
    if (*N < 2) problems.push_back("N: must be >= 2");
    grid.N = static_cast<Index>(*N);
  }
  if (const auto it = j.find("deltas"); it != j.end()) {
    grid.deltas = real_list(*it, "deltas", problems);
    for (double d : grid.deltas)
      if (!(d > 0.0 && d <= 1.0)) problems.push_back("deltas: value " + format_real(d) + " outside (0,1]");
  } else {
    problems.push_back("deltas: missing");
  }
  if (const auto it = j.find("rhos"); it != j.end()) {
    grid.rhos.clear();
    if (it->is_array() && !it->empty() && (*it)[0].is_array()) {
      for (std::size_t i = 0; i < it->size(); ++i) {
        grid.rhos.push_back(real_list((*it)[i], "rhos[" + std::to_string(i) + "]", problems));
      }
    } else {
      grid.rhos.push_back(real_list(*it, "rhos", problems));
    }
    for (const auto& row : grid.rhos)
      for (double r : row)
        if (!(r > 0.0 && r < 1.0)) problems.push_back("rhos: value " + format_real(r) + " outside (0,1)");
  } else {
    problems.push_back("rhos: missing");
  }
  if (const auto M = get_int(j, "M", "", problems, true)) {
    if (*M < 1) problems.push_back("M: must be >= 1");
    grid.M = static_cast<int>(*M);
  }
  if (const auto tol = get_real(j, "tol", "", problems, false)) {
    if (!(*tol > 0.0)) problems.push_back("tol: must be > 0");
    grid.tol = *tol;
  }
  if (const auto it = j.find("base_seed"); it != j.end()) {
    if (it->is_number_unsigned() || (it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
      grid.base_seed = it->get<std::uint64_t>();
    } else {
      problems.push_back("base_seed: expected a nonnegative integer");
    }
  }
  if (const auto it = j.find("suite"); it != j.end()) grid.suite = suite_from_json(*it, "suite", problems);
  if (const auto it = j.find("fresh_operator"); it != j.end()) {
    if (it->is_boolean()) {
      grid.fresh_operator = it->get<bool>();
    } else {
      problems.push_back("fresh_operator: expected a boolean");
    }
  }
  if (const auto it = j.find("solver"); it != j.end()) {
    grid.solver = solver_spec_from_json(*it, "solver", problems);
  } else if (!j.contains("theta_grid")) {
    problems.push_back("solver: missing");
  }
  if (problems.empty()) {
    try {
      validate(grid);
    } catch (const ConfigError& e) {
      problems.push_back(e.what());
    }
  }
  return grid;
}

ExperimentGrid grid_from_json(const Json& j) {
  std::vector<std::string> problems;
  ExperimentGrid grid = grid_from_json(j, problems);
  if (!problems.empty()) throw_problems("config schema violations:", problems);
  return grid;
}

SolverConfig solver_config_from_json(const Json& j) {
  std::vector<std::string> problems;
  SolverConfig cfg = solver_config_from_json(j, "solver", problems);
  if (!problems.empty()) throw_problems("solver config schema violations:", problems);
  return cfg;
}

std::string fingerprint(const ExperimentGrid& grid) { return hex64(fnv1a64(to_json(grid).dump())); }

std::string to_csv_row(const TransitionCell& c) {
  std::string row;
  row += format_real(c.delta) + "," + format_real(c.rho) + ",";
  row += std::to_string(c.n) + "," + std::to_string(c.N) + "," + std::to_string(c.k) + ",";
  row += std::to_string(c.M) + "," + std::to_string(c.S) + "," + format_real(c.mean_iterations) + ",";
  row += std::string(to_string(c.algo)) + "," + c.policy + "," + format_real(c.kappa) + ",";
  row += std::string(to_string(c.suite.matrix)) + "," + std::string(to_string(c.suite.coeff)) + ",";
  row += std::to_string(c.seed);
  return row;
}

namespace {

template <class T>
T parse_field(std::string_view text, const std::string& source, std::size_t line, std::string_view name) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(source, line, "bad " + std::string(name) + " field '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

TransitionCell parse_csv_row(std::string_view row, const std::string& source, std::size_t line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  for (;;) {
    const auto comma = row.find(',', start);
    f.push_back(row.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (f.size() != 14) {
    throw ParseError(source, line, "expected 14 fields, found " + std::to_string(f.size()));
  }
  TransitionCell c;
  c.delta = parse_field<double>(f[0], source, line, "delta");
  c.rho = parse_field<double>(f[1], source, line, "rho");
  c.n = parse_field<Index>(f[2], source, line, "n");
  c.N = parse_field<Index>(f[3], source, line, "N");
  c.k = parse_field<Index>(f[4], source, line, "k");
  c.M = parse_field<int>(f[5], source, line, "M");
  c.S = parse_field<int>(f[6], source, line, "S");
  c.mean_iterations = parse_field<double>(f[7], source, line, "mean_iterations");
  const auto algo = parse_algorithm(f[8]);
  if (!algo) throw ParseError(source, line, "bad algo field '" + std::string(f[8]) + "'");
  c.algo = *algo;
  c.policy = std::string(f[9]);
  c.kappa = parse_field<double>(f[10], source, line, "kappa");
  const auto matrix = parse_matrix_ensemble(f[11]);
  if (!matrix) throw ParseError(source, line, "bad suite_matrix field '" + std::string(f[11]) + "'");
  const auto coeff = parse_coefficient_ensemble(f[12]);
  if (!coeff) throw ParseError(source, line, "bad suite_coeff field '" + std::string(f[12]) + "'");
  c.suite = {*matrix, *coeff};
  c.seed = parse_field<Seed>(f[13], source, line, "seed");
  if (c.M < 1 || c.S < 0 || c.S > c.M) throw ParseError(source, line, "S must lie in [0, M] with M >= 1");
  return c;
}

std::vector<TransitionCell> read_cells_csv(const std::filesystem::path& path, bool tolerate_partial_tail) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const std::string source = path.string();

  std::vector<TransitionCell> cells;
  std::size_t pos = 0;
  std::size_t line = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    ++line;
    if (nl == std::string::npos) {
      if (tolerate_partial_tail) break;
      throw ParseError(source, line, "unterminated final line");
    }
    std::string_view row(text.data() + pos, nl - pos);
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    pos = nl + 1;
    if (line == 1) {
      if (row != kCellCsvHeader) throw ParseError(source, line, "unexpected header");
      continue;
    }
    if (row.empty()) continue;
    cells.push_back(parse_csv_row(row, source, line));
  }
  if (line == 0) throw ParseError(source, 1, "empty file");
  return cells;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace sparsetune
