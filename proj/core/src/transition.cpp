#include "sparsetune/transition.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "sparsetune/errors.hpp"

namespace sparsetune {

SolverConfig resolve(const SolverSpec& spec, double delta) {
  if (const auto* rec = std::get_if<RecommendedSolver>(&spec)) return recommended_config(rec->algo, delta, rec->fast_ops);
  return std::get<SolverConfig>(spec);
}

const std::vector<double>& ExperimentGrid::rhos_for(std::size_t delta_index) const {
  return rhos.size() == 1 ? rhos.front() : rhos.at(delta_index);
}

std::size_t ExperimentGrid::cell_count() const {
  std::size_t total = 0;
  for (std::size_t d = 0; d < deltas.size(); ++d) total += rhos_for(d).size();
  return total;
}

std::size_t ExperimentGrid::delta_index(double delta) const {
  for (std::size_t d = 0; d < deltas.size(); ++d) {
    if (std::abs(deltas[d] - delta) <= 1e-12) return d;
  }
  throw ConfigError("delta " + std::to_string(delta) + " is not on the grid");
}

ExperimentGrid desk_scale_grid() {
  ExperimentGrid g;
  g.N = 200;
  g.M = 20;
  g.deltas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  g.rhos = {{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5}};
  g.solver = RecommendedSolver{Algorithm::IHT, false};
  return g;
}

Index ceil_ratio(double ratio, Index whole) {
  const double exact = ratio * static_cast<double>(whole);
  return static_cast<Index>(std::ceil(exact - 1e-9 * std::max(1.0, std::abs(exact))));
}

void validate(const ExperimentGrid& grid) {
  std::vector<std::string> problems;
  if (grid.N < 2) problems.push_back("N must be >= 2");
  if (grid.M < 1) problems.push_back("M must be >= 1");
  if (!(grid.tol > 0.0)) problems.push_back("tol must be > 0");
  if (grid.deltas.empty()) problems.push_back("deltas must be nonempty");
  if (!std::is_sorted(grid.deltas.begin(), grid.deltas.end())) problems.push_back("deltas must be sorted");
  if (grid.rhos.empty()) problems.push_back("rhos must be nonempty");
  if (grid.rhos.size() != 1 && grid.rhos.size() != grid.deltas.size()) {
    problems.push_back("rhos must be one shared list or one list per delta");
  }
  if (problems.empty()) {
    for (std::size_t d = 0; d < grid.deltas.size(); ++d) {
      const double delta = grid.deltas[d];
      if (!(delta > 0.0 && delta <= 1.0)) {
        problems.push_back("delta " + std::to_string(delta) + " outside (0,1]");
        continue;
      }
      const Index n = ceil_ratio(delta, grid.N);
      const auto& rhos = grid.rhos_for(d);
      if (rhos.empty()) problems.push_back("empty rho list for delta " + std::to_string(delta));
      if (!std::is_sorted(rhos.begin(), rhos.end())) problems.push_back("rhos must be sorted");
      for (double rho : rhos) {
        if (!(rho > 0.0 && rho < 1.0)) {
          problems.push_back("rho " + std::to_string(rho) + " outside (0,1)");
        } else if (ceil_ratio(rho, n) < 1) {
          problems.push_back("rho " + std::to_string(rho) + " gives k < 1");
        }
      }
    }
  }
  if (const auto* cfg = std::get_if<SolverConfig>(&grid.solver)) {
    try {
      validate(*cfg);
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  }
  if (grid.suite.matrix == MatrixEnsemble::PartialHadamard1D && (grid.N & (grid.N - 1)) != 0) {
    problems.push_back("PartialHadamard1D needs N a power of two");
  }
  if (!problems.empty()) {
    std::string msg = "invalid experiment grid:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

std::vector<CellIndex> all_cells(const ExperimentGrid& grid) {
  std::vector<CellIndex> out;
  for (std::size_t d = 0; d < grid.deltas.size(); ++d)
    for (std::size_t r = 0; r < grid.rhos_for(d).size(); ++r) out.push_back({d, r});
  return out;
}

Seed instance_seed(const ExperimentGrid& grid, CellIndex cell, int instance) {
  return derive_seed(derive_seed(derive_seed(grid.base_seed, cell.delta_index), cell.rho_index),
                     static_cast<std::uint64_t>(instance));
}

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

namespace {

struct InstanceOutcome {
  bool ok = false;
  int iterations = 0;
};

InstanceOutcome run_instance(const ExperimentGrid& grid, CellIndex cell, int instance, const SolverConfig& base) {
  const double delta = grid.deltas[cell.delta_index];
  const double rho = grid.rhos_for(cell.delta_index)[cell.rho_index];
  const Index n = ceil_ratio(delta, grid.N);
  const Index k = ceil_ratio(rho, n);
  std::optional<Seed> op_seed;
  if (!grid.fresh_operator) op_seed = derive_seed(derive_seed(grid.base_seed, cell.delta_index), "shared-operator");
  const ProblemInstance inst = generate_instance(grid.suite, n, grid.N, k, instance_seed(grid, cell, instance), op_seed);

  SolverConfig cfg = base;
  if (auto* oracle = std::get_if<OracleKPolicy>(&cfg.policy); oracle && !oracle->k) oracle->k = k;
  try {
    const SolveResult res = solve(inst.op, inst.y, cfg);
    return {success(inst.x0, res.xhat, grid.tol), res.iterations};
  } catch (const DivergenceError&) {
  } catch (const RankError&) {
  } catch (const OverdeterminedSupportError&) {
  }
  return {false, cfg.max_iter};
}

template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::atomic<bool> stop{false};
  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::vector<TransitionCell> run_cells(const ExperimentGrid& grid, const std::vector<CellIndex>& cells,
                                      const std::function<SolverConfig(double)>& config_for, unsigned workers,
                                      const std::function<void(const TransitionCell&)>& on_cell) {
  validate(grid);
  const auto M = static_cast<std::size_t>(grid.M);

  std::vector<SolverConfig> configs;
  std::vector<TransitionCell> out(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const double delta = grid.deltas.at(cells[c].delta_index);
    const double rho = grid.rhos_for(cells[c].delta_index).at(cells[c].rho_index);
    configs.push_back(config_for(delta));
    validate(configs.back());
    auto& cell = out[c];
    cell.delta = delta;
    cell.rho = rho;
    cell.N = grid.N;
    cell.n = ceil_ratio(delta, grid.N);
    cell.k = ceil_ratio(rho, cell.n);
    cell.M = grid.M;
    cell.algo = configs.back().algo;
    cell.policy = describe(configs.back().policy);
    cell.kappa = configs.back().kappa;
    cell.suite = grid.suite;
    cell.seed = grid.base_seed;
  }

  std::vector<InstanceOutcome> outcomes(cells.size() * M);
  std::vector<std::atomic<std::size_t>> remaining(cells.size());
  for (auto& r : remaining) r = M;
  std::vector<char> done(cells.size(), 0);
  std::size_t next_to_emit = 0;
  std::mutex emit_mutex;

  auto finalize = [&](std::size_t c) {
    int successes = 0;
    double iterations = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      const auto& o = outcomes[c * M + i];
      successes += o.ok ? 1 : 0;
      iterations += o.iterations;
    }
    out[c].S = successes;
    out[c].mean_iterations = iterations / static_cast<double>(M);
    std::lock_guard lock(emit_mutex);
    done[c] = 1;
    while (next_to_emit < cells.size() && done[next_to_emit]) {
      if (on_cell) on_cell(out[next_to_emit]);
      ++next_to_emit;
    }
  };

  parallel_for(cells.size() * M, workers, [&](std::size_t task) {
    const std::size_t c = task / M;
    const int instance = static_cast<int>(task % M);
    outcomes[task] = run_instance(grid, cells[c], instance, configs[c]);
    if (remaining[c].fetch_sub(1) == 1) finalize(c);
  });
  return out;
}

TransitionCell run_cell(const ExperimentGrid& grid, double delta, double rho, const SolverConfig& config,
                        unsigned workers) {
  const std::size_t d = grid.delta_index(delta);
  const auto& rhos = grid.rhos_for(d);
  const auto it = std::find_if(rhos.begin(), rhos.end(), [rho](double r) { return std::abs(r - rho) <= 1e-12; });
  if (it == rhos.end()) throw ConfigError("rho " + std::to_string(rho) + " is not on the grid");
  const CellIndex cell{d, static_cast<std::size_t>(it - rhos.begin())};
  return run_cells(grid, {cell}, [&](double) { return config; }, workers).front();
}

TransitionRow estimate_transition(const ExperimentGrid& grid, double delta, const SolverConfig& config,
                                  unsigned workers) {
  const std::size_t d = grid.delta_index(delta);
  std::vector<CellIndex> row;
  for (std::size_t r = 0; r < grid.rhos_for(d).size(); ++r) row.push_back({d, r});
  TransitionRow result;
  result.cells = run_cells(grid, row, [&](double) { return config; }, workers);
  result.estimate = fit_logistic(result.cells);
  return result;
}

TuneResult tune(const ExperimentGrid& grid, double delta, const std::vector<SolverConfig>& theta_grid,
                unsigned workers) {
  if (theta_grid.empty()) throw ConfigError("theta grid is empty");
  TuneResult result;
  std::optional<std::size_t> best;
  for (std::size_t t = 0; t < theta_grid.size(); ++t) {
    try {
      result.per_theta.push_back(estimate_transition(grid, delta, theta_grid[t], workers).estimate);
    } catch (const EstimateUndefinedError&) {
      result.per_theta.emplace_back();
      continue;
    }
    if (!best || result.per_theta[t]->rho_star > result.per_theta[*best]->rho_star) best = t;
  }
  if (!best) throw TuningFailedError(delta);
  result.winner = *best;
  result.config = theta_grid[*best];
  result.estimate = *result.per_theta[*best];
  return result;
}

MaximinResult maximin_tune(const std::vector<ExperimentGrid>& grids, double delta,
                           const std::vector<SolverConfig>& theta_grid, unsigned workers) {
  if (grids.empty()) throw ConfigError("maximin needs at least one suite");
  if (theta_grid.empty()) throw ConfigError("theta grid is empty");
  MaximinResult result;
  std::optional<std::size_t> best;
  for (std::size_t t = 0; t < theta_grid.size(); ++t) {
    auto& row = result.estimates.emplace_back();
    std::optional<double> worst;
    std::optional<std::size_t> worst_suite;
    bool complete = true;
    for (std::size_t s = 0; s < grids.size(); ++s) {
      try {
        row.push_back(estimate_transition(grids[s], delta, theta_grid[t], workers).estimate);
      } catch (const EstimateUndefinedError&) {
        row.emplace_back();
        complete = false;
        continue;
      }
      if (!worst || row.back()->rho_star < *worst) {
        worst = row.back()->rho_star;
        worst_suite = s;
      }
    }
    result.worst_rho.push_back(complete ? worst : std::nullopt);
    result.least_favorable.push_back(complete ? worst_suite : std::nullopt);
    if (complete && (!best || *worst > *result.worst_rho[*best])) best = t;
  }
  if (!best) throw TuningFailedError(delta);
  result.winner = *best;
  result.config = theta_grid[*best];
  return result;
}

}  // namespace sparsetune
