#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sparsetune/logistic.hpp"
#include "sparsetune/recommended.hpp"
#include "sparsetune/transition_types.hpp"

namespace sparsetune {

/// Resolve to recommended_config(algo, delta, fast_ops) per grid row.
struct RecommendedSolver {
  Algorithm algo = Algorithm::IHT;
  bool fast_ops = false;
  friend bool operator==(const RecommendedSolver&, const RecommendedSolver&) = default;
};

using SolverSpec = std::variant<SolverConfig, RecommendedSolver>;

SolverConfig resolve(const SolverSpec& spec, double delta);

struct ExperimentGrid {
  Index N = 200;
  std::vector<double> deltas;
  /// One sorted list per delta, or a single list shared by every delta.
  std::vector<std::vector<double>> rhos;
  int M = 20;
  double tol = kDefaultSuccessTol;
  Seed base_seed = 0;
  ProblemSuite suite = kStandardSuite;
  /// Draw a new matrix for every instance; otherwise one matrix per delta row.
  bool fresh_operator = true;
  SolverSpec solver = RecommendedSolver{};

  const std::vector<double>& rhos_for(std::size_t delta_index) const;
  std::size_t cell_count() const;
  std::size_t delta_index(double delta) const;  // throws ConfigError if absent
};

/// The default desk-scale grid: N = 200, M = 20, ten deltas, eight rhos.
ExperimentGrid desk_scale_grid();

void validate(const ExperimentGrid& grid);

/// n = ceil(delta*N) and k = ceil(rho*n), robust to representation error in
/// the ratios (0.15 * 200 gives 30, not 31).
Index ceil_ratio(double ratio, Index whole);

struct CellIndex {
  std::size_t delta_index = 0;
  std::size_t rho_index = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Every cell in row-major (delta, rho) order.
std::vector<CellIndex> all_cells(const ExperimentGrid& grid);

Seed instance_seed(const ExperimentGrid& grid, CellIndex cell, int instance);

/// Default worker count: the available hardware parallelism.
unsigned default_workers();

/// Runs the given cells with `config_for(delta)` as the solver, using up to
/// `workers` threads. `on_cell` is called for each finished cell in the order
/// the cells were listed, from one thread at a time. Results depend only on
/// the grid, the cells and the configs, never on the worker count.
std::vector<TransitionCell> run_cells(const ExperimentGrid& grid, const std::vector<CellIndex>& cells,
                                      const std::function<SolverConfig(double)>& config_for, unsigned workers,
                                      const std::function<void(const TransitionCell&)>& on_cell = {});

/// M instances at one (delta, rho); solver failures (divergence, rank) count
/// as unsuccessful instances.
TransitionCell run_cell(const ExperimentGrid& grid, double delta, double rho, const SolverConfig& config,
                        unsigned workers = 1);

struct TransitionRow {
  std::vector<TransitionCell> cells;
  TransitionEstimate estimate;
};

/// Runs the delta row then fits it. Throws EstimateUndefinedError when the
/// row never crosses 50% success.
TransitionRow estimate_transition(const ExperimentGrid& grid, double delta, const SolverConfig& config,
                                  unsigned workers = 1);

struct TuneResult {
  std::size_t winner = 0;
  SolverConfig config;
  TransitionEstimate estimate;
  /// One entry per theta; empty where the estimate was undefined.
  std::vector<std::optional<TransitionEstimate>> per_theta;
};

/// argmax over theta_grid of the estimated transition; ties go to the earliest.
TuneResult tune(const ExperimentGrid& grid, double delta, const std::vector<SolverConfig>& theta_grid,
                unsigned workers = 1);

struct MaximinResult {
  std::size_t winner = 0;
  SolverConfig config;
  /// estimates[theta][suite]; empty where undefined.
  std::vector<std::vector<std::optional<TransitionEstimate>>> estimates;
  /// Minimum over suites per theta (empty if any suite was undefined).
  std::vector<std::optional<double>> worst_rho;
  /// Suite index attaining the minimum per theta.
  std::vector<std::optional<std::size_t>> least_favorable;
};

/// argmax over theta of the minimum over suites of the estimated transition.
MaximinResult maximin_tune(const std::vector<ExperimentGrid>& grids, double delta,
                           const std::vector<SolverConfig>& theta_grid, unsigned workers = 1);

}  // namespace sparsetune
