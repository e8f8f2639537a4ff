#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sparsetune::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,
  kIoError = 3,
  kNumericError = 4,
  kPartialFailure = 5,
};

inline constexpr const char* kOutputRootEnv = "SPARSETUNE_OUT";

struct SolveOptions {
  std::filesystem::path matrix;
  std::filesystem::path y;
  std::string algo = "tst";
  std::optional<double> delta;
  bool fast_ops = false;
  std::filesystem::path out;
};

struct RunGridOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path out;
  unsigned workers = 0;  // 0: available parallelism
  std::optional<std::uint64_t> seed;
  /// Stop after this many newly completed cells (simulated interruption).
  std::optional<std::size_t> stop_after;
};

struct RunGridSummary {
  std::size_t run = 0;
  std::size_t skipped = 0;
  std::size_t total = 0;
};

struct FitOptions {
  std::filesystem::path cells;
  std::filesystem::path out;
};

struct TuneOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  bool maximin = false;
  unsigned workers = 0;
  std::optional<std::uint64_t> seed;
};

struct TimeOptions {
  std::optional<std::filesystem::path> config;
  std::vector<long> sizes;
  double delta = 0.5;
  double rho = 0.2;
  std::string algo = "iht";
  bool fast_ops = false;
  int reps = 10;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct ReportOptions {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out;
};

// Each command writes its artifacts, prints a summary to `log`, and throws
// sparsetune::Error subclasses on failure. The return value is the exit code
// for non-exceptional outcomes (kOk or kPartialFailure).
int cmd_solve(const SolveOptions& opt, std::ostream& log);
int cmd_run_grid(const RunGridOptions& opt, std::ostream& log, RunGridSummary* summary = nullptr);
int cmd_fit(const FitOptions& opt, std::ostream& log);
int cmd_tune(const TuneOptions& opt, std::ostream& log);
int cmd_time(const TimeOptions& opt, std::ostream& log);
int cmd_report(const ReportOptions& opt, std::ostream& log);

/// Parses argv and dispatches; maps exceptions to exit codes.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace sparsetune::cli
