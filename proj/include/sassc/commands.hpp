#pragma once

// Batch commands behind the sassc executable. Each returns a process exit
// code; diagnostics go to stderr, a short summary to stdout.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sassc/solvers.hpp"

namespace sassc {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,  ///< certificate or study predicate failed, solver breakdown
  kExitIterationCap = 2,
  kExitInfeasible = 3,
  kExitInputError = 4,
};

struct GenerateOverrides {
  std::optional<int> n1d;
  std::optional<int> scenarios;
  std::optional<double> alpha;
  std::optional<double> alpha_prime;
  std::optional<std::string> mode;
  std::optional<double> a_min;
  std::optional<double> a_max;
  std::optional<double> c1_lo;
  std::optional<double> c1_hi;
  std::optional<double> c2_bound;
};

struct RunConfig {
  std::string command;
  std::filesystem::path instance;
  std::filesystem::path out = ".";
  std::string algorithm = "pdhg";
  std::optional<double> tolerance;
  std::optional<int> max_iters;
  std::optional<std::uint64_t> seed;
  std::optional<double> ph_penalty;
  std::vector<double> schedule{1.0, 10.0, 100.0, 1000.0, 10000.0};
  std::vector<int> levels{7, 15, 31};
  std::filesystem::path primal;  ///< certify inputs; default <out>/primal.json
  std::filesystem::path dual;
  bool history = false;          ///< stream per-check residuals to <out>/history.csv
  GenerateOverrides overrides;
};

/// Solver parameters from the tolerance / iteration overrides.
SolverParams params_from(const RunConfig& config);

int cmd_generate(const RunConfig& config);
int cmd_solve(const RunConfig& config);
int cmd_certify(const RunConfig& config);
int cmd_homotopy(const RunConfig& config);
int cmd_compare_oracle(const RunConfig& config);
int cmd_mms(const RunConfig& config);

/// Dispatches on config.command.
int run_command(const RunConfig& config);

/// Parses "1,10,100" style lists; throws InputError.
std::vector<double> parse_double_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace sassc
