#pragma once

#include <functional>
#include <optional>
#include <string>

#include "sassc/kkt_cert.hpp"
#include "sassc/problem_core.hpp"

namespace sassc {

enum class SolveStatus { Converged, IterationCap, InfeasibleSuspected, Failure };

std::string to_string(SolveStatus status);

struct IterationRecord {
  int iteration = 0;
  KktReport residuals;  ///< residual fields only
  double objective = 0.0;
  double dual_value = 0.0;
};

struct SolverParams {
  int max_iters = 400000;
  double kkt_tolerance = 1e-6;
  /// tau * sigma * |K|^2 is held at this value.
  double step_safety = 0.99;
  /// Ratio tau / sigma = primal_weight^2.
  double primal_weight = 1.0;
  int check_interval = 50;
  /// Skips the power iteration when set (reused across repeated solves).
  std::optional<double> operator_norm;
  /// Restart from the averaged iterate when the KKT error has decayed
  /// enough; the primal weight is rebalanced at each restart.
  bool adaptive_restarts = true;
  /// Dual-norm doubling heuristic for infeasible hard-mode instances.
  bool detect_infeasibility = true;

  double ph_penalty = 1.0;
  /// Bound on both the consensus gap and r times the consensus change.
  double ph_tolerance = 1e-7;
  double ph_inner_tolerance = 1e-9;
  int ph_max_outer = 2000;

  double barrier_mu0 = 1.0;
  double barrier_shrink = 0.2;
  double barrier_mu_final = 1e-10;
  int barrier_max_newton = 200;

  /// Called at every residual check when set.
  std::function<void(const IterationRecord&)> on_iteration;
};

void validate_params(const SolverParams& params);

struct SolveReport {
  std::string algorithm;
  int iterations = 0;
  SolveStatus status = SolveStatus::Failure;
  KktReport kkt;
  double objective = 0.0;
  double dual_value = 0.0;
  double wall_seconds = 0.0;
  std::string message;

  bool converged() const { return status == SolveStatus::Converged; }
};

struct Iterate {
  PrimalPoint primal;
  DualPoint dual;
};

struct SolveResult {
  PrimalPoint primal;
  DualPoint dual;
  SolveReport report;
};

/// rho_k = -lambda_e,k (the control enters each scenario through the identity).
ScenarioArray extract_rho(const Instance& inst, const ScenarioArray& lambda_e);

/// First-order primal-dual splitting on the Lagrangian. The PDE rows are
/// preconditioned by the factorized operators, i.e. the iteration runs on the
/// equivalent constraint y_k - A_k^{-1}(x1 + g_k) = 0 whose multiplier mu_k
/// maps back through lambda_e,k = A_k^{-1} mu_k.
SolveResult solve_pdhg(const Instance& inst, const SolverParams& params,
                       const Iterate* warm_start = nullptr, const FirstStageShift& shift = {});

/// Norm of the preconditioned constraint map used for the step sizes.
double pdhg_operator_norm(const Instance& inst);

/// Same splitting for the hard-constrained problem (no slack variable).
SolveResult solve_hard(const Instance& inst, const SolverParams& params,
                       const Iterate* warm_start = nullptr);

struct ProgressiveHedgingResult {
  SolveResult result;
  ScenarioArray weights;           ///< w_k, one column per scenario
  ScenarioArray scenario_controls;  ///< x1^k from the last subproblem solves
  Vector consensus;                ///< x-hat
  double consensus_residual = 0.0;  ///< max_k |x1^k - x-hat|_h
  double weight_mean_norm = 0.0;    ///< |sum_k p_k w_k|_h at termination
  bool projection_active = false;   ///< consensus projection onto C1 moved x-hat
  int outer_iterations = 0;
};

ProgressiveHedgingResult solve_progressive_hedging(const Instance& inst, const SolverParams& params);

/// Dense primal log-barrier Newton method; reference oracle for small instances.
SolveResult solve_barrier_reference(const Instance& inst, const SolverParams& params);

/// Variable count the barrier oracle accepts.
constexpr int kBarrierMaxVariables = 2000;

}  // namespace sassc
