#pragma once

// Discrete two-stage model problem
//
//   min  (alpha/2)|x1|^2 + E[ (1/2)|y - y_D|^2 + (alpha'/2)|z|^2 ]
//   s.t. x1 in C1,  y_k, z_k in C2,
//        A_k y_k - x1 - g_k = 0,  y_k - z_k - psi_k <= 0   for every scenario k,
//
// with all norms the discrete L2 norm |v|^2 = h^2 sum v_i^2. In hard mode z is
// absent (fixed to zero). Multipliers are stored as densities with respect to
// the measure p_k h^2, so <u, lambda> = sum_k p_k h^2 sum_i u_ki lambda_ki.

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sassc/grid_pde.hpp"
#include "sassc/scenario_field.hpp"

namespace sassc {

/// n x S array; column k holds scenario k.
using ScenarioArray = Eigen::MatrixXd;

enum class ConstraintMode { Slack, Hard };

/// Serializable description of an instance. Realized fields are regenerated
/// from it, never stored.
struct InstanceConfig {
  int n1d = 16;
  int scenario_count = 8;
  std::uint64_t seed = 7;
  std::vector<double> probabilities;  ///< empty means uniform
  FieldSpec coefficient;
  FieldSpec load;
  FieldSpec obstacle;
  std::vector<double> c1_lo;  ///< one value (broadcast) or one per node
  std::vector<double> c1_hi;
  double c2_bound = 10.0;
  std::variant<FieldSpec, std::vector<double>> target;
  double alpha = 1e-2;
  double alpha_prime = 100.0;
  ConstraintMode mode = ConstraintMode::Slack;
};

/// n1d = 16, S = 8, seed = 7, with an obstacle that binds at the optimum.
InstanceConfig default_instance_config();
/// Same data model on n1d = 4 with S = 3 and a lower obstacle; small enough
/// for the dense oracle.
InstanceConfig tiny_instance_config(std::uint64_t seed);

/// Throws InputError (EllipticityError for coefficient bounds) naming the
/// violated requirement.
void validate_config(const InstanceConfig& config);

struct ScenarioOperator {
  ScenarioOperator(SparseOperator a, LinearSolverOptions options = {})
      : op(std::move(a)), solver(op, options) {}
  SparseOperator op;
  LinearSolver solver;
};

/// Realized, immutable problem data. Copies share the operator factorizations.
struct Instance {
  InstanceConfig config;
  Grid grid{1};
  std::vector<double> probabilities;
  std::vector<std::shared_ptr<const ScenarioOperator>> operators;
  ScenarioArray loads;
  ScenarioArray obstacles;
  Vector c1_lo;
  Vector c1_hi;
  Vector target;
  double c2_bound = 0.0;
  double alpha = 0.0;
  double alpha_prime = 0.0;
  ConstraintMode mode = ConstraintMode::Slack;
  EllipticityBounds ellipticity;

  int scenarios() const noexcept { return static_cast<int>(probabilities.size()); }
  int nodes() const noexcept { return grid.size(); }
  /// p_k h^2, the weight of one node of scenario k in the pairing.
  double scenario_weight(int k) const { return probabilities[static_cast<std::size_t>(k)] * grid.cell_weight(); }
  const SparseOperator& op(int k) const { return operators[static_cast<std::size_t>(k)]->op; }
  const LinearSolver& solver(int k) const { return operators[static_cast<std::size_t>(k)]->solver; }
  bool slack() const noexcept { return mode == ConstraintMode::Slack; }

  /// Single-scenario instance (p = 1) sharing grid and operator k.
  Instance scenario_subproblem(int k) const;
  Instance with_alpha_prime(double value) const;
  Instance with_mode(ConstraintMode value) const;
};

Instance build_instance(const InstanceConfig& config);

struct PrimalPoint {
  Vector x1;
  ScenarioArray y;
  ScenarioArray z;  ///< all zero in hard mode

  static PrimalPoint zeros(const Instance& inst);
};

struct DualPoint {
  ScenarioArray lambda_e;
  ScenarioArray lambda_i;
  ScenarioArray rho;

  static DualPoint zeros(const Instance& inst);
};

/// Throws InputError when array shapes do not match the instance.
void check_shapes(const Instance& inst, const PrimalPoint& x);
void check_shapes(const Instance& inst, const DualPoint& lambda);

double objective(const Instance& inst, const PrimalPoint& x);

/// sum_k p_k h^2 sum_i u_ki lambda_ki
double pairing(const ScenarioArray& u, const ScenarioArray& lambda, std::span<const double> p, double h);

/// E[v] = sum_k p_k v_k.
Vector expectation(const Instance& inst, const ScenarioArray& v);

Vector project_c1(const Instance& inst, const Vector& v);
Vector project_c2(const Instance& inst, const Vector& v);
Vector project_koplus(const Vector& v);

/// Per-scenario weighted norm max_k |v_k|_h.
double max_scenario_norm(const Instance& inst, const ScenarioArray& v);

constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// +inf if x leaves the boxes, -inf if lambda_i has a negative entry,
/// otherwise j(x) + <lambda_e, Ay - x1 - g> + <lambda_i, y - z - psi>.
double lagrangian(const Instance& inst, const PrimalPoint& x, const DualPoint& lambda);

/// inf_x L(x, lambda) in closed form (separable clamped quadratics).
double dual_function(const Instance& inst, const DualPoint& lambda);

struct FeasibilityTolerances {
  double box = 1e-12;
  double equality = 1e-8;
  double inequality = 1e-12;
};

struct FeasibilityReport {
  double c1 = 0.0;          ///< max distance outside C1
  double y_box = 0.0;       ///< max amount |y| exceeds M
  double z_box = 0.0;
  double equality = 0.0;    ///< max_k |A_k y_k - x1 - g_k|_h
  double inequality = 0.0;  ///< max entry of max(0, y - z - psi)
  std::vector<double> equality_per_scenario;

  bool feasible(const FeasibilityTolerances& tol = {}) const;
};

FeasibilityReport feasibility_check(const Instance& inst, const PrimalPoint& x);

struct SlaterReport {
  bool success = false;
  double margin = 0.0;  ///< epsilon; <= 0 on failure
  int scenario = -1;    ///< location of the smallest margin (-1 for C1)
  int node = -1;
  std::string binding;  ///< which constraint attains the margin
  PrimalPoint candidate;
};

/// Builds x1 = midpoint of C1, y_k = PDE solution, z_k = clamp(y_k - psi_k + delta)
/// and reports the uniform strict-feasibility margin. Slack mode only.
SlaterReport slater_check(const Instance& inst);

/// Same construction at a given first-stage decision; the C1 margin is not
/// counted (the probe may sit on the boundary of C1).
SlaterReport second_stage_construction(const Instance& inst, const Vector& x1);

struct RecourseReport {
  std::vector<bool> per_probe;
  bool all_succeeded = true;
  bool no_probes = false;
};

/// Sampled check of relatively complete recourse: every probe (inside C1)
/// must admit a strictly feasible second stage.
RecourseReport recourse_probe(const Instance& inst, const std::vector<Vector>& probes);

}  // namespace sassc
