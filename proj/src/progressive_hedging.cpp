#include <chrono>
#include <cmath>

#include "sassc/errors.hpp"
#include "sassc/parallel.hpp"
#include "sassc/solvers.hpp"

namespace sassc {

namespace {

struct ScenarioState {
  Instance sub;
  double knorm = 0.0;
  SolveResult last;
  bool has_last = false;
};

// Solves every scenario subproblem with its current shift; warm starts from
// the previous outer iteration.
void solve_scenarios(std::vector<ScenarioState>& states, const SolverParams& inner,
                     const std::vector<FirstStageShift>& shifts) {
  parallel_for(states.size(), [&](std::size_t k) {
    ScenarioState& st = states[k];
    SolverParams p = inner;
    p.operator_norm = st.knorm;
    Iterate warm;
    const Iterate* warm_ptr = nullptr;
    if (st.has_last) {
      warm = Iterate{st.last.primal, st.last.dual};
      warm_ptr = &warm;
    }
    SolveResult r = solve_pdhg(st.sub, p, warm_ptr, shifts[k]);
    if (r.report.status == SolveStatus::Failure || r.report.status == SolveStatus::InfeasibleSuspected)
      throw SolverFailure("PH subproblem for scenario " + std::to_string(k) + " failed: " + to_string(r.report.status),
                          r.report.kkt.max_residual());
    st.last = std::move(r);
    st.has_last = true;
  });
}

}  // namespace

ProgressiveHedgingResult solve_progressive_hedging(const Instance& inst, const SolverParams& params) {
  validate_params(params);
  if (!inst.slack()) throw PreconditionError("progressive hedging requires a slack-mode instance");
  const auto t0 = std::chrono::steady_clock::now();
  const int n = inst.nodes();
  const int S = inst.scenarios();
  const double r = params.ph_penalty;

  SolverParams inner = params;
  inner.kkt_tolerance = params.ph_inner_tolerance;
  inner.on_iteration = nullptr;
  inner.detect_infeasibility = false;

  std::vector<ScenarioState> states(static_cast<std::size_t>(S));
  for (int k = 0; k < S; ++k) {
    auto& st = states[static_cast<std::size_t>(k)];
    st.sub = inst.scenario_subproblem(k);
  }
  parallel_for(states.size(), [&](std::size_t k) {
    states[k].knorm = params.operator_norm ? *params.operator_norm : pdhg_operator_norm(states[k].sub);
  });

  ProgressiveHedgingResult out;
  out.weights = ScenarioArray::Zero(n, S);
  out.scenario_controls = ScenarioArray::Zero(n, S);
  std::vector<FirstStageShift> shifts(static_cast<std::size_t>(S));
  int inner_iterations = 0;
  bool converged = false;
  bool inner_capped = false;

  for (int outer = 0; outer <= params.ph_max_outer; ++outer) {
    solve_scenarios(states, inner, shifts);
    for (int k = 0; k < S; ++k) {
      const auto& rep = states[static_cast<std::size_t>(k)].last.report;
      inner_iterations += rep.iterations;
      inner_capped = inner_capped || rep.status == SolveStatus::IterationCap;
      out.scenario_controls.col(k) = states[static_cast<std::size_t>(k)].last.primal.x1;
    }
    const Vector mean = expectation(inst, out.scenario_controls);
    const Vector previous = out.consensus;
    out.consensus = project_c1(inst, mean);
    // r |x-hat change| is the stationarity defect of the averaged subproblems.
    // The first pass has no proximal term, so agreement there is already a
    // fixed point.
    const double drift = outer == 0 ? 0.0 : r * inst.grid.norm(out.consensus - previous);
    out.projection_active = inst.grid.norm(out.consensus - mean) > 0.0;
    out.consensus_residual = 0.0;
    for (int k = 0; k < S; ++k) {
      Vector gap = out.scenario_controls.col(k) - out.consensus;
      out.weights.col(k) += r * gap;
      out.consensus_residual = std::max(out.consensus_residual, inst.grid.norm(gap));
    }
    out.weight_mean_norm = inst.grid.norm(expectation(inst, out.weights));
    out.outer_iterations = outer + 1;
    if (out.consensus_residual <= params.ph_tolerance && drift <= params.ph_tolerance) {
      converged = true;
      break;
    }
    for (int k = 0; k < S; ++k) {
      auto& sh = shifts[static_cast<std::size_t>(k)];
      sh.linear = out.weights.col(k);
      sh.proximal_weight = r;
      sh.center = out.consensus;
    }
  }

  SolveResult& res = out.result;
  res.primal = PrimalPoint::zeros(inst);
  res.dual = DualPoint::zeros(inst);
  res.primal.x1 = out.consensus;
  for (int k = 0; k < S; ++k) {
    const auto& last = states[static_cast<std::size_t>(k)].last;
    res.primal.y.col(k) = last.primal.y.col(0);
    res.primal.z.col(k) = last.primal.z.col(0);
    res.dual.lambda_e.col(k) = last.dual.lambda_e.col(0);
    res.dual.lambda_i.col(k) = last.dual.lambda_i.col(0);
  }
  res.dual.rho = extract_rho(inst, res.dual.lambda_e);
  res.report.algorithm = "ph";
  res.report.iterations = out.outer_iterations;
  res.report.kkt = kkt_residuals(inst, res.primal, res.dual);
  res.report.objective = res.report.kkt.objective;
  res.report.dual_value = res.report.kkt.dual_value;
  if (!converged)
    res.report.status = SolveStatus::IterationCap;
  else if (res.report.kkt.residuals_pass(params.kkt_tolerance))
    res.report.status = SolveStatus::Converged;
  else
    res.report.status = SolveStatus::Failure;
  res.report.message = "inner iterations " + std::to_string(inner_iterations) + "; weight mean drift " +
                       std::to_string(out.weight_mean_norm);
  if (out.projection_active) res.report.message += "; consensus projection active";
  if (inner_capped) res.report.message += "; some subproblems hit the iteration cap";
  res.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace sassc
