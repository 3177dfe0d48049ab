#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "sassc/errors.hpp"
#include "sassc/solvers.hpp"

namespace sassc {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::IterationCap: return "iteration_cap";
    case SolveStatus::InfeasibleSuspected: return "infeasible_suspected";
    case SolveStatus::Failure: return "failure";
  }
  return "failure";
}

void validate_params(const SolverParams& p) {
  if (p.max_iters < 1) throw InputError("max_iters must be positive");
  if (!(p.kkt_tolerance > 0.0 && p.kkt_tolerance < 1.0)) throw InputError("kkt tolerance must lie in (0, 1)");
  if (!(p.step_safety > 0.0 && p.step_safety < 1.0)) throw InputError("step safety must lie in (0, 1)");
  if (!(p.primal_weight > 0.0)) throw InputError("primal weight must be positive");
  if (p.check_interval < 1) throw InputError("check interval must be positive");
  if (!(p.ph_penalty > 0.0)) throw InputError("PH penalty must be positive");
  if (!(p.ph_tolerance > 0.0) || !(p.ph_inner_tolerance > 0.0)) throw InputError("PH tolerances must be positive");
  if (!(p.barrier_mu0 > 0.0) || !(p.barrier_mu_final > 0.0) ||
      !(p.barrier_shrink > 0.0 && p.barrier_shrink < 1.0))
    throw InputError("barrier parameters must be positive with shrink in (0, 1)");
}

ScenarioArray extract_rho(const Instance& inst, const ScenarioArray& lambda_e) {
  if (lambda_e.rows() != inst.nodes() || lambda_e.cols() != inst.scenarios())
    throw InputError("extract_rho: shape mismatch");
  return -lambda_e;
}

namespace {

using Clock = std::chrono::steady_clock;

/// Preconditioned constraint map K x = (y_k - A_k^{-1} x1, y_k - z_k) and its
/// adjoint in the weighted spaces (h^2 for x1, p_k h^2 for scenario blocks).
struct ConstraintMap {
  const Instance& inst;
  bool slack;

  double norm_estimate() const {
    const int n = inst.nodes();
    const int S = inst.scenarios();
    const int blocks = slack ? 2 : 1;
    const double h2 = inst.grid.cell_weight();
    LinearMap map;
    map.domain_weights.resize(n + blocks * n * S);
    map.domain_weights.head(n).setConstant(h2);
    map.range_weights.resize(2 * n * S);
    for (int k = 0; k < S; ++k) {
      const double w = inst.scenario_weight(k);
      map.domain_weights.segment(n + k * n, n).setConstant(w);
      if (slack) map.domain_weights.segment(n + n * S + k * n, n).setConstant(w);
      map.range_weights.segment(k * n, n).setConstant(w);
      map.range_weights.segment(n * S + k * n, n).setConstant(w);
    }
    map.forward = [&, n, S](const Vector& v) {
      Vector out(2 * n * S);
      const auto x1 = v.head(n);
      for (int k = 0; k < S; ++k) {
        const auto y = v.segment(n + k * n, n);
        out.segment(k * n, n) = y - inst.solver(k).apply_inverse(x1);
        out.segment(n * S + k * n, n) = y;
        if (slack) out.segment(n * S + k * n, n) -= v.segment(n + n * S + k * n, n);
      }
      return out;
    };
    map.adjoint = [&, n, S](const Vector& u) {
      Vector out = Vector::Zero(n + (slack ? 2 : 1) * n * S);
      for (int k = 0; k < S; ++k) {
        const auto mu = u.segment(k * n, n);
        const auto lam = u.segment(n * S + k * n, n);
        out.head(n) -= inst.probabilities[static_cast<std::size_t>(k)] * inst.solver(k).apply_inverse(mu);
        out.segment(n + k * n, n) = mu + lam;
        if (slack) out.segment(n + n * S + k * n, n) = -lam;
      }
      return out;
    };
    return operator_norm_estimate(map);
  }
};

/// Tracks the dual norm at power-of-two check counts. Linear growth of the
/// multipliers while the primal residual stalls is the infeasibility signature.
class DivergenceMonitor {
 public:
  bool observe(int iteration, double dual_norm, double primal_residual) {
    if (iteration < next_) return false;
    next_ *= 2;
    const bool growing = last_norm_ > 0.0 && dual_norm >= 1.8 * last_norm_ &&
                         primal_residual >= 0.5 * last_residual_;
    streak_ = growing ? streak_ + 1 : 0;
    last_norm_ = dual_norm;
    last_residual_ = primal_residual;
    return streak_ >= 4 && dual_norm > 1e3;
  }

 private:
  int next_ = 1024;
  int streak_ = 0;
  double last_norm_ = 0.0;
  double last_residual_ = 0.0;
};

}  // namespace

double pdhg_operator_norm(const Instance& inst) { return ConstraintMap{inst, inst.slack()}.norm_estimate(); }

SolveResult solve_pdhg(const Instance& inst, const SolverParams& params, const Iterate* warm_start,
                       const FirstStageShift& shift) {
  validate_params(params);
  const auto t0 = Clock::now();
  const int n = inst.nodes();
  const int S = inst.scenarios();
  const bool slack = inst.slack();
  const double M = inst.c2_bound;

  const double knorm = params.operator_norm ? *params.operator_norm : pdhg_operator_norm(inst);
  double omega = params.primal_weight;
  double tau = std::sqrt(params.step_safety) * omega / knorm;
  double sigma = std::sqrt(params.step_safety) / (omega * knorm);

  PrimalPoint x = PrimalPoint::zeros(inst);
  ScenarioArray mu = ScenarioArray::Zero(n, S);
  ScenarioArray lam = ScenarioArray::Zero(n, S);
  if (warm_start) {
    check_shapes(inst, warm_start->primal);
    check_shapes(inst, warm_start->dual);
    x = warm_start->primal;
    if (!slack) x.z.setZero();
    lam = warm_start->dual.lambda_i.cwiseMax(0.0);
    for (int k = 0; k < S; ++k) mu.col(k) = inst.op(k).apply(warm_start->dual.lambda_e.col(k));
  }

  ScenarioArray g_pre(n, S);  // A_k^{-1} g_k
  ScenarioArray ainv_x1(n, S);
  ScenarioArray lambda_e(n, S);
  for (int k = 0; k < S; ++k) {
    g_pre.col(k) = inst.solver(k).apply_inverse(inst.loads.col(k));
    ainv_x1.col(k) = inst.solver(k).apply_inverse(x.x1);
    lambda_e.col(k) = inst.solver(k).apply_inverse(mu.col(k));
  }

  const bool shifted = shift.active();
  const Vector shift_linear = shift.linear.size() > 0 ? shift.linear : Vector::Zero(n);
  const double prox_r = shift.proximal_weight;
  const Vector prox_center = prox_r > 0.0 ? shift.center : Vector::Zero(n);

  // Weighted norms for the primal-weight update.
  const double h2 = inst.grid.cell_weight();
  auto primal_dist = [&](const PrimalPoint& a, const PrimalPoint& b) {
    double acc = h2 * (a.x1 - b.x1).squaredNorm();
    for (int k = 0; k < S; ++k) {
      const double w = inst.scenario_weight(k);
      acc += w * ((a.y.col(k) - b.y.col(k)).squaredNorm() + (a.z.col(k) - b.z.col(k)).squaredNorm());
    }
    return std::sqrt(acc);
  };
  auto dual_dist = [&](const ScenarioArray& m1, const ScenarioArray& l1, const ScenarioArray& m2,
                       const ScenarioArray& l2) {
    double acc = 0.0;
    for (int k = 0; k < S; ++k)
      acc += inst.scenario_weight(k) * ((m1.col(k) - m2.col(k)).squaredNorm() + (l1.col(k) - l2.col(k)).squaredNorm());
    return std::sqrt(acc);
  };

  SolveResult best;
  double best_residual = kInfinity;
  DivergenceMonitor monitor;
  SolveStatus status = SolveStatus::IterationCap;
  int it = 0;

  // Running averages since the last restart, and the restart anchor.
  PrimalPoint sum_x = PrimalPoint::zeros(inst);
  ScenarioArray sum_mu = ScenarioArray::Zero(n, S);
  ScenarioArray sum_lam = ScenarioArray::Zero(n, S);
  int averaged = 0;
  int restart_at = 0;
  PrimalPoint anchor_x = x;
  ScenarioArray anchor_mu = mu;
  ScenarioArray anchor_lam = lam;
  double anchor_error = kInfinity;
  double previous_candidate_error = kInfinity;
  int restarts = 0;

  PrimalPoint next = x;
  ScenarioArray ainv_next(n, S);
  for (it = 1; it <= params.max_iters; ++it) {
    // Primal step: x+ = prox_{tau f}(x - tau K* (mu, lam)); K* uses lambda_e = A^{-1} mu.
    Vector grad1 = -expectation(inst, lambda_e) + shift_linear;
    next.x1 = ((x.x1 - tau * grad1 + tau * prox_r * prox_center) / (1.0 + tau * inst.alpha + tau * prox_r))
                  .cwiseMax(inst.c1_lo)
                  .cwiseMin(inst.c1_hi);
    for (int k = 0; k < S; ++k) {
      next.y.col(k) = ((x.y.col(k) - tau * (mu.col(k) + lam.col(k)) + tau * inst.target) / (1.0 + tau))
                          .cwiseMax(-M)
                          .cwiseMin(M);
      if (slack)
        next.z.col(k) =
            ((x.z.col(k) + tau * lam.col(k)) / (1.0 + tau * inst.alpha_prime)).cwiseMax(-M).cwiseMin(M);
    }

    // Dual step at the extrapolated point.
    for (int k = 0; k < S; ++k) {
      ainv_next.col(k) = inst.solver(k).apply_inverse(next.x1);
      Vector ybar = 2.0 * next.y.col(k) - x.y.col(k);
      Vector eq = ybar - (2.0 * ainv_next.col(k) - ainv_x1.col(k)) - g_pre.col(k);
      mu.col(k) += sigma * eq;
      Vector ineq = ybar - inst.obstacles.col(k);
      if (slack) ineq -= 2.0 * next.z.col(k) - x.z.col(k);
      lam.col(k) = (lam.col(k) + sigma * ineq).cwiseMax(0.0);
      lambda_e.col(k) = inst.solver(k).apply_inverse(mu.col(k));
    }
    std::swap(x, next);
    std::swap(ainv_x1, ainv_next);

    if (params.adaptive_restarts) {
      sum_x.x1 += x.x1;
      sum_x.y += x.y;
      sum_x.z += x.z;
      sum_mu += mu;
      sum_lam += lam;
      ++averaged;
    }

    if (it % params.check_interval != 0 && it != params.max_iters) continue;

    DualPoint dual{lambda_e, lam, extract_rho(inst, lambda_e)};
    KktReport res = kkt_residuals_only(inst, x, dual, shift);
    double worst = res.max_residual();
    if (params.on_iteration) {
      IterationRecord rec{it, res, objective(inst, x), shifted ? 0.0 : dual_function(inst, dual)};
      params.on_iteration(rec);
    }
    if (!std::isfinite(worst)) {
      status = SolveStatus::Failure;
      break;
    }

    // Restart candidate: the better of the current and the averaged iterate.
    bool use_average = false;
    PrimalPoint avg_x;
    ScenarioArray avg_mu, avg_lam, avg_le;
    DualPoint avg_dual;
    if (params.adaptive_restarts && averaged > 1) {
      const double inv = 1.0 / averaged;
      avg_x.x1 = sum_x.x1 * inv;
      avg_x.y = sum_x.y * inv;
      avg_x.z = sum_x.z * inv;
      avg_mu = sum_mu * inv;
      avg_lam = sum_lam * inv;
      avg_le.resize(n, S);
      for (int k = 0; k < S; ++k) avg_le.col(k) = inst.solver(k).apply_inverse(avg_mu.col(k));
      avg_dual = DualPoint{avg_le, avg_lam, extract_rho(inst, avg_le)};
      const double avg_worst = kkt_residuals_only(inst, avg_x, avg_dual, shift).max_residual();
      if (avg_worst < worst) {
        use_average = true;
        worst = avg_worst;
      }
    }

    if (worst < best_residual) {
      best_residual = worst;
      best.primal = use_average ? avg_x : x;
      best.dual = use_average ? avg_dual : dual;
    }
    if (worst <= params.kkt_tolerance) {
      status = SolveStatus::Converged;
      break;
    }
    if (params.detect_infeasibility && !slack) {
      const double primal_res = std::max(res.r4, res.r5_feas);
      const double dual_norm = std::sqrt(lambda_e.squaredNorm() + lam.squaredNorm());
      if (monitor.observe(it, dual_norm, primal_res)) {
        status = SolveStatus::InfeasibleSuspected;
        break;
      }
    }

    if (params.adaptive_restarts) {
      const bool sufficient = worst <= 0.2 * anchor_error;
      const bool necessary = worst <= 0.8 * anchor_error && worst > previous_candidate_error;
      const bool artificial = it - restart_at >= 0.36 * it && it >= 10 * params.check_interval;
      previous_candidate_error = worst;
      if (sufficient || necessary || artificial || anchor_error == kInfinity) {
        if (use_average) {
          x = std::move(avg_x);
          mu = std::move(avg_mu);
          lam = std::move(avg_lam);
          lambda_e = std::move(avg_le);
          for (int k = 0; k < S; ++k) ainv_x1.col(k) = inst.solver(k).apply_inverse(x.x1);
        }
        if (anchor_error != kInfinity) {
          const double dx = primal_dist(x, anchor_x);
          const double dy = dual_dist(mu, lam, anchor_mu, anchor_lam);
          if (dx > 1e-10 && dy > 1e-10) {
            omega = std::exp(0.5 * std::log(dx / dy) + 0.5 * std::log(omega));
            tau = std::sqrt(params.step_safety) * omega / knorm;
            sigma = std::sqrt(params.step_safety) / (omega * knorm);
          }
        }
        anchor_x = x;
        anchor_mu = mu;
        anchor_lam = lam;
        anchor_error = worst;
        previous_candidate_error = kInfinity;
        restart_at = it;
        sum_x = PrimalPoint::zeros(inst);
        sum_mu.setZero();
        sum_lam.setZero();
        averaged = 0;
        ++restarts;
      }
    }
  }

  SolveResult out;
  if (best_residual == kInfinity) {
    out.primal = x;
    out.dual = DualPoint{lambda_e, lam, extract_rho(inst, lambda_e)};
  } else {
    out.primal = std::move(best.primal);
    out.dual = std::move(best.dual);
  }
  out.report.algorithm = slack ? "pdhg" : "pdhg-hard";
  out.report.iterations = std::min(it, params.max_iters);
  out.report.status = status;
  if (shifted) {
    out.report.kkt = kkt_residuals_only(inst, out.primal, out.dual, shift);
    out.report.kkt.objective = objective(inst, out.primal);
  } else {
    out.report.kkt = kkt_residuals(inst, out.primal, out.dual);
  }
  out.report.objective = out.report.kkt.objective;
  out.report.dual_value = out.report.kkt.dual_value;
  char buf[128];
  std::snprintf(buf, sizeof buf, "operator norm %.6g; restarts %d; primal weight %.6g", knorm, restarts, omega);
  out.report.message = buf;
  if (status == SolveStatus::InfeasibleSuspected)
    out.report.message += "; multipliers grow linearly while the primal residual stalls";
  out.report.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return out;
}

SolveResult solve_hard(const Instance& inst, const SolverParams& params, const Iterate* warm_start) {
  if (inst.slack()) throw PreconditionError("solve_hard requires a hard-mode instance");
  return solve_pdhg(inst, params, warm_start);
}

}  // namespace sassc
