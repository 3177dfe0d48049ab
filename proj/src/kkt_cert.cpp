#include "sassc/kkt_cert.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace sassc {

double KktReport::max_residual() const {
  return std::max({r1, r2, r3, r3p, r4, r5_feas, r5_comp, std::max(0.0, -r5_sign)});
}

double KktReport::relative_gap() const { return duality_gap / (1.0 + std::abs(objective)); }

bool KktReport::residuals_pass(double tol) const {
  return r1 <= tol && r2 <= tol && r3 <= tol && r3p <= tol && r4 <= tol && r5_feas <= tol &&
         r5_comp <= tol && r5_sign >= -tol;
}

bool KktReport::certified(double tol) const { return residuals_pass(tol) && duality_gap <= tol * (1.0 + std::abs(objective)); }

Vector FirstStageShift::gradient(const Vector& x1) const {
  Vector g = Vector::Zero(x1.size());
  if (linear.size() > 0) g += linear;
  if (proximal_weight > 0.0) g += proximal_weight * (x1 - center);
  return g;
}

KktReport kkt_residuals_only(const Instance& inst, const PrimalPoint& x, const DualPoint& lambda,
                             const FirstStageShift& shift) {
  check_shapes(inst, x);
  check_shapes(inst, lambda);
  const auto& grid = inst.grid;
  KktReport r;

  Vector grad1 = inst.alpha * x.x1 + expectation(inst, lambda.rho);
  if (shift.active()) grad1 += shift.gradient(x.x1);
  r.r1 = grid.norm(x.x1 - project_c1(inst, x.x1 - grad1));

  double comp = 0.0;
  for (int k = 0; k < inst.scenarios(); ++k) {
    const auto y = x.y.col(k);
    const auto le = lambda.lambda_e.col(k);
    const auto li = lambda.lambda_i.col(k);
    r.r2 = std::max(r.r2, grid.norm(lambda.rho.col(k) + le));

    Vector grad_y = y - inst.target + inst.op(k).apply(le) + li;
    r.r3 = std::max(r.r3, grid.norm(y - project_c2(inst, y - grad_y)));

    Vector slack_part = inst.slack() ? Vector(x.z.col(k)) : Vector::Zero(inst.nodes());
    if (inst.slack()) {
      Vector grad_z = inst.alpha_prime * slack_part - li;
      r.r3p = std::max(r.r3p, grid.norm(slack_part - project_c2(inst, slack_part - grad_z)));
    }

    r.r4 = std::max(r.r4, grid.norm(inst.op(k).apply(y) - x.x1 - inst.loads.col(k)));

    Vector ineq = y - slack_part - inst.obstacles.col(k);
    r.r5_feas = std::max(r.r5_feas, ineq.maxCoeff());
    comp += inst.scenario_weight(k) * li.dot(ineq);
    r.r5_comp_pointwise = std::max(r.r5_comp_pointwise, grid.norm(li.cwiseMin(-ineq)));
  }
  r.r5_feas = std::max(0.0, r.r5_feas);
  r.r5_sign = lambda.lambda_i.size() > 0 ? lambda.lambda_i.minCoeff() : 0.0;
  r.r5_comp = std::abs(comp);
  return r;
}

KktReport kkt_residuals(const Instance& inst, const PrimalPoint& x, const DualPoint& lambda) {
  KktReport r = kkt_residuals_only(inst, x, lambda);
  r.objective = objective(inst, x);
  r.dual_value = dual_function(inst, lambda);
  r.duality_gap = r.objective - r.dual_value;
  auto norms = multiplier_l1_norms(inst, lambda);
  r.l1_lambda_e = norms.lambda_e;
  r.l1_lambda_i = norms.lambda_i;
  r.l1_rho = norms.rho;
  return r;
}

FixedPointResiduals stationarity_fixed_points(const Instance& inst, const PrimalPoint& x,
                                              const DualPoint& lambda) {
  check_shapes(inst, x);
  check_shapes(inst, lambda);
  FixedPointResiduals f;
  const Vector x1_star = project_c1(inst, -expectation(inst, lambda.rho) / inst.alpha);
  f.x1 = inst.grid.norm(x.x1 - x1_star);
  for (int k = 0; k < inst.scenarios(); ++k) {
    const auto le = lambda.lambda_e.col(k);
    const auto li = lambda.lambda_i.col(k);
    Vector y_star = project_c2(inst, inst.target - inst.op(k).apply(le) - li);
    f.y = std::max(f.y, inst.grid.norm(x.y.col(k) - y_star));
    if (inst.slack()) {
      Vector z_star = project_c2(inst, li / inst.alpha_prime);
      f.z = std::max(f.z, inst.grid.norm(x.z.col(k) - z_star));
    }
  }
  return f;
}

double duality_gap(const Instance& inst, const PrimalPoint& x, const DualPoint& lambda) {
  const double g = dual_function(inst, lambda);
  if (g == -kInfinity) return kInfinity;
  return objective(inst, x) - g;
}

MultiplierNorms multiplier_l1_norms(const Instance& inst, const DualPoint& lambda) {
  check_shapes(inst, lambda);
  MultiplierNorms m;
  for (int k = 0; k < inst.scenarios(); ++k) {
    const double w = inst.scenario_weight(k);
    m.lambda_e += w * lambda.lambda_e.col(k).lpNorm<1>();
    m.lambda_i += w * lambda.lambda_i.col(k).lpNorm<1>();
    m.rho += w * lambda.rho.col(k).lpNorm<1>();
  }
  return m;
}

std::string kkt_csv_header() {
  return "r1,r2,r3,r3p,r4,r5_sign,r5_feas,r5_comp,objective,dual_value,duality_gap,l1_lambda_e,"
         "l1_lambda_i,l1_rho";
}

std::string kkt_csv_row(const KktReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.r1,
                r.r2, r.r3, r.r3p, r.r4, r.r5_sign, r.r5_feas, r.r5_comp, r.objective, r.dual_value,
                r.duality_gap, r.l1_lambda_e, r.l1_lambda_i, r.l1_rho);
  return buf;
}

}  // namespace sassc
