#include "sassc/homotopy.hpp"

#include <cmath>
#include <cstdio>

#include "sassc/errors.hpp"

namespace sassc {

void validate_schedule(const std::vector<double>& schedule) {
  if (schedule.size() < 3) throw InputError("homotopy schedule needs at least 3 levels");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0) || !std::isfinite(schedule[i])) throw InputError("alpha' values must be positive");
    if (i > 0 && !(schedule[i] > schedule[i - 1])) throw InputError("homotopy schedule must be strictly increasing");
  }
  if (schedule.back() < 1e3 * schedule.front() * (1.0 - 1e-12))
    throw InputError("homotopy schedule must cover at least three decades");
}

HomotopyReport run_homotopy(const Instance& inst, const std::vector<double>& schedule, const SolverParams& params) {
  if (!inst.slack()) throw PreconditionError("run_homotopy expects a slack-mode instance");
  validate_schedule(schedule);
  validate_params(params);

  HomotopyReport rep;
  rep.schedule = schedule;
  const Instance hard = inst.with_mode(ConstraintMode::Hard);
  SolveResult ref = solve_hard(hard, params);
  rep.reference = ref.report;
  if (!ref.report.converged())
    throw SolverFailure("hard-mode reference did not converge (" + to_string(ref.report.status) + ")",
                        ref.report.kkt.max_residual());

  Iterate warm{ref.primal, ref.dual};
  for (double ap : schedule) {
    const Instance level_inst = inst.with_alpha_prime(ap);
    SolveResult r = solve_pdhg(level_inst, params, &warm);
    HomotopyLevel lv;
    lv.alpha_prime = ap;
    lv.status = r.report.status;
    lv.iterations = r.report.iterations;
    lv.objective = r.report.objective;
    lv.kkt_max = r.report.kkt.max_residual();
    lv.dist_x1 = inst.grid.norm(r.primal.x1 - ref.primal.x1);
    for (int k = 0; k < inst.scenarios(); ++k) {
      const double zn = inst.grid.norm(r.primal.z.col(k));
      lv.ez2 += inst.probabilities[static_cast<std::size_t>(k)] * zn * zn;
      lv.z_link = std::max(lv.z_link, inst.grid.norm(r.primal.z.col(k) -
                                                     project_c2(inst, r.dual.lambda_i.col(k) / ap)));
    }
    lv.hard_part = lv.objective - 0.5 * ap * lv.ez2;
    rep.levels.push_back(lv);
    if (r.report.status == SolveStatus::Converged || r.report.status == SolveStatus::IterationCap)
      warm = Iterate{r.primal, r.dual};
  }
  try {
    rep.fit = fit_decay_rate(rep);
  } catch (const InputError& e) {
    rep.fit_error = e.what();
  }
  return rep;
}

DecayFit fit_decay_rate(const HomotopyReport& report) {
  std::vector<double> a, z;
  for (const auto& lv : report.levels) {
    if (lv.status != SolveStatus::Converged) continue;
    a.push_back(lv.alpha_prime);
    z.push_back(lv.ez2);
  }
  return fit_decay_rate(a, z);
}

DecayFit fit_decay_rate(const std::vector<double>& alpha_prime, const std::vector<double>& ez2) {
  if (alpha_prime.size() != ez2.size()) throw InputError("fit_decay_rate: length mismatch");
  std::vector<double> lx, ly;
  bool any_positive = false;
  for (std::size_t i = 0; i < ez2.size(); ++i) {
    if (ez2[i] > 0.0 && std::isfinite(ez2[i]) && alpha_prime[i] > 0.0) {
      any_positive = true;
      lx.push_back(std::log(alpha_prime[i]));
      ly.push_back(std::log(ez2[i]));
    }
  }
  if (!ez2.empty() && !any_positive) throw InputError("constraint never active");
  if (lx.size() < 3) throw InputError("fit_decay_rate needs at least 3 positive samples");

  const double m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw InputError("fit_decay_rate needs distinct alpha' values");
  DecayFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  f.points = static_cast<int>(lx.size());
  return f;
}

std::string homotopy_csv(const HomotopyReport& report) {
  std::string out = "alpha_prime,Ez2,dist_x1,objective,kkt_max\n";
  char buf[256];
  for (const auto& lv : report.levels) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", lv.alpha_prime, lv.ez2, lv.dist_x1,
                  lv.objective, lv.kkt_max);
    out += buf;
  }
  return out;
}

}  // namespace sassc
