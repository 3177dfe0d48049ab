#include "sassc/commands.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "sassc/errors.hpp"
#include "sassc/homotopy.hpp"
#include "sassc/io.hpp"

namespace sassc {

namespace {

struct LoadedInstance {
  InstanceConfig config;
  Instance inst;
  std::string sha;
};

LoadedInstance load_instance(const RunConfig& rc) {
  if (rc.instance.empty()) throw InputError("--instance is required for " + rc.command);
  InstanceConfig c = instance_from_json(parse_json(read_file(rc.instance)));
  if (rc.seed) c.seed = *rc.seed;
  LoadedInstance out{c, build_instance(c), instance_hash(c)};
  return out;
}

Json provenance(const LoadedInstance& li) { return {{"instance_sha256", li.sha}, {"seed", li.config.seed}}; }

int exit_for(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return kExitOk;
    case SolveStatus::IterationCap: return kExitIterationCap;
    case SolveStatus::InfeasibleSuspected: return kExitInfeasible;
    case SolveStatus::Failure: return kExitCheckFailed;
  }
  return kExitCheckFailed;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void print_kkt_table(const KktReport& r, double tol) {
  auto row = [&](const char* name, double v, bool ok) {
    std::printf("  %-10s %12.4e  %s\n", name, v, ok ? "ok" : "FAIL");
  };
  row("r1", r.r1, r.r1 <= tol);
  row("r2", r.r2, r.r2 <= tol);
  row("r3", r.r3, r.r3 <= tol);
  row("r3p", r.r3p, r.r3p <= tol);
  row("r4", r.r4, r.r4 <= tol);
  row("r5_sign", r.r5_sign, r.r5_sign >= -tol);
  row("r5_feas", r.r5_feas, r.r5_feas <= tol);
  row("r5_comp", r.r5_comp, r.r5_comp <= tol);
  row("rel_gap", r.relative_gap(), r.relative_gap() <= tol);
  std::printf("  objective %.12g  dual %.12g\n", r.objective, r.dual_value);
}

template <class Fn>
int guarded(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const InputError& e) {
    std::fprintf(stderr, "%s: input error: %s\n", name, e.what());
    return kExitInputError;
  } catch (const PreconditionError& e) {
    std::fprintf(stderr, "%s: %s\n", name, e.what());
    return kExitInputError;
  } catch (const SolverFailure& e) {
    std::fprintf(stderr, "%s: solver failure: %s\n", name, e.what());
    return std::string(e.what()).find("infeasible") != std::string::npos ? kExitInfeasible : kExitCheckFailed;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "%s: %s\n", name, e.what());
    return kExitInputError;
  }
}

}  // namespace

SolverParams params_from(const RunConfig& rc) {
  SolverParams p;
  if (rc.tolerance) p.kkt_tolerance = *rc.tolerance;
  if (rc.max_iters) p.max_iters = *rc.max_iters;
  if (rc.ph_penalty) p.ph_penalty = *rc.ph_penalty;
  validate_params(p);
  return p;
}

int cmd_generate(const RunConfig& rc) {
  return guarded("generate", [&] {
    InstanceConfig c = rc.instance.empty() ? default_instance_config()
                                           : instance_from_json(parse_json(read_file(rc.instance)));
    const auto& o = rc.overrides;
    if (rc.seed) c.seed = *rc.seed;
    if (o.n1d) c.n1d = *o.n1d;
    if (o.scenarios) c.scenario_count = *o.scenarios;
    if (o.alpha) c.alpha = *o.alpha;
    if (o.alpha_prime) c.alpha_prime = *o.alpha_prime;
    if (o.mode) {
      if (*o.mode == "slack")
        c.mode = ConstraintMode::Slack;
      else if (*o.mode == "hard")
        c.mode = ConstraintMode::Hard;
      else
        throw InputError("--mode must be slack or hard");
    }
    if (o.a_min || o.a_max) {
      ClipBounds clip = c.coefficient.clip.value_or(ClipBounds{0.5, 2.0});
      if (o.a_min) clip.lo = *o.a_min;
      if (o.a_max) clip.hi = *o.a_max;
      c.coefficient.clip = clip;
    }
    if (o.c1_lo) c.c1_lo = {*o.c1_lo};
    if (o.c1_hi) c.c1_hi = {*o.c1_hi};
    if (o.c2_bound) c.c2_bound = *o.c2_bound;
    validate_config(c);
    build_instance(c);  // realizes the fields once so bad data fails here
    const std::string text = canonical_dump(instance_to_json(c));
    write_atomic(rc.out / "instance.json", text);
    std::printf("wrote %s sha256 %s\n", (rc.out / "instance.json").c_str(), sha256_hex(text).c_str());
    return kExitOk;
  });
}

int cmd_solve(const RunConfig& rc) {
  return guarded("solve", [&] {
    LoadedInstance li = load_instance(rc);
    SolverParams params = params_from(rc);
    std::string history;
    if (rc.history) {
      history = "iteration," + kkt_csv_header() + "\n";
      params.on_iteration = [&history](const IterationRecord& rec) {
        KktReport r = rec.residuals;
        r.objective = rec.objective;
        r.dual_value = rec.dual_value;
        r.duality_gap = rec.objective - rec.dual_value;
        history += std::to_string(rec.iteration) + "," + kkt_csv_row(r) + "\n";
      };
    }

    const auto t0 = std::chrono::steady_clock::now();
    SolveResult result;
    Json extra = Json::object();
    if (rc.algorithm == "pdhg") {
      result = li.inst.slack() ? solve_pdhg(li.inst, params) : solve_hard(li.inst, params);
    } else if (rc.algorithm == "ph") {
      ProgressiveHedgingResult ph = solve_progressive_hedging(li.inst, params);
      result = std::move(ph.result);
      extra = {{"consensus_residual", ph.consensus_residual},
               {"weight_mean_norm", ph.weight_mean_norm},
               {"projection_active", ph.projection_active},
               {"outer_iterations", ph.outer_iterations}};
      Json weights = Json::array();
      for (Eigen::Index k = 0; k < ph.weights.cols(); ++k) {
        Json col = Json::array();
        for (Eigen::Index i = 0; i < ph.weights.rows(); ++i) col.push_back(ph.weights(i, k));
        weights.push_back(col);
      }
      write_atomic(rc.out / "ph_weights.json", canonical_dump({{"w", weights}}));
    } else if (rc.algorithm == "barrier") {
      result = solve_barrier_reference(li.inst, params);
    } else {
      throw InputError("--algorithm must be pdhg, ph or barrier");
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    Json report = provenance(li);
    report["params"] = params_to_json(params);
    report["report"] = solve_report_to_json(result.report);
    if (!extra.empty()) report["ph"] = extra;
    write_atomic(rc.out / "primal.json", canonical_dump(primal_to_json(result.primal)));
    write_atomic(rc.out / "dual.json", canonical_dump(dual_to_json(result.dual)));
    write_atomic(rc.out / "report.json", canonical_dump(report));
    if (rc.history) write_atomic(rc.out / "history.csv", history);

    std::printf("%s: %s after %d iterations, max residual %.3e, objective %.12g, %.2f s\n",
                result.report.algorithm.c_str(), to_string(result.report.status).c_str(), result.report.iterations,
                result.report.kkt.max_residual(), result.report.objective, wall);
    return exit_for(result.report.status);
  });
}

int cmd_certify(const RunConfig& rc) {
  return guarded("certify", [&] {
    LoadedInstance li = load_instance(rc);
    const auto primal_path = rc.primal.empty() ? rc.out / "primal.json" : rc.primal;
    const auto dual_path = rc.dual.empty() ? rc.out / "dual.json" : rc.dual;
    PrimalPoint x = primal_from_json(li.inst, parse_json(read_file(primal_path)));
    DualPoint d = dual_from_json(li.inst, parse_json(read_file(dual_path)));
    const double tol = rc.tolerance.value_or(1e-6);
    KktReport r = kkt_residuals(li.inst, x, d);
    const bool ok = r.certified(tol);

    Json cert = provenance(li);
    cert["tolerance"] = tol;
    cert["kkt"] = kkt_to_json(r);
    cert["residuals_pass"] = r.residuals_pass(tol);
    cert["certified"] = ok;
    write_atomic(rc.out / "certificate.json", canonical_dump(cert));

    std::printf("KKT certificate at tolerance %.1e\n", tol);
    print_kkt_table(r, tol);
    std::printf("%s\n", ok ? "CERTIFIED" : "NOT CERTIFIED");
    return ok ? kExitOk : kExitCheckFailed;
  });
}

int cmd_homotopy(const RunConfig& rc) {
  return guarded("homotopy", [&] {
    validate_schedule(rc.schedule);
    LoadedInstance li = load_instance(rc);
    if (!li.inst.slack()) throw InputError("homotopy needs a slack-mode instance");
    SolverParams params = params_from(rc);
    HomotopyReport rep = run_homotopy(li.inst, rc.schedule, params);

    bool monotone = true;
    for (std::size_t i = 1; i < rep.levels.size(); ++i)
      monotone = monotone && rep.levels[i].ez2 <= rep.levels[i - 1].ez2 + 2.0 * params.kkt_tolerance;
    const bool slope_ok = rep.fit && rep.fit->slope <= -0.9;
    const bool ok = slope_ok && monotone;

    Json j = provenance(li);
    j["homotopy"] = homotopy_to_json(rep);
    j["ez2_nonincreasing"] = monotone;
    j["slope_bound_met"] = slope_ok;
    write_atomic(rc.out / "homotopy.json", canonical_dump(j));
    write_atomic(rc.out / "homotopy.csv", homotopy_csv(rep));

    std::printf("%-12s %-14s %-12s %-16s %-10s\n", "alpha'", "E|z|^2", "dist_x1", "objective", "kkt_max");
    for (const auto& lv : rep.levels)
      std::printf("%-12g %-14.6e %-12.4e %-16.10g %-10.2e\n", lv.alpha_prime, lv.ez2, lv.dist_x1, lv.objective,
                  lv.kkt_max);
    if (rep.fit)
      std::printf("slope %.4f (R^2 %.4f)\n", rep.fit->slope, rep.fit->r_squared);
    else
      std::printf("no fit: %s\n", rep.fit_error.c_str());
    return ok ? kExitOk : kExitCheckFailed;
  });
}

int cmd_compare_oracle(const RunConfig& rc) {
  return guarded("compare-oracle", [&] {
    LoadedInstance li;
    if (rc.instance.empty()) {
      li.config = tiny_instance_config(rc.seed.value_or(1));
      li.inst = build_instance(li.config);
      li.sha = instance_hash(li.config);
    } else {
      li = load_instance(rc);
    }
    SolverParams params = params_from(rc);
    params.kkt_tolerance = rc.tolerance.value_or(1e-9);
    SolveResult fo = li.inst.slack() ? solve_pdhg(li.inst, params) : solve_hard(li.inst, params);
    SolveResult ref = solve_barrier_reference(li.inst, params);
    const double dx1 = li.inst.grid.norm(fo.primal.x1 - ref.primal.x1);
    const double rel = std::abs(fo.report.objective - ref.report.objective) / std::max(1e-300, std::abs(ref.report.objective));
    const bool ok = fo.report.converged() && ref.report.converged() && dx1 <= 1e-5 && rel <= 1e-7;

    Json j = provenance(li);
    j["pdhg"] = solve_report_to_json(fo.report);
    j["barrier"] = solve_report_to_json(ref.report);
    j["dist_x1"] = dx1;
    j["relative_objective_difference"] = rel;
    j["agree"] = ok;
    write_atomic(rc.out / "compare.json", canonical_dump(j));
    std::string csv = "quantity,pdhg,barrier\n";
    csv += "objective," + fmt("%.17g", fo.report.objective) + "," + fmt("%.17g", ref.report.objective) + "\n";
    csv += "max_residual," + fmt("%.17g", fo.report.kkt.max_residual()) + "," +
           fmt("%.17g", ref.report.kkt.max_residual()) + "\n";
    write_atomic(rc.out / "compare.csv", csv);

    std::printf("|dx1|_h = %.3e, relative objective difference = %.3e -> %s\n", dx1, rel, ok ? "agree" : "DISAGREE");
    return ok ? kExitOk : kExitCheckFailed;
  });
}

int cmd_mms(const RunConfig& rc) {
  return guarded("mms", [&] {
    if (rc.levels.size() < 2) throw InputError("mms needs at least two levels");
    for (int l : rc.levels)
      if (l < 1) throw InputError("mms levels must be positive");
    auto table = mms_convergence_study(rc.levels);
    bool ok = true;
    std::string csv = "n1d,h,max_error,rate\n";
    Json rows = Json::array();
    for (const auto& lv : table) {
      csv += std::to_string(lv.n1d) + "," + fmt("%.17g", lv.h) + "," + fmt("%.17g", lv.max_error) + "," +
             (lv.rate ? fmt("%.17g", *lv.rate) : std::string()) + "\n";
      rows.push_back({{"n1d", lv.n1d}, {"h", lv.h}, {"max_error", lv.max_error},
                      {"rate", lv.rate ? Json(*lv.rate) : Json(nullptr)}});
      if (lv.rate) ok = ok && *lv.rate >= 1.85 && *lv.rate <= 2.15;
      std::printf("n1d %4d  h %.5f  max error %.4e  rate %s\n", lv.n1d, lv.h, lv.max_error,
                  lv.rate ? fmt("%.4f", *lv.rate).c_str() : "-");
    }
    write_atomic(rc.out / "mms.csv", csv);
    write_atomic(rc.out / "mms.json", canonical_dump({{"levels", rows}, {"rates_in_window", ok}}));
    return ok ? kExitOk : kExitCheckFailed;
  });
}

int run_command(const RunConfig& rc) {
  if (rc.command == "generate") return cmd_generate(rc);
  if (rc.command == "solve") return cmd_solve(rc);
  if (rc.command == "certify") return cmd_certify(rc);
  if (rc.command == "homotopy") return cmd_homotopy(rc);
  if (rc.command == "compare-oracle") return cmd_compare_oracle(rc);
  if (rc.command == "mms") return cmd_mms(rc);
  std::fprintf(stderr, "unknown command '%s'\n", rc.command.c_str());
  return kExitInputError;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("not a number: '" + item + "'");
    }
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("not an integer: '" + item + "'");
    }
  }
  return out;
}

}  // namespace sassc
