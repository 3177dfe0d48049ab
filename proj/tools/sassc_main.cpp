#include <CLI11.hpp>

#include <cstdio>

#include "sassc/commands.hpp"
#include "sassc/errors.hpp"

namespace {

struct Options {
  sassc::RunConfig rc;
  std::string seed;
  std::string schedule;
  std::string levels;
};

void add_common(CLI::App* sub, Options& o, bool instance, bool solver) {
  if (instance) sub->add_option("--instance", o.rc.instance, "instance JSON file");
  sub->add_option("--out", o.rc.out, "output directory")->capture_default_str();
  sub->add_option("--seed", o.seed, "scenario seed override");
  if (solver) {
    sub->add_option("--tol", o.rc.tolerance, "KKT tolerance");
    sub->add_option("--max-iters", o.rc.max_iters, "iteration cap");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage stochastic obstacle control: generate, solve and certify instances"};
  app.require_subcommand(1);
  Options o;
  auto& ov = o.rc.overrides;

  auto* gen = app.add_subcommand("generate", "write an instance file from the default template");
  add_common(gen, o, true, false);
  gen->add_option("--n1d", ov.n1d, "interior nodes per direction");
  gen->add_option("--scenarios", ov.scenarios, "scenario count S");
  gen->add_option("--alpha", ov.alpha, "control cost");
  gen->add_option("--alpha-prime", ov.alpha_prime, "slack penalty");
  gen->add_option("--mode", ov.mode, "slack or hard");
  gen->add_option("--a-min", ov.a_min, "lower clip of the coefficient field");
  gen->add_option("--a-max", ov.a_max, "upper clip of the coefficient field");
  gen->add_option("--c1-lo", ov.c1_lo, "control lower bound");
  gen->add_option("--c1-hi", ov.c1_hi, "control upper bound");
  gen->add_option("--M", ov.c2_bound, "state/slack box half-width");

  auto* solve = app.add_subcommand("solve", "solve an instance");
  add_common(solve, o, true, true);
  solve->add_option("--algorithm", o.rc.algorithm, "pdhg, ph or barrier")->capture_default_str();
  solve->add_option("--ph-penalty", o.rc.ph_penalty, "progressive hedging penalty r");
  solve->add_flag("--history", o.rc.history, "write per-check residuals to history.csv");

  auto* cert = app.add_subcommand("certify", "check KKT conditions of a primal/dual pair");
  add_common(cert, o, true, false);
  cert->add_option("--tol", o.rc.tolerance, "certificate tolerance (default 1e-6)");
  cert->add_option("--primal", o.rc.primal, "primal JSON (default <out>/primal.json)");
  cert->add_option("--dual", o.rc.dual, "dual JSON (default <out>/dual.json)");

  auto* hom = app.add_subcommand("homotopy", "alpha' continuation study");
  add_common(hom, o, true, true);
  hom->add_option("--schedule", o.schedule, "comma-separated alpha' values (default 1,10,100,1000,10000)");

  auto* cmp = app.add_subcommand("compare-oracle", "first-order solver against the barrier oracle");
  add_common(cmp, o, true, true);

  auto* mms = app.add_subcommand("mms", "manufactured-solution convergence study");
  add_common(mms, o, false, false);
  mms->add_option("--levels", o.levels, "comma-separated n1d list (default 7,15,31)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sassc::kExitInputError;
  }

  try {
    o.rc.command = app.get_subcommands().front()->get_name();
    if (!o.seed.empty()) {
      std::size_t used = 0;
      o.rc.seed = std::stoull(o.seed, &used);
      if (used != o.seed.size() || o.seed.front() == '-') throw sassc::InputError("bad --seed");
    }
    if (!o.schedule.empty()) o.rc.schedule = sassc::parse_double_list(o.schedule);
    if (!o.levels.empty()) o.rc.levels = sassc::parse_int_list(o.levels);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return sassc::kExitInputError;
  }
  return sassc::run_command(o.rc);
}
