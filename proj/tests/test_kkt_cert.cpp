#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "sassc/kkt_cert.hpp"
#include "sassc/solvers.hpp"
#include "test_support.hpp"

using namespace sassc;
using sassc::testing::random_dual;
using sassc::testing::random_feasible_point;

namespace {

PrimalPoint exact_state(const Instance& inst, const Vector& x1) {
  PrimalPoint x = PrimalPoint::zeros(inst);
  x.x1 = x1;
  for (int k = 0; k < inst.scenarios(); ++k) {
    x.y.col(k) = inst.solver(k).solve(x1 + inst.loads.col(k));
    x.z.col(k) = project_c2(inst, (x.y.col(k) - inst.obstacles.col(k)).cwiseMax(0.0));
  }
  return x;
}

const SolveResult& oracle(std::uint64_t seed) {
  static std::map<std::uint64_t, SolveResult> cache;
  auto it = cache.find(seed);
  if (it == cache.end())
    it = cache.emplace(seed, solve_barrier_reference(build_instance(tiny_instance_config(seed)), {})).first;
  return it->second;
}

}  // namespace

TEST_SUITE("kkt_cert") {

TEST_CASE("plug-in residuals at a feasible point with zero multipliers") {
  auto inst = build_instance(tiny_instance_config(1));
  Vector x1 = Vector::LinSpaced(inst.nodes(), -0.5, 0.7);
  auto x = exact_state(inst, x1);
  auto r = kkt_residuals(inst, x, DualPoint::zeros(inst));
  CHECK(r.r2 == 0.0);
  CHECK(r.r5_comp == 0.0);
  CHECK(r.r5_sign == 0.0);
  CHECK(r.r4 <= 1e-12);
  CHECK(r.r5_feas <= 1e-12);
  // C1 is inactive, so the residual is |alpha x1|_h.
  CHECK(r.r1 == doctest::Approx(inst.alpha * inst.grid.norm(x1)).epsilon(1e-14));
  CHECK(r.r1 == doctest::Approx(inst.grid.norm(x1 - project_c1(inst, x1 - inst.alpha * x1))).epsilon(1e-14));
  // With the dual at zero the gap is the objective itself.
  CHECK(r.duality_gap == doctest::Approx(r.objective).epsilon(1e-12));
  CHECK(r.l1_lambda_e == 0.0);
}

TEST_CASE("r4 is linear in a single-node state perturbation") {
  auto inst = build_instance(tiny_instance_config(1));
  const auto& sol = oracle(1);
  const double base = kkt_residuals_only(inst, sol.primal, sol.dual).r4;
  REQUIRE(base <= 1e-8);
  const int k = 1, node = 6;
  for (double delta : {1e-2, 1e-3}) {
    PrimalPoint p = sol.primal;
    p.y(node, k) += delta;
    Vector column = inst.op(k).apply(Vector::Unit(inst.nodes(), node));
    Vector residual = inst.op(k).apply(p.y.col(k)) - p.x1 - inst.loads.col(k);
    const double r4 = kkt_residuals_only(inst, p, sol.dual).r4;
    CHECK(r4 == doctest::Approx(inst.grid.norm(residual)).epsilon(1e-14));
    CHECK(std::abs(r4 - delta * inst.grid.norm(column)) <= base + 1e-12);
  }
}

TEST_CASE("closed-form fixed points") {
  auto inst = build_instance(tiny_instance_config(2));
  std::mt19937_64 rng(1);
  PrimalPoint x = random_feasible_point(inst, rng);
  DualPoint lam = DualPoint::zeros(inst);
  auto f = stationarity_fixed_points(inst, x, lam);
  CHECK(f.z == doctest::Approx(max_scenario_norm(inst, x.z)).epsilon(1e-15));

  const double c = 0.37;
  lam.rho.setConstant(-inst.alpha * c);
  x.x1.setConstant(c);
  CHECK(stationarity_fixed_points(inst, x, lam).x1 <= 1e-15);
}

TEST_CASE("oracle pairs certify at 1e-4") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto inst = build_instance(tiny_instance_config(seed));
    const auto& sol = oracle(seed);
    REQUIRE(sol.report.converged());
    auto r = kkt_residuals(inst, sol.primal, sol.dual);
    CAPTURE(seed);
    CHECK(r.residuals_pass(1e-4));
    CHECK(r.relative_gap() <= 1e-5);
    CHECK(r.duality_gap >= -1e-9);
    auto feas = feasibility_check(inst, sol.primal);
    CHECK(feas.c1 <= 1e-8);
    CHECK(feas.y_box <= 1e-8);
    CHECK(feas.z_box <= 1e-8);
    CHECK(feas.equality <= 1e-8);
    CHECK(feas.inequality <= 1e-8);
  }
}

TEST_CASE("small residuals imply a small duality gap") {
  SolverParams params;
  params.kkt_tolerance = 1e-9;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto inst = build_instance(tiny_instance_config(seed));
    auto sol = solve_pdhg(inst, params);
    CAPTURE(seed);
    REQUIRE(sol.report.converged());
    auto r = kkt_residuals(inst, sol.primal, sol.dual);
    REQUIRE(r.max_residual() <= 1e-8);
    CHECK(r.relative_gap() <= 1e-6);
    CHECK(r.duality_gap >= -1e-9);
  }
}

TEST_CASE("gap positivity fuzz") {
  auto inst = build_instance(tiny_instance_config(4));
  std::mt19937_64 rng(99);
  int negative = 0;
  for (int t = 0; t < 1000; ++t) {
    PrimalPoint x = random_feasible_point(inst, rng);
    DualPoint lam = random_dual(inst, rng, 0.2);
    if (duality_gap(inst, x, lam) < -1e-10) ++negative;
  }
  CHECK(negative == 0);
  DualPoint bad = DualPoint::zeros(inst);
  bad.lambda_i(0, 0) = -1.0;
  CHECK(duality_gap(inst, PrimalPoint::zeros(inst), bad) == kInfinity);
}

TEST_CASE("multiplier l1 norms") {
  InstanceConfig c = default_instance_config();
  c.n1d = 3;
  c.scenario_count = 4;
  auto inst = build_instance(c);
  DualPoint lam = DualPoint::zeros(inst);
  auto zero = multiplier_l1_norms(inst, lam);
  CHECK(zero.lambda_e == 0.0);
  CHECK(zero.lambda_i == 0.0);
  CHECK(zero.rho == 0.0);
  lam.lambda_i.setOnes();
  CHECK(multiplier_l1_norms(inst, lam).lambda_i == doctest::Approx(9.0 / 16).epsilon(1e-15));

  std::mt19937_64 rng(3);
  DualPoint r = random_dual(inst, rng);
  auto a = multiplier_l1_norms(inst, r);
  DualPoint s = r;
  s.lambda_e *= -2.5;
  s.lambda_i *= 2.5;
  s.rho *= -2.5;
  auto b = multiplier_l1_norms(inst, s);
  CHECK(b.lambda_e == doctest::Approx(2.5 * a.lambda_e).epsilon(1e-14));
  CHECK(b.lambda_i == doctest::Approx(2.5 * a.lambda_i).epsilon(1e-14));
  CHECK(b.rho == doctest::Approx(2.5 * a.rho).epsilon(1e-14));
}

TEST_CASE("residuals are invariant under rescaled probability weights") {
  InstanceConfig c = tiny_instance_config(1);
  c.probabilities = {0.2, 0.3, 0.5};
  auto inst = build_instance(c);
  InstanceConfig scaled = c;
  for (double& p : scaled.probabilities) p *= 1.0 + 4e-13;
  auto inst2 = build_instance(scaled);
  std::mt19937_64 rng(5);
  PrimalPoint x = random_feasible_point(inst, rng);
  DualPoint lam = random_dual(inst, rng);
  auto a = kkt_residuals(inst, x, lam);
  auto b = kkt_residuals(inst2, x, lam);
  for (auto [u, v] : {std::pair{a.r1, b.r1}, {a.r2, b.r2}, {a.r3, b.r3}, {a.r3p, b.r3p}, {a.r4, b.r4},
                      {a.r5_feas, b.r5_feas}, {a.r5_comp, b.r5_comp}, {a.duality_gap, b.duality_gap}})
    CHECK(std::abs(u - v) <= 1e-13 * std::max(1.0, std::abs(u)));
}

TEST_CASE("hard mode skips the slack residual") {
  auto inst = build_instance(tiny_instance_config(1)).with_mode(ConstraintMode::Hard);
  std::mt19937_64 rng(8);
  DualPoint lam = random_dual(inst, rng);
  auto r = kkt_residuals(inst, PrimalPoint::zeros(inst), lam);
  CHECK(r.r3p == 0.0);
}

TEST_CASE("csv row") {
  KktReport r;
  r.r1 = 0.5;
  r.l1_rho = 2.0;
  const auto header = kkt_csv_header();
  const auto row = kkt_csv_row(r);
  CHECK(header.rfind("r1,r2,", 0) == 0);
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
  CHECK(row.rfind("0.5,0,", 0) == 0);
  CHECK(row.substr(row.size() - 2) == ",2");
}

}  // TEST_SUITE
