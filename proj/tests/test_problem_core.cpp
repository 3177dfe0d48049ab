#include <doctest.h>

#include <cmath>
#include <random>

#include "sassc/errors.hpp"
#include "sassc/problem_core.hpp"
#include "test_support.hpp"

using namespace sassc;
using sassc::testing::random_dual;
using sassc::testing::random_feasible_point;
using sassc::testing::uniform_vector;

namespace {

// One node, one scenario, explicit target.
Instance single_node(double M = 10.0) {
  InstanceConfig c = default_instance_config();
  c.n1d = 1;
  c.scenario_count = 1;
  c.target = std::vector<double>{0.0};
  c.c2_bound = M;
  c.c1_lo = {-1.0};
  c.c1_hi = {1.0};
  return build_instance(c);
}

}  // namespace

TEST_SUITE("problem_core") {

TEST_CASE("objective examples") {
  auto tiny = build_instance(tiny_instance_config(1));
  PrimalPoint x = PrimalPoint::zeros(tiny);
  for (int k = 0; k < tiny.scenarios(); ++k) x.y.col(k) = tiny.target;
  CHECK(objective(tiny, x) == 0.0);

  auto one = single_node();
  PrimalPoint p = PrimalPoint::zeros(one);
  p.y(0, 0) = 2.0;
  CHECK(objective(one, p) == 0.5);

  // Re-summation node by node.
  std::mt19937_64 rng(4);
  PrimalPoint r = PrimalPoint::zeros(tiny);
  r.x1 = uniform_vector(tiny.nodes(), -1, 1, rng);
  r.y = ScenarioArray::Random(tiny.nodes(), tiny.scenarios());
  r.z = ScenarioArray::Random(tiny.nodes(), tiny.scenarios());
  const double h2 = tiny.grid.h() * tiny.grid.h();
  long double sum = 0.0L;
  for (int i = 0; i < tiny.nodes(); ++i) sum += 0.5L * tiny.alpha * h2 * r.x1[i] * r.x1[i];
  for (int k = 0; k < tiny.scenarios(); ++k)
    for (int i = 0; i < tiny.nodes(); ++i) {
      const long double d = r.y(i, k) - tiny.target[i];
      sum += tiny.probabilities[k] * h2 * 0.5L * (d * d + tiny.alpha_prime * r.z(i, k) * r.z(i, k));
    }
  CHECK(std::abs(objective(tiny, r) - static_cast<double>(sum)) <= 1e-14 * static_cast<double>(sum));
}

TEST_CASE("pairing") {
  const std::vector<double> p(4, 0.25);
  ScenarioArray ones = ScenarioArray::Ones(9, 4);
  CHECK(pairing(ones, ones, p, 0.25) == doctest::Approx(9.0 / 16).epsilon(1e-15));
  CHECK(pairing(ones, ScenarioArray::Zero(9, 4), p, 0.25) == 0.0);
  CHECK_THROWS_AS(pairing(ones, ScenarioArray::Ones(9, 3), p, 0.25), InputError);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int t = 0; t < 100; ++t) {
    ScenarioArray a = ScenarioArray::Random(9, 4), l1 = ScenarioArray::Random(9, 4),
                  l2 = ScenarioArray::Random(9, 4);
    const double s = u(rng), w = u(rng);
    const double lhs = pairing(a, s * l1 + w * l2, p, 0.25);
    const double rhs = s * pairing(a, l1, p, 0.25) + w * pairing(a, l2, p, 0.25);
    CHECK(std::abs(lhs - rhs) <= 1e-13);
    CHECK(pairing(a, l1, p, 0.25) == pairing(l1, a, p, 0.25));
  }
}

TEST_CASE("projections") {
  auto one = build_instance([] {
    InstanceConfig c = default_instance_config();
    c.n1d = 2;
    c.c2_bound = 1.0;
    c.c1_lo = {-1.0, 0.0, 0.0, 0.0};
    c.c1_hi = {1.0, 0.5, 0.5, 0.5};
    return c;
  }());
  Vector v(4);
  v << 1.5, -0.2, -3.0, 0.3;
  Vector c2(4);
  c2 << 1.0, -0.2, -1.0, 0.3;
  CHECK(project_c2(one, v) == c2);
  Vector c1(4);
  c1 << 1.0, 0.0, 0.0, 0.3;
  CHECK(project_c1(one, v) == c1);
  Vector k(3), kk(3);
  k << -1.0, 0.0, 2.0;
  kk << 0.0, 0.0, 2.0;
  CHECK(project_koplus(k) == kk);
  CHECK(project_c2(one, c2) == c2);

  std::mt19937_64 rng(12);
  for (int t = 0; t < 200; ++t) {
    Vector a = uniform_vector(4, -3, 3, rng), b = uniform_vector(4, -3, 3, rng);
    const double d = one.grid.norm(a - b);
    CHECK(one.grid.norm(project_c1(one, a) - project_c1(one, b)) <= d);
    CHECK(one.grid.norm(project_c2(one, a) - project_c2(one, b)) <= d);
    CHECK(one.grid.norm(project_koplus(a) - project_koplus(b)) <= d);
    CHECK(project_c1(one, project_c1(one, a)) == project_c1(one, a));
    CHECK(project_c2(one, project_c2(one, a)) == project_c2(one, a));
    CHECK(project_koplus(project_koplus(a)) == project_koplus(a));
  }
}

TEST_CASE("lagrangian three-valued contract") {
  auto inst = build_instance(tiny_instance_config(1));
  std::mt19937_64 rng(2);
  PrimalPoint x = random_feasible_point(inst, rng);
  DualPoint lam = random_dual(inst, rng);
  const double j = objective(inst, x);

  ScenarioArray ineq = x.y - x.z - inst.obstacles;
  const double L = lagrangian(inst, x, lam);
  CHECK(L <= j + 1e-10);
  CHECK(L == doctest::Approx(j + pairing(ineq, lam.lambda_i, inst.probabilities, inst.grid.h()))
                 .epsilon(1e-10));
  CHECK(lagrangian(inst, x, DualPoint::zeros(inst)) == j);

  DualPoint neg = lam;
  neg.lambda_i(3, 1) = -1e-3;
  CHECK(lagrangian(inst, x, neg) == -kInfinity);

  PrimalPoint out = x;
  out.x1[0] = inst.c1_hi[0] + 1.0;
  CHECK(lagrangian(inst, out, lam) == kInfinity);
  CHECK(lagrangian(inst, out, neg) == kInfinity);
  out = x;
  out.z(0, 0) = inst.c2_bound + 1e-6;
  CHECK(lagrangian(inst, out, lam) == kInfinity);
}

TEST_CASE("dual function") {
  auto inst = build_instance(tiny_instance_config(1));
  REQUIRE(inst.target.lpNorm<Eigen::Infinity>() <= inst.c2_bound);
  CHECK(std::abs(dual_function(inst, DualPoint::zeros(inst))) <= 1e-14);

  std::mt19937_64 rng(6);
  DualPoint neg = random_dual(inst, rng);
  neg.lambda_i(0, 0) = -1.0;
  CHECK(dual_function(inst, neg) == -kInfinity);

  // Closed form against L at the separable minimizer.
  DualPoint lam = random_dual(inst, rng, 0.3);
  PrimalPoint m = PrimalPoint::zeros(inst);
  m.x1 = project_c1(inst, expectation(inst, lam.lambda_e) / inst.alpha);
  for (int k = 0; k < inst.scenarios(); ++k) {
    m.y.col(k) = project_c2(inst, inst.target - inst.op(k).apply(lam.lambda_e.col(k)) - lam.lambda_i.col(k));
    m.z.col(k) = project_c2(inst, lam.lambda_i.col(k) / inst.alpha_prime);
  }
  const double g = dual_function(inst, lam);
  CHECK(g == doctest::Approx(lagrangian(inst, m, lam)).epsilon(1e-12));
  for (int t = 0; t < 50; ++t) {
    PrimalPoint x = PrimalPoint::zeros(inst);
    x.x1 = project_c1(inst, m.x1 + uniform_vector(inst.nodes(), -0.1, 0.1, rng));
    x.y = (m.y + 0.1 * ScenarioArray::Random(inst.nodes(), inst.scenarios()))
              .cwiseMax(-inst.c2_bound).cwiseMin(inst.c2_bound);
    x.z = (m.z + 0.1 * ScenarioArray::Random(inst.nodes(), inst.scenarios()))
              .cwiseMax(-inst.c2_bound).cwiseMin(inst.c2_bound);
    CHECK(lagrangian(inst, x, lam) >= g - 1e-12);
  }
}

TEST_CASE("weak duality fuzz") {
  auto inst = build_instance(tiny_instance_config(1));
  std::mt19937_64 rng(2024);
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    PrimalPoint x = random_feasible_point(inst, rng);
    DualPoint lam = random_dual(inst, rng, t % 2 ? 1.0 : 0.05);
    if (dual_function(inst, lam) > objective(inst, x) + 1e-10) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("dual function is concave along segments") {
  auto inst = build_instance(tiny_instance_config(3));
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    DualPoint a = random_dual(inst, rng), b = random_dual(inst, rng);
    const double s = u(rng);
    DualPoint mid = DualPoint::zeros(inst);
    mid.lambda_e = s * a.lambda_e + (1 - s) * b.lambda_e;
    mid.lambda_i = s * a.lambda_i + (1 - s) * b.lambda_i;
    CHECK(dual_function(inst, mid) >= s * dual_function(inst, a) + (1 - s) * dual_function(inst, b) - 1e-10);
  }
}

TEST_CASE("feasibility check") {
  auto inst = build_instance(tiny_instance_config(2));
  PrimalPoint x = PrimalPoint::zeros(inst);
  for (int k = 0; k < inst.scenarios(); ++k) {
    x.y.col(k) = inst.solver(k).solve(x.x1 + inst.loads.col(k));
    x.z.col(k) = project_c2(inst, (x.y.col(k) - inst.obstacles.col(k)).cwiseMax(0.0));
  }
  auto rep = feasibility_check(inst, x);
  CHECK(rep.equality <= 1e-12);
  CHECK(rep.inequality <= 1e-12);
  CHECK(rep.c1 == 0.0);
  CHECK(rep.feasible());
  CHECK(rep.equality_per_scenario.size() == 3);

  PrimalPoint bad = x;
  bad.y(5, 1) = inst.c2_bound + 10.0;
  auto b = feasibility_check(inst, bad);
  CHECK(b.y_box == doctest::Approx(10.0));
  CHECK(b.equality > 1.0);
  CHECK_FALSE(b.feasible());
}

TEST_CASE("slater check") {
  auto inst = build_instance(default_instance_config());
  auto rep = slater_check(inst);
  const double delta = std::min(1.0, 0.5 * inst.c2_bound);
  CHECK(rep.success);
  CHECK(rep.margin >= 0.5 * delta);

  double ymax = 0.0;
  for (int k = 0; k < inst.scenarios(); ++k)
    ymax = std::max(ymax, rep.candidate.y.col(k).cwiseAbs().maxCoeff());
  InstanceConfig small = default_instance_config();
  small.c2_bound = 0.5 * ymax;
  auto fail = slater_check(build_instance(small));
  CHECK_FALSE(fail.success);
  CHECK(fail.margin <= 0.0);
  CHECK(fail.scenario >= 0);
  CHECK(fail.binding == "state box C2");

  CHECK_THROWS_AS(slater_check(inst.with_mode(ConstraintMode::Hard)), PreconditionError);
}

TEST_CASE("recourse probe") {
  auto inst = build_instance(default_instance_config());
  auto mid = recourse_probe(inst, {0.5 * (inst.c1_lo + inst.c1_hi)});
  CHECK(mid.all_succeeded);
  CHECK_FALSE(mid.no_probes);

  auto none = recourse_probe(inst, {});
  CHECK(none.no_probes);
  CHECK(none.all_succeeded);

  // One node: the state is (x1 + g) / 16, so vertex feasibility is explicit.
  for (double M : {10.0, 0.05}) {
    auto one = single_node(M);
    std::vector<Vector> probes{one.c1_lo, one.c1_hi};
    auto rep = recourse_probe(one, probes);
    REQUIRE(rep.per_probe.size() == 2);
    const double delta = std::min(1.0, 0.5 * M);
    for (std::size_t v = 0; v < 2; ++v) {
      const double y = (probes[v][0] + one.loads(0, 0)) / 16.0;
      const double z = std::clamp(y - one.obstacles(0, 0) + delta, -M, M);
      const bool expected = std::abs(y) < M && std::abs(z) < M && one.obstacles(0, 0) + z - y > 0;
      CHECK(rep.per_probe[v] == expected);
    }
    if (M == 10.0) CHECK(rep.all_succeeded);
    if (M == 0.05) CHECK_FALSE(rep.all_succeeded);
  }

  CHECK_THROWS_AS(recourse_probe(inst, {Vector::Constant(inst.nodes(), 1e3)}), PreconditionError);
}

TEST_CASE("config validation") {
  InstanceConfig c = default_instance_config();
  c.c1_lo = {1.0};
  c.c1_hi = {0.0};
  CHECK_THROWS_AS(validate_config(c), InputError);
  c = default_instance_config();
  c.coefficient.clip = ClipBounds{0.0, 2.0};
  CHECK_THROWS_AS(validate_config(c), EllipticityError);
  c = default_instance_config();
  c.alpha = 0.0;
  CHECK_THROWS_AS(validate_config(c), InputError);
  c = default_instance_config();
  c.c2_bound = -1.0;
  CHECK_THROWS_AS(validate_config(c), InputError);
  c = default_instance_config();
  c.target = std::vector<double>{1.0, 2.0};
  CHECK_THROWS_AS(validate_config(c), InputError);
  CHECK_NOTHROW(validate_config(default_instance_config()));
}

}  // TEST_SUITE
