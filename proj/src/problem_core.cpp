#include "sassc/problem_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sassc/errors.hpp"
#include "sassc/parallel.hpp"

namespace sassc {

InstanceConfig default_instance_config() {
  InstanceConfig c;
  c.n1d = 16;
  c.scenario_count = 8;
  c.seed = 7;
  c.coefficient = {1.0, {{0.4, 1, 1}, {0.3, 2, 1}, {0.3, 1, 2}, {0.2, 2, 2}}, ClipBounds{0.5, 2.0}};
  c.load = {1.0, {{0.5, 1, 1}, {0.3, 1, 2}}, std::nullopt};
  c.obstacle = {0.3, {{0.05, 1, 1}, {0.03, 2, 2}}, std::nullopt};
  c.c1_lo = {-50.0};
  c.c1_hi = {50.0};
  c.c2_bound = 10.0;
  c.target = FieldSpec{0.0, {{1.0, 1, 1}}, std::nullopt};
  c.alpha = 1e-2;
  c.alpha_prime = 100.0;
  c.mode = ConstraintMode::Slack;
  return c;
}

InstanceConfig tiny_instance_config(std::uint64_t seed) {
  InstanceConfig c = default_instance_config();
  c.n1d = 4;
  c.scenario_count = 3;
  c.seed = seed;
  // Coarse-grid states sit lower; this keeps the obstacle binding on every seed.
  c.obstacle.base = 0.2;
  return c;
}

namespace {

Vector broadcast(const std::vector<double>& values, int n, const char* name) {
  if (values.size() == 1) return Vector::Constant(n, values.front());
  if (values.size() == static_cast<std::size_t>(n))
    return Eigen::Map<const Vector>(values.data(), n);
  throw InputError(std::string(name) + " must hold one value or one value per node");
}

bool has_negative(const ScenarioArray& a) { return a.size() > 0 && a.minCoeff() < 0.0; }

}  // namespace

void validate_config(const InstanceConfig& c) {
  if (c.n1d < 1) throw InputError("grid.n1d must be >= 1");
  if (c.scenario_count < 1) throw InputError("scenario count must be >= 1");
  validate_field_spec(c.coefficient, true);
  validate_field_spec(c.load, false);
  validate_field_spec(c.obstacle, false);
  const int n = c.n1d * c.n1d;
  Vector lo = broadcast(c.c1_lo, n, "c1.lo");
  Vector hi = broadcast(c.c1_hi, n, "c1.hi");
  if (!lo.allFinite() || !hi.allFinite())
    throw InputError("C1 must be bounded: c1.lo and c1.hi must be finite");
  if ((lo.array() > hi.array()).any())
    throw InputError("C1 must be nonempty (closed convex nonempty sets): c1.lo <= c1.hi required");
  if (!(c.c2_bound > 0.0) || !std::isfinite(c.c2_bound))
    throw InputError("C2 must be a nonempty bounded box: c2.M must be positive and finite");
  if (!(c.alpha > 0.0)) throw InputError("alpha must be positive");
  if (!(c.alpha_prime > 0.0)) throw InputError("alpha_prime must be positive");
  if (const auto* arr = std::get_if<std::vector<double>>(&c.target)) {
    if (arr->size() != static_cast<std::size_t>(n)) throw InputError("y_D array length must equal n1d^2");
  } else {
    validate_field_spec(std::get<FieldSpec>(c.target), false);
  }
}

Instance build_instance(const InstanceConfig& config) {
  validate_config(config);
  Instance inst;
  inst.config = config;
  inst.grid = Grid(config.n1d);
  const int n = inst.grid.size();
  const int S = config.scenario_count;

  ScenarioSet set = sample_scenarios(config.coefficient, config.load, config.obstacle, S, config.seed,
                                     config.probabilities);
  auto fields = realize_fields(set, inst.grid);
  inst.probabilities = set.probabilities();
  inst.ellipticity = ellipticity_report(fields);
  inst.loads.resize(n, S);
  inst.obstacles.resize(n, S);
  inst.operators.resize(static_cast<std::size_t>(S));
  parallel_for(static_cast<std::size_t>(S), [&](std::size_t k) {
    inst.operators[k] = std::make_shared<const ScenarioOperator>(
        assemble_operator(inst.grid, fields[k].coefficient));
  });
  for (int k = 0; k < S; ++k) {
    inst.loads.col(k) = fields[static_cast<std::size_t>(k)].load;
    inst.obstacles.col(k) = fields[static_cast<std::size_t>(k)].obstacle;
  }
  inst.c1_lo = broadcast(config.c1_lo, n, "c1.lo");
  inst.c1_hi = broadcast(config.c1_hi, n, "c1.hi");
  if (const auto* arr = std::get_if<std::vector<double>>(&config.target))
    inst.target = Eigen::Map<const Vector>(arr->data(), n);
  else
    inst.target = realize_deterministic(std::get<FieldSpec>(config.target), inst.grid);
  inst.c2_bound = config.c2_bound;
  inst.alpha = config.alpha;
  inst.alpha_prime = config.alpha_prime;
  inst.mode = config.mode;
  return inst;
}

Instance Instance::scenario_subproblem(int k) const {
  Instance sub = *this;
  sub.probabilities = {1.0};
  sub.operators = {operators[static_cast<std::size_t>(k)]};
  sub.loads = loads.col(k);
  sub.obstacles = obstacles.col(k);
  sub.config.scenario_count = 1;
  sub.config.probabilities.clear();
  return sub;
}

Instance Instance::with_alpha_prime(double value) const {
  if (!(value > 0.0)) throw InputError("alpha_prime must be positive");
  Instance copy = *this;
  copy.alpha_prime = value;
  copy.config.alpha_prime = value;
  return copy;
}

Instance Instance::with_mode(ConstraintMode value) const {
  Instance copy = *this;
  copy.mode = value;
  copy.config.mode = value;
  return copy;
}

PrimalPoint PrimalPoint::zeros(const Instance& inst) {
  const int n = inst.nodes();
  const int S = inst.scenarios();
  return {Vector::Zero(n), ScenarioArray::Zero(n, S), ScenarioArray::Zero(n, S)};
}

DualPoint DualPoint::zeros(const Instance& inst) {
  const int n = inst.nodes();
  const int S = inst.scenarios();
  return {ScenarioArray::Zero(n, S), ScenarioArray::Zero(n, S), ScenarioArray::Zero(n, S)};
}

void check_shapes(const Instance& inst, const PrimalPoint& x) {
  const int n = inst.nodes();
  const int S = inst.scenarios();
  if (x.x1.size() != n || x.y.rows() != n || x.y.cols() != S || x.z.rows() != n || x.z.cols() != S)
    throw InputError("primal point dimensions do not match the instance");
}

void check_shapes(const Instance& inst, const DualPoint& lambda) {
  const int n = inst.nodes();
  const int S = inst.scenarios();
  for (const ScenarioArray* a : {&lambda.lambda_e, &lambda.lambda_i, &lambda.rho})
    if (a->rows() != n || a->cols() != S)
      throw InputError("dual point dimensions do not match the instance");
}

double objective(const Instance& inst, const PrimalPoint& x) {
  const double w = inst.grid.cell_weight();
  double second_stage = 0.0;
  for (int k = 0; k < inst.scenarios(); ++k) {
    double term = 0.5 * (x.y.col(k) - inst.target).squaredNorm();
    if (inst.slack()) term += 0.5 * inst.alpha_prime * x.z.col(k).squaredNorm();
    second_stage += inst.probabilities[static_cast<std::size_t>(k)] * w * term;
  }
  return 0.5 * inst.alpha * w * x.x1.squaredNorm() + second_stage;
}

double pairing(const ScenarioArray& u, const ScenarioArray& lambda, std::span<const double> p, double h) {
  if (u.rows() != lambda.rows() || u.cols() != lambda.cols() ||
      static_cast<std::size_t>(u.cols()) != p.size())
    throw InputError("pairing: shape mismatch");
  double total = 0.0;
  for (Eigen::Index k = 0; k < u.cols(); ++k)
    total += p[static_cast<std::size_t>(k)] * h * h * u.col(k).dot(lambda.col(k));
  return total;
}

Vector expectation(const Instance& inst, const ScenarioArray& v) {
  Vector e = Vector::Zero(v.rows());
  for (int k = 0; k < inst.scenarios(); ++k) e += inst.probabilities[static_cast<std::size_t>(k)] * v.col(k);
  return e;
}

Vector project_c1(const Instance& inst, const Vector& v) {
  return v.cwiseMax(inst.c1_lo).cwiseMin(inst.c1_hi);
}

Vector project_c2(const Instance& inst, const Vector& v) {
  return v.cwiseMax(-inst.c2_bound).cwiseMin(inst.c2_bound);
}

Vector project_koplus(const Vector& v) { return v.cwiseMax(0.0); }

double max_scenario_norm(const Instance& inst, const ScenarioArray& v) {
  double m = 0.0;
  for (Eigen::Index k = 0; k < v.cols(); ++k) m = std::max(m, inst.grid.norm(v.col(k)));
  return m;
}

namespace {

constexpr double kBoxSlack = 1e-12;

bool in_x0(const Instance& inst, const PrimalPoint& x) {
  if ((x.x1.array() < inst.c1_lo.array() - kBoxSlack).any()) return false;
  if ((x.x1.array() > inst.c1_hi.array() + kBoxSlack).any()) return false;
  const double M = inst.c2_bound + kBoxSlack;
  if (x.y.size() > 0 && x.y.cwiseAbs().maxCoeff() > M) return false;
  if (inst.slack() && x.z.size() > 0 && x.z.cwiseAbs().maxCoeff() > M) return false;
  return true;
}

/// sum_i min_{lo_i <= t <= hi_i} (q/2) t^2 + b_i t, computed through the clamp.
double clamped_quadratic_min(double q, const Vector& b, const Vector& lo, const Vector& hi) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double t = std::clamp(-b[i] / q, lo[i], hi[i]);
    total += 0.5 * q * t * t + b[i] * t;
  }
  return total;
}

}  // namespace

double lagrangian(const Instance& inst, const PrimalPoint& x, const DualPoint& lambda) {
  check_shapes(inst, x);
  check_shapes(inst, lambda);
  if (!in_x0(inst, x)) return kInfinity;
  if (has_negative(lambda.lambda_i)) return -kInfinity;
  double value = objective(inst, x);
  for (int k = 0; k < inst.scenarios(); ++k) {
    const double w = inst.scenario_weight(k);
    Vector eq = inst.op(k).apply(x.y.col(k)) - x.x1 - inst.loads.col(k);
    Vector ineq = x.y.col(k) - inst.obstacles.col(k);
    if (inst.slack()) ineq -= x.z.col(k);
    value += w * (lambda.lambda_e.col(k).dot(eq) + lambda.lambda_i.col(k).dot(ineq));
  }
  return value;
}

double dual_function(const Instance& inst, const DualPoint& lambda) {
  check_shapes(inst, lambda);
  if (has_negative(lambda.lambda_i)) return -kInfinity;
  const int n = inst.nodes();
  const double h2 = inst.grid.cell_weight();
  const double M = inst.c2_bound;
  const Vector box_lo = Vector::Constant(n, -M);
  const Vector box_hi = Vector::Constant(n, M);

  // First stage: min over C1 of (alpha/2)|x1|^2 - <E[lambda_e], x1>.
  double value = h2 * clamped_quadratic_min(inst.alpha, -expectation(inst, lambda.lambda_e), inst.c1_lo,
                                            inst.c1_hi);
  for (int k = 0; k < inst.scenarios(); ++k) {
    const auto le = lambda.lambda_e.col(k);
    const auto li = lambda.lambda_i.col(k);
    // (1/2)|y - y_D|^2 + <c, y> = (1/2)|y|^2 + <c - y_D, y> + (1/2)|y_D|^2
    Vector c = inst.op(k).apply(le) + li;
    double term = clamped_quadratic_min(1.0, c - inst.target, box_lo, box_hi) +
                  0.5 * inst.target.squaredNorm();
    if (inst.slack()) term += clamped_quadratic_min(inst.alpha_prime, -li, box_lo, box_hi);
    term -= le.dot(inst.loads.col(k)) + li.dot(inst.obstacles.col(k));
    value += inst.scenario_weight(k) * term;
  }
  return value;
}

bool FeasibilityReport::feasible(const FeasibilityTolerances& tol) const {
  return c1 <= tol.box && y_box <= tol.box && z_box <= tol.box && equality <= tol.equality &&
         inequality <= tol.inequality;
}

FeasibilityReport feasibility_check(const Instance& inst, const PrimalPoint& x) {
  check_shapes(inst, x);
  FeasibilityReport r;
  r.c1 = std::max({0.0, (inst.c1_lo - x.x1).maxCoeff(), (x.x1 - inst.c1_hi).maxCoeff()});
  r.y_box = std::max(0.0, x.y.cwiseAbs().maxCoeff() - inst.c2_bound);
  r.z_box = inst.slack() ? std::max(0.0, x.z.cwiseAbs().maxCoeff() - inst.c2_bound) : 0.0;
  for (int k = 0; k < inst.scenarios(); ++k) {
    Vector eq = inst.op(k).apply(x.y.col(k)) - x.x1 - inst.loads.col(k);
    r.equality_per_scenario.push_back(inst.grid.norm(eq));
    r.equality = std::max(r.equality, r.equality_per_scenario.back());
    Vector ineq = x.y.col(k) - inst.obstacles.col(k);
    if (inst.slack()) ineq -= x.z.col(k);
    r.inequality = std::max(r.inequality, ineq.maxCoeff());
  }
  return r;
}

namespace {

SlaterReport construct_second_stage(const Instance& inst, const Vector& x1, bool count_c1) {
  const int n = inst.nodes();
  const int S = inst.scenarios();
  const double M = inst.c2_bound;
  const double delta = std::min(1.0, 0.5 * M);

  SlaterReport rep;
  rep.candidate = PrimalPoint::zeros(inst);
  rep.candidate.x1 = x1;
  for (int k = 0; k < S; ++k) {
    rep.candidate.y.col(k) = inst.solver(k).solve(x1 + inst.loads.col(k));
    rep.candidate.z.col(k) =
        project_c2(inst, rep.candidate.y.col(k) - inst.obstacles.col(k) + Vector::Constant(n, delta));
  }

  rep.margin = kInfinity;
  auto consider = [&](double value, int scenario, int node, const char* what) {
    if (value < rep.margin) {
      rep.margin = value;
      rep.scenario = scenario;
      rep.node = node;
      rep.binding = what;
    }
  };
  if (count_c1) {
    for (int i = 0; i < n; ++i) {
      consider(x1[i] - inst.c1_lo[i], -1, i, "C1 lower bound");
      consider(inst.c1_hi[i] - x1[i], -1, i, "C1 upper bound");
    }
  }
  for (int k = 0; k < S; ++k) {
    for (int i = 0; i < n; ++i) {
      const double y = rep.candidate.y(i, k);
      const double z = rep.candidate.z(i, k);
      consider(inst.obstacles(i, k) + z - y, k, i, "obstacle");
      consider(M - std::abs(y), k, i, "state box C2");
      consider(M - std::abs(z), k, i, "slack box C2");
    }
  }
  rep.success = rep.margin > 0.0;
  return rep;
}

}  // namespace

SlaterReport slater_check(const Instance& inst) {
  if (!inst.slack()) throw PreconditionError("slater_check requires a slack-mode instance");
  return construct_second_stage(inst, 0.5 * (inst.c1_lo + inst.c1_hi), true);
}

SlaterReport second_stage_construction(const Instance& inst, const Vector& x1) {
  if (!inst.slack()) throw PreconditionError("second-stage construction requires a slack-mode instance");
  if (x1.size() != inst.nodes()) throw InputError("probe dimension does not match the grid");
  return construct_second_stage(inst, x1, false);
}

RecourseReport recourse_probe(const Instance& inst, const std::vector<Vector>& probes) {
  RecourseReport rep;
  rep.no_probes = probes.empty();
  for (const auto& probe : probes) {
    if (probe.size() != inst.nodes()) throw InputError("probe dimension does not match the grid");
    if ((probe.array() < inst.c1_lo.array()).any() || (probe.array() > inst.c1_hi.array()).any())
      throw PreconditionError("recourse probes must lie in C1");
    const bool ok = second_stage_construction(inst, probe).success;
    rep.per_probe.push_back(ok);
    rep.all_succeeded = rep.all_succeeded && ok;
  }
  return rep;
}

}  // namespace sassc
