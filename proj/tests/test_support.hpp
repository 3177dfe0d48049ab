#pragma once

// Random points shared by the property tests.

#include <random>

#include "sassc/problem_core.hpp"

namespace sassc::testing {

inline Vector uniform_vector(int n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

/// x1 uniform in [-spread, spread] (clamped into C1), y from the state equation,
/// z the smallest feasible slack plus a random nonnegative excess.
inline PrimalPoint random_feasible_point(const Instance& inst, std::mt19937_64& rng, double spread = 2.0) {
  const int n = inst.nodes();
  PrimalPoint x = PrimalPoint::zeros(inst);
  x.x1 = project_c1(inst, uniform_vector(n, -spread, spread, rng));
  for (int k = 0; k < inst.scenarios(); ++k) {
    x.y.col(k) = inst.solver(k).solve(x.x1 + inst.loads.col(k));
    if (inst.slack()) {
      Vector need = (x.y.col(k) - inst.obstacles.col(k)).cwiseMax(0.0);
      x.z.col(k) = project_c2(inst, need + uniform_vector(n, 0.0, 0.5, rng));
    }
  }
  return x;
}

/// lambda_e of either sign, lambda_i >= 0; rho = -lambda_e.
inline DualPoint random_dual(const Instance& inst, std::mt19937_64& rng, double scale = 1.0) {
  const int n = inst.nodes();
  DualPoint d = DualPoint::zeros(inst);
  for (int k = 0; k < inst.scenarios(); ++k) {
    d.lambda_e.col(k) = uniform_vector(n, -scale, scale, rng);
    d.lambda_i.col(k) = uniform_vector(n, 0.0, scale, rng);
  }
  d.rho = -d.lambda_e;
  return d;
}

}  // namespace sassc::testing
