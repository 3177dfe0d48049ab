#pragma once

// Penalty continuation alpha' -> infinity for the slack formulation, measured
// against the hard-constrained solution.

#include <optional>
#include <string>
#include <vector>

#include "sassc/solvers.hpp"

namespace sassc {

struct HomotopyLevel {
  double alpha_prime = 0.0;
  double ez2 = 0.0;       ///< sum_k p_k |z_k|_h^2
  double dist_x1 = 0.0;   ///< |x1 - x1_hard|_h
  double objective = 0.0;
  double hard_part = 0.0;  ///< objective without the slack penalty
  double kkt_max = 0.0;
  double z_link = 0.0;     ///< max_k |z_k - P_C2(lambda_i,k / alpha')|_h
  SolveStatus status = SolveStatus::Failure;
  int iterations = 0;
};

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

struct HomotopyReport {
  std::vector<double> schedule;
  std::vector<HomotopyLevel> levels;
  std::optional<DecayFit> fit;
  SolveReport reference;
  std::string fit_error;  ///< why fit is absent
};

/// Strictly increasing, positive, at least 3 levels spanning 3 decades.
void validate_schedule(const std::vector<double>& schedule);

/// Solves the hard problem first, then each alpha' level warm-started from
/// the previous one. Non-converged levels are kept but excluded from the fit.
HomotopyReport run_homotopy(const Instance& inst, const std::vector<double>& schedule,
                            const SolverParams& params);

/// OLS of log E|z|^2 on log alpha' over converged levels with E|z|^2 > 0.
DecayFit fit_decay_rate(const HomotopyReport& report);
DecayFit fit_decay_rate(const std::vector<double>& alpha_prime, const std::vector<double>& ez2);

std::string homotopy_csv(const HomotopyReport& report);

}  // namespace sassc
