#pragma once

// Certification of a primal-dual pair against the optimality system of the
// model problem. Variational inequalities are scored by natural (projection)
// residuals with unit step; every norm is the weighted discrete L2 norm.

#include <string>

#include "sassc/problem_core.hpp"

namespace sassc {

struct KktReport {
  double r1 = 0.0;       ///< |x1 - P_C1(x1 - (alpha x1 + E[rho]))|_h
  double r2 = 0.0;       ///< max_k |rho_k + lambda_e,k|_h
  double r3 = 0.0;       ///< y-stationarity
  double r3p = 0.0;      ///< z-stationarity (0 in hard mode)
  double r4 = 0.0;       ///< max_k |A_k y_k - x1 - g_k|_h
  double r5_sign = 0.0;  ///< min entry of lambda_i
  double r5_feas = 0.0;  ///< max entry of max(0, y - z - psi)
  double r5_comp = 0.0;  ///< |<lambda_i, y - z - psi>|
  double r5_comp_pointwise = 0.0;  ///< max_k |min(lambda_i, psi + z - y)|_h, informational
  double objective = 0.0;
  double dual_value = 0.0;
  double duality_gap = 0.0;  ///< objective - dual_value
  double l1_lambda_e = 0.0;
  double l1_lambda_i = 0.0;
  double l1_rho = 0.0;

  /// Largest of r1..r4, r5_feas, r5_comp and max(0, -r5_sign).
  double max_residual() const;
  double relative_gap() const;
  /// Residual part of the certificate.
  bool residuals_pass(double tol) const;
  /// Residuals plus duality gap <= tol (1 + |objective|).
  bool certified(double tol) const;
};

/// Extra first-stage terms <shift, x1> + (r/2)|x1 - center|^2 carried by a
/// decomposed subproblem; the plain problem uses the default (none).
struct FirstStageShift {
  Vector linear;
  double proximal_weight = 0.0;
  Vector center;

  bool active() const { return linear.size() > 0 || proximal_weight > 0.0; }
  /// Gradient of the extra terms at x1.
  Vector gradient(const Vector& x1) const;
};

/// Residuals only (no dual function evaluation); what solvers poll.
KktReport kkt_residuals_only(const Instance& inst, const PrimalPoint& x, const DualPoint& lambda,
                             const FirstStageShift& shift = {});

/// Full report: residuals, duality gap and L1 norms.
KktReport kkt_residuals(const Instance& inst, const PrimalPoint& x, const DualPoint& lambda);

struct FixedPointResiduals {
  double x1 = 0.0;  ///< |x1 - P_C1(-E[rho]/alpha)|_h
  double y = 0.0;   ///< max_k |y_k - P_C2(y_D - A_k lambda_e,k - lambda_i,k)|_h
  double z = 0.0;   ///< max_k |z_k - P_C2(lambda_i,k / alpha')|_h
};

FixedPointResiduals stationarity_fixed_points(const Instance& inst, const PrimalPoint& x,
                                              const DualPoint& lambda);

/// objective(x) - dual_function(lambda); +inf when lambda_i has a negative entry.
double duality_gap(const Instance& inst, const PrimalPoint& x, const DualPoint& lambda);

struct MultiplierNorms {
  double lambda_e = 0.0;
  double lambda_i = 0.0;
  double rho = 0.0;
};

/// sum_k p_k h^2 sum_i |lambda_ki| for each multiplier.
MultiplierNorms multiplier_l1_norms(const Instance& inst, const DualPoint& lambda);

/// Column order of kkt_csv_row.
std::string kkt_csv_header();
std::string kkt_csv_row(const KktReport& report);

}  // namespace sassc
