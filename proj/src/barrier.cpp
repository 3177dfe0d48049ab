#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sassc/errors.hpp"
#include "sassc/solvers.hpp"

namespace sassc {

namespace {

using Dense = Eigen::MatrixXd;

/// Primal log-barrier for the whole deterministic equivalent. Every barrier
/// term carries the measure weight of its constraint (h^2 or p_k h^2), so the
/// obstacle multiplier density is simply mu / slack.
class BarrierProblem {
 public:
  BarrierProblem(const Instance& inst) : inst_(inst), n_(inst.nodes()), S_(inst.scenarios()) {
    slack_ = inst.slack();
    dense_ops_.reserve(static_cast<std::size_t>(S_));
    for (int k = 0; k < S_; ++k) dense_ops_.emplace_back(Dense(inst.op(k).matrix()));
  }

  int variables() const { return n_ * (slack_ ? 1 + 2 * S_ : 1 + S_); }

  Vector x1(const Vector& v) const { return v.head(n_); }
  Eigen::Ref<const Vector> y(const Vector& v, int k) const { return v.segment(n_ + k * n_, n_); }
  Eigen::Ref<const Vector> z(const Vector& v, int k) const { return v.segment(n_ + n_ * S_ + k * n_, n_); }

  /// Obstacle slack psi + z - y (hard: psi - y).
  Vector obstacle_slack(const Vector& v, int k) const {
    Vector s = inst_.obstacles.col(k) - y(v, k);
    if (slack_) s += z(v, k);
    return s;
  }

  bool strictly_interior(const Vector& v) const {
    const double M = inst_.c2_bound;
    if (((x1(v) - inst_.c1_lo).array() <= 0.0).any() || ((inst_.c1_hi - x1(v)).array() <= 0.0).any()) return false;
    for (int k = 0; k < S_; ++k) {
      if ((y(v, k).cwiseAbs().array() >= M).any()) return false;
      if (slack_ && (z(v, k).cwiseAbs().array() >= M).any()) return false;
      if ((obstacle_slack(v, k).array() <= 0.0).any()) return false;
    }
    return true;
  }

  /// Largest t in (0, 1] keeping v + t dv strictly inside (fraction to boundary 0.99).
  double max_step(const Vector& v, const Vector& dv) const {
    double t = 1.0;
    auto limit = [&](double s, double ds) {
      if (ds < 0.0) t = std::min(t, -0.99 * s / ds);
    };
    const double M = inst_.c2_bound;
    for (int i = 0; i < n_; ++i) {
      limit(v[i] - inst_.c1_lo[i], dv[i]);
      limit(inst_.c1_hi[i] - v[i], -dv[i]);
    }
    for (int k = 0; k < S_; ++k) {
      for (int i = 0; i < n_; ++i) {
        const int iy = n_ + k * n_ + i;
        limit(M - v[iy], -dv[iy]);
        limit(M + v[iy], dv[iy]);
        double s = inst_.obstacles(i, k) - v[iy];
        double ds = -dv[iy];
        if (slack_) {
          const int iz = n_ + n_ * S_ + k * n_ + i;
          limit(M - v[iz], -dv[iz]);
          limit(M + v[iz], dv[iz]);
          s += v[iz];
          ds += dv[iz];
        }
        limit(s, ds);
      }
    }
    return t;
  }

  /// Gradient of the barrier objective and its block-diagonal Hessian:
  /// diagonal entries plus one (y, z) coupling per scenario node.
  void derivatives(const Vector& v, double mu, Vector& grad, Vector& diag, Vector& coupling) const {
    const double M = inst_.c2_bound;
    const double h2 = inst_.grid.cell_weight();
    grad.resize(v.size());
    diag.resize(v.size());
    coupling = Vector::Zero(n_ * S_);
    for (int i = 0; i < n_; ++i) {
      const double a = v[i] - inst_.c1_lo[i];
      const double b = inst_.c1_hi[i] - v[i];
      grad[i] = h2 * (inst_.alpha * v[i] - mu / a + mu / b);
      diag[i] = h2 * (inst_.alpha + mu / (a * a) + mu / (b * b));
    }
    for (int k = 0; k < S_; ++k) {
      const double w = inst_.scenario_weight(k);
      const Vector s = obstacle_slack(v, k);
      for (int i = 0; i < n_; ++i) {
        const int iy = n_ + k * n_ + i;
        const double yv = v[iy];
        const double si = s[i];
        grad[iy] = w * ((yv - inst_.target[i]) + mu / (M - yv) - mu / (M + yv) + mu / si);
        diag[iy] = w * (1.0 + mu / ((M - yv) * (M - yv)) + mu / ((M + yv) * (M + yv)) + mu / (si * si));
        if (slack_) {
          const int iz = n_ + n_ * S_ + k * n_ + i;
          const double zv = v[iz];
          grad[iz] = w * (inst_.alpha_prime * zv + mu / (M - zv) - mu / (M + zv) - mu / si);
          diag[iz] = w * (inst_.alpha_prime + mu / ((M - zv) * (M - zv)) + mu / ((M + zv) * (M + zv)) +
                          mu / (si * si));
          coupling[k * n_ + i] = -w * mu / (si * si);
        }
      }
    }
  }

  /// E v - b, rows (k, i): (A_k y_k)_i - x1_i - g_ki.
  Vector equality_residual(const Vector& v) const {
    Vector r(n_ * S_);
    for (int k = 0; k < S_; ++k)
      r.segment(k * n_, n_) = inst_.op(k).apply(y(v, k)) - x1(v) - inst_.loads.col(k);
    return r;
  }

  /// E^T nu
  Vector equality_adjoint(const Vector& nu) const {
    Vector out = Vector::Zero(variables());
    for (int k = 0; k < S_; ++k) {
      const auto nk = nu.segment(k * n_, n_);
      out.head(n_) -= nk;
      out.segment(n_ + k * n_, n_) = inst_.op(k).apply(nk);
    }
    return out;
  }

  /// Applies H^{-1}; also returns the (y, y) entries of the inverse blocks.
  Vector apply_hessian_inverse(const Vector& diag, const Vector& coupling, const Vector& r,
                               Vector* yy_inverse = nullptr) const {
    Vector out(r.size());
    out.head(n_) = r.head(n_).cwiseQuotient(diag.head(n_));
    if (yy_inverse) yy_inverse->resize(n_ * S_);
    for (int k = 0; k < S_; ++k) {
      for (int i = 0; i < n_; ++i) {
        const int iy = n_ + k * n_ + i;
        if (!slack_) {
          out[iy] = r[iy] / diag[iy];
          if (yy_inverse) (*yy_inverse)[k * n_ + i] = 1.0 / diag[iy];
          continue;
        }
        const int iz = n_ + n_ * S_ + k * n_ + i;
        const double a = diag[iy];
        const double d = diag[iz];
        const double c = coupling[k * n_ + i];
        const double det = a * d - c * c;
        out[iy] = (d * r[iy] - c * r[iz]) / det;
        out[iz] = (a * r[iz] - c * r[iy]) / det;
        if (yy_inverse) (*yy_inverse)[k * n_ + i] = d / det;
      }
    }
    return out;
  }

  /// Schur complement E H^{-1} E^T = blockdiag(A_k D_k A_k) + 11^T (x) D_1.
  Dense schur(const Vector& diag, const Vector& yy_inverse) const {
    Dense s = Dense::Zero(n_ * S_, n_ * S_);
    const Vector d1 = diag.head(n_).cwiseInverse();
    for (int k = 0; k < S_; ++k) {
      const auto& a = dense_ops_[static_cast<std::size_t>(k)];
      s.block(k * n_, k * n_, n_, n_) = a * yy_inverse.segment(k * n_, n_).asDiagonal() * a.transpose();
      for (int l = 0; l < S_; ++l) s.block(k * n_, l * n_, n_, n_).diagonal() += d1;
    }
    return s;
  }

  Vector initial_point() const {
    Vector v = Vector::Zero(variables());
    const Vector mid = 0.5 * (inst_.c1_lo + inst_.c1_hi);
    v.head(n_) = mid;
    const double M = inst_.c2_bound;
    if (slack_) {
      // PDE states pulled into the inner half of C2, slack centred in its
      // feasible interval; Newton repairs the equality rows.
      for (int k = 0; k < S_; ++k) {
        Vector y = inst_.solver(k).solve(mid + inst_.loads.col(k)).cwiseMax(-0.5 * M).cwiseMin(0.5 * M);
        Vector lo = (y - inst_.obstacles.col(k)).cwiseMax(-M);
        if ((lo.array() >= M).any())
          throw SolverFailure("obstacle too far below the state box for a strictly feasible slack",
                              lo.maxCoeff() - M);
        v.segment(n_ + k * n_, n_) = y;
        v.segment(n_ + n_ * S_ + k * n_, n_) = 0.5 * (lo + Vector::Constant(n_, M));
      }
    } else {
      for (int k = 0; k < S_; ++k) {
        Vector upper = inst_.obstacles.col(k).cwiseMin(M);
        if ((upper.array() <= -M).any())
          throw SolverFailure("obstacle lies below the state box; hard problem infeasible", upper.minCoeff() + M);
        v.segment(n_ + k * n_, n_) = 0.5 * (upper - Vector::Constant(n_, M));
      }
    }
    if (!strictly_interior(v)) throw SolverFailure("barrier start is not strictly interior (degenerate C1?)", 0.0);
    return v;
  }

  const Instance& inst() const { return inst_; }
  int n() const { return n_; }
  int S() const { return S_; }

 private:
  const Instance& inst_;
  int n_;
  int S_;
  bool slack_;
  std::vector<Dense> dense_ops_;
};

double residual_norm(const BarrierProblem& bp, const Vector& v, const Vector& nu, double mu) {
  Vector grad, diag, coupling;
  bp.derivatives(v, mu, grad, diag, coupling);
  return std::sqrt((grad + bp.equality_adjoint(nu)).squaredNorm() + bp.equality_residual(v).squaredNorm());
}

}  // namespace

SolveResult solve_barrier_reference(const Instance& inst, const SolverParams& params) {
  validate_params(params);
  const auto t0 = std::chrono::steady_clock::now();
  BarrierProblem bp(inst);
  if (bp.variables() > kBarrierMaxVariables)
    throw PreconditionError("barrier oracle is limited to " + std::to_string(kBarrierMaxVariables) +
                            " variables, instance has " + std::to_string(bp.variables()));

  const int n = bp.n();
  const int S = bp.S();
  Vector v = bp.initial_point();
  Vector nu = Vector::Zero(n * S);
  double mu = params.barrier_mu0;
  int newton_total = 0;
  // Stopping scale: residual entries carry weights of order h^2 p_k.
  const double scale = inst.grid.cell_weight() / S;

  while (true) {
    int steps = 0;
    for (; steps < params.barrier_max_newton; ++steps) {
      Vector grad, diag, coupling;
      bp.derivatives(v, mu, grad, diag, coupling);
      const Vector rd = grad + bp.equality_adjoint(nu);
      const Vector rp = bp.equality_residual(v);
      const double rnorm = std::sqrt(rd.squaredNorm() + rp.squaredNorm());
      if (rd.lpNorm<Eigen::Infinity>() <= 1e-11 * scale && rp.lpNorm<Eigen::Infinity>() <= 1e-11) break;

      Vector yy_inv;
      const Vector hinv_grad = bp.apply_hessian_inverse(diag, coupling, grad, &yy_inv);
      Dense schur = bp.schur(diag, yy_inv);
      Eigen::LLT<Dense> llt(schur);
      double shift = 0.0;
      while (llt.info() != Eigen::Success) {
        shift = shift == 0.0 ? 1e-14 * schur.diagonal().maxCoeff() : 10.0 * shift;
        if (shift > 1e-4 * schur.diagonal().maxCoeff())
          throw SolverFailure("barrier Newton system not positive definite after regularization", rnorm);
        llt.compute(schur + shift * Dense::Identity(schur.rows(), schur.cols()));
      }
      // Block elimination of [H E^T; E 0][dv; nu+] = [-grad; -rp].
      Vector e_hinv_grad(n * S);
      for (int k = 0; k < S; ++k)
        e_hinv_grad.segment(k * n, n) =
            inst.op(k).apply(hinv_grad.segment(n + k * n, n)) - hinv_grad.head(n);
      const Vector nu_plus = llt.solve(-e_hinv_grad + rp);
      const Vector dv = bp.apply_hessian_inverse(diag, coupling, -grad - bp.equality_adjoint(nu_plus));
      const Vector dnu = nu_plus - nu;

      double t = bp.max_step(v, dv);
      while (true) {
        Vector vt = v + t * dv;
        Vector nut = nu + t * dnu;
        if (bp.strictly_interior(vt) && residual_norm(bp, vt, nut, mu) <= (1.0 - 0.01 * t) * rnorm) {
          v = std::move(vt);
          nu = std::move(nut);
          break;
        }
        t *= 0.5;
        if (t < 1e-12) {
          // Stagnation at roundoff level: accept the current point.
          steps = params.barrier_max_newton;
          break;
        }
      }
      ++newton_total;
    }
    if (mu <= params.barrier_mu_final * (1.0 + 1e-12)) break;
    mu = std::max(mu * params.barrier_shrink, params.barrier_mu_final);
  }

  SolveResult out;
  out.primal = PrimalPoint::zeros(inst);
  out.primal.x1 = v.head(n);
  out.dual = DualPoint::zeros(inst);
  for (int k = 0; k < S; ++k) {
    out.primal.y.col(k) = bp.y(v, k);
    if (inst.slack()) out.primal.z.col(k) = bp.z(v, k);
    const double w = inst.scenario_weight(k);
    out.dual.lambda_e.col(k) = nu.segment(k * n, n) / w;
    out.dual.lambda_i.col(k) = bp.obstacle_slack(v, k).cwiseInverse() * mu;
  }
  out.dual.rho = extract_rho(inst, out.dual.lambda_e);

  out.report.algorithm = "barrier";
  out.report.iterations = newton_total;
  out.report.kkt = kkt_residuals(inst, out.primal, out.dual);
  out.report.objective = out.report.kkt.objective;
  out.report.dual_value = out.report.kkt.dual_value;
  const double bound = 10.0 * std::sqrt(params.barrier_mu_final);
  out.report.status = out.report.kkt.max_residual() <= bound ? SolveStatus::Converged : SolveStatus::Failure;
  out.report.message = "terminal mu " + std::to_string(mu);
  out.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace sassc
