#include "sassc/grid_pde.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>

#include "sassc/errors.hpp"

namespace sassc {

Grid::Grid(int n1d) : n1d_(n1d), h_(0.0) {
  if (n1d < 1) throw InputError("grid needs at least one interior node per dimension, got " +
                                std::to_string(n1d));
  h_ = 1.0 / static_cast<double>(n1d + 1);
}

std::pair<double, double> Grid::node_coords(int k) const {
  int i = k % n1d_;
  int j = k / n1d_;
  return {(i + 1) * h_, (j + 1) * h_};
}

double Grid::norm(const Vector& u) const { return std::sqrt(inner(u, u)); }

Grid build_grid(int n1d) { return Grid(n1d); }

CoefficientField sample_coefficient(const Grid& grid,
                                    const std::function<double(double, double)>& a) {
  CoefficientField field;
  field.n1d = grid.n1d();
  const int m = grid.extended_n1d();
  field.values.resize(static_cast<std::size_t>(m) * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      field.values[static_cast<std::size_t>(grid.extended_index(i, j))] = a(i * grid.h(), j * grid.h());
  return field;
}

void SparseOperator::write_coordinate(std::ostream& out) const {
  char buf[96];
  for (int r = 0; r < matrix_.outerSize(); ++r) {
    for (Matrix::InnerIterator it(matrix_, r); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", static_cast<int>(it.row()),
                    static_cast<int>(it.col()), it.value());
      out << buf;
    }
  }
}

namespace {

double face_value(double left, double right, FaceAveraging averaging) {
  if (averaging == FaceAveraging::Harmonic) return 2.0 * left * right / (left + right);
  return 0.5 * (left + right);
}

}  // namespace

SparseOperator assemble_operator(const Grid& grid, const CoefficientField& a,
                                 FaceAveraging averaging) {
  const int n1d = grid.n1d();
  if (a.n1d != n1d || a.values.size() != static_cast<std::size_t>((n1d + 2) * (n1d + 2)))
    throw InputError("coefficient field does not match the grid");
  for (double v : a.values) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw EllipticityError("coefficient must be positive and finite everywhere (uniform ellipticity), found " +
                             std::to_string(v));
  }

  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(grid.size()) * 5);
  constexpr int di[4] = {1, -1, 0, 0};
  constexpr int dj[4] = {0, 0, 1, -1};
  for (int j = 0; j < n1d; ++j) {
    for (int i = 0; i < n1d; ++i) {
      const int row = grid.index(i, j);
      const double centre = a.at(i + 1, j + 1);
      double diagonal = 0.0;
      for (int d = 0; d < 4; ++d) {
        const int ni = i + di[d];
        const int nj = j + dj[d];
        const double face = face_value(centre, a.at(ni + 1, nj + 1), averaging) * inv_h2;
        diagonal += face;
        if (ni >= 0 && ni < n1d && nj >= 0 && nj < n1d)
          triplets.emplace_back(row, grid.index(ni, nj), -face);
      }
      triplets.emplace_back(row, row, diagonal);
    }
  }
  SparseOperator::Matrix m(grid.size(), grid.size());
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return SparseOperator(std::move(m), true);
}

struct LinearSolver::Impl {
  using ColMatrix = Eigen::SparseMatrix<double>;
  ColMatrix matrix;
  Eigen::SimplicialLLT<ColMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> cholesky;
  Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  bool direct = true;
};

LinearSolver::LinearSolver(const SparseOperator& op, LinearSolverOptions options)
    : op_(op), options_(options), impl_(std::make_unique<Impl>()) {
  impl_->matrix = op.matrix();
  impl_->direct = op.dimension() <= options.direct_limit;
  if (impl_->direct) {
    impl_->cholesky.compute(impl_->matrix);
    if (impl_->cholesky.info() != Eigen::Success)
      throw SolverFailure("sparse Cholesky failed: operator is not positive definite", NAN);
  } else {
    impl_->cg.setTolerance(options.tolerance);
    impl_->cg.setMaxIterations(options.max_iterations);
    impl_->cg.compute(impl_->matrix);
  }
}

LinearSolver::~LinearSolver() = default;

bool LinearSolver::direct() const noexcept { return impl_->direct; }

Vector LinearSolver::apply_inverse(const Vector& rhs) const {
  if (impl_->direct) return impl_->cholesky.solve(rhs);
  return impl_->cg.solve(rhs);
}

Vector LinearSolver::solve(const Vector& rhs) const {
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return Vector::Zero(rhs.size());
  Vector y = apply_inverse(rhs);
  const double relative = (op_.apply(y) - rhs).norm() / rhs_norm;
  if (!std::isfinite(relative) || relative > options_.tolerance)
    throw SolverFailure("linear solve did not reach the requested tolerance", relative);
  return y;
}

Vector solve_linear(const SparseOperator& a, const Vector& rhs, LinearSolverOptions options) {
  return LinearSolver(a, options).solve(rhs);
}

std::vector<MmsLevel> mms_convergence_study(const std::vector<int>& levels) {
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] <= levels[i - 1]) throw InputError("mms levels must be strictly increasing");

  constexpr double pi = std::numbers::pi;
  std::vector<MmsLevel> table;
  for (int n1d : levels) {
    Grid grid(n1d);
    auto op = assemble_operator(grid, sample_coefficient(grid, [](double, double) { return 1.0; }));
    Vector exact(grid.size());
    for (int k = 0; k < grid.size(); ++k) {
      auto [s1, s2] = grid.node_coords(k);
      exact[k] = std::sin(pi * s1) * std::sin(pi * s2);
    }
    Vector y = solve_linear(op, 2.0 * pi * pi * exact);
    MmsLevel level{n1d, grid.h(), (y - exact).lpNorm<Eigen::Infinity>(), std::nullopt};
    if (!table.empty()) {
      const auto& prev = table.back();
      level.rate = std::log(prev.max_error / level.max_error) / std::log(prev.h / level.h);
    }
    table.push_back(level);
  }
  return table;
}

double operator_norm_estimate(const LinearMap& map, NormEstimateOptions options) {
  const auto& dw = map.domain_weights;
  auto weighted_norm = [&](const Vector& v) { return std::sqrt((dw.array() * v.array().square()).sum()); };

  // Deterministic, non-symmetric start vector.
  Vector v(dw.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i) + 0.3);
  v /= weighted_norm(v);

  double estimate = 0.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    Vector kv = map.forward(v);
    const double rayleigh = (map.range_weights.array() * kv.array().square()).sum();
    const double next = std::sqrt(std::max(rayleigh, 0.0));
    if (next == 0.0) return 0.0;
    Vector w = map.adjoint(kv);
    const double wn = weighted_norm(w);
    if (wn == 0.0) return 0.0;
    v = w / wn;
    const bool settled = it > 0 && std::abs(next - estimate) <= options.relative_change * next;
    estimate = next;
    if (settled) break;
  }
  return estimate * options.safety;
}

}  // namespace sassc
