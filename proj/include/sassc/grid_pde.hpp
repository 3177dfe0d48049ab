#pragma once

// Finite-difference discretization of -div(a grad y) on the unit square with
// homogeneous Dirichlet data. Unknowns live on interior nodes only, ordered
// lexicographically as i + n1d * j.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace sassc {

using Vector = Eigen::VectorXd;

class Grid {
 public:
  explicit Grid(int n1d);

  int n1d() const noexcept { return n1d_; }
  int size() const noexcept { return n1d_ * n1d_; }
  double h() const noexcept { return h_; }
  /// Weight of one node in the discrete L2 pairing (h^2).
  double cell_weight() const noexcept { return h_ * h_; }

  int index(int i, int j) const noexcept { return i + n1d_ * j; }
  std::pair<double, double> node_coords(int k) const;

  /// Side of the extended lattice that includes the boundary nodes.
  int extended_n1d() const noexcept { return n1d_ + 2; }
  /// Index on the extended lattice; (0,0) is the corner node on the boundary.
  int extended_index(int i, int j) const noexcept { return i + (n1d_ + 2) * j; }

  /// Weighted inner product h^2 * sum u_i v_i.
  double inner(const Vector& u, const Vector& v) const { return cell_weight() * u.dot(v); }
  double norm(const Vector& u) const;

 private:
  int n1d_;
  double h_;
};

Grid build_grid(int n1d);

/// Coefficient values on the extended (n1d+2)^2 lattice, boundary included.
struct CoefficientField {
  int n1d = 0;
  std::vector<double> values;

  double at(int i, int j) const { return values[static_cast<std::size_t>(i + (n1d + 2) * j)]; }
};

/// Samples a(s1, s2) on every node of the extended lattice.
CoefficientField sample_coefficient(const Grid& grid,
                                    const std::function<double(double, double)>& a);

enum class FaceAveraging { Arithmetic, Harmonic };

class SparseOperator {
 public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  SparseOperator() = default;
  SparseOperator(Matrix m, bool symmetric) : matrix_(std::move(m)), symmetric_(symmetric) {}

  int dimension() const noexcept { return static_cast<int>(matrix_.rows()); }
  bool symmetric() const noexcept { return symmetric_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  double entry(int i, int j) const { return matrix_.coeff(i, j); }

  Vector apply(const Vector& v) const { return matrix_ * v; }

  /// Coordinate-format dump: "row col value" per line, 17 significant digits.
  void write_coordinate(std::ostream& out) const;

 private:
  Matrix matrix_;
  bool symmetric_ = false;
};

/// Five-point flux stencil with face coefficients from the neighbouring
/// nodal values. Throws EllipticityError if any coefficient is <= 0.
SparseOperator assemble_operator(const Grid& grid, const CoefficientField& a,
                                 FaceAveraging averaging = FaceAveraging::Arithmetic);

struct LinearSolverOptions {
  double tolerance = 1e-12;
  int max_iterations = 10000;
  /// Sparse Cholesky up to this many unknowns, Jacobi-PCG above.
  int direct_limit = 10000;
};

/// Factorization (or iterative solver state) for one SPD operator.
/// Immutable after construction; apply_inverse is safe to call concurrently.
class LinearSolver {
 public:
  explicit LinearSolver(const SparseOperator& op, LinearSolverOptions options = {});
  ~LinearSolver();
  LinearSolver(const LinearSolver&) = delete;
  LinearSolver& operator=(const LinearSolver&) = delete;

  bool direct() const noexcept;
  int dimension() const noexcept { return op_.dimension(); }

  /// Solves and verifies the relative residual; throws SolverFailure.
  Vector solve(const Vector& rhs) const;
  /// Unchecked application of the inverse for inner loops.
  Vector apply_inverse(const Vector& rhs) const;

 private:
  struct Impl;
  SparseOperator op_;
  LinearSolverOptions options_;
  std::unique_ptr<Impl> impl_;
};

/// One-shot SPD solve with residual check.
Vector solve_linear(const SparseOperator& a, const Vector& rhs, LinearSolverOptions options = {});

struct MmsLevel {
  int n1d = 0;
  double h = 0.0;
  double max_error = 0.0;
  /// log(err_prev / err) / log(h_prev / h), i.e. log2 of the error ratio when
  /// h halves. Absent on the first level.
  std::optional<double> rate;
};

/// Manufactured solution u = sin(pi s1) sin(pi s2) with a == 1.
std::vector<MmsLevel> mms_convergence_study(const std::vector<int>& levels);

/// A linear map between spaces with diagonal weighted inner products.
struct LinearMap {
  Vector domain_weights;
  Vector range_weights;
  std::function<Vector(const Vector&)> forward;
  std::function<Vector(const Vector&)> adjoint;
};

struct NormEstimateOptions {
  double relative_change = 1e-6;
  int max_iterations = 500;
  double safety = 1.01;
};

/// Power iteration on K*K. Returns the last estimate times the safety factor.
double operator_norm_estimate(const LinearMap& map, NormEstimateOptions options = {});

}  // namespace sassc
