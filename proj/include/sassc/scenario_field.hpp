#pragma once

// Seeded random fields for the finite scenario set: coefficient a, load g and
// obstacle psi, each a clipped truncated sine expansion
//
//   f(s) = clip(base + sum_m xi_m * amp_m * sin(pi k1 s1) sin(pi k2 s2), lo, hi)
//
// with xi_m ~ Uniform[-1, 1] drawn independently per scenario.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sassc/grid_pde.hpp"

namespace sassc {

struct FieldMode {
  double amplitude = 0.0;
  int k1 = 1;
  int k2 = 1;
};

struct ClipBounds {
  double lo = 0.0;
  double hi = 0.0;
};

struct FieldSpec {
  double base = 0.0;
  std::vector<FieldMode> modes;
  std::optional<ClipBounds> clip;
};

/// Throws InputError on malformed modes or clip bounds. When
/// `coefficient` is set the clip interval is mandatory and must satisfy
/// 0 < lo <= hi (uniform ellipticity).
void validate_field_spec(const FieldSpec& spec, bool coefficient);

/// Evaluates a realization at one point for given mode coefficients.
double evaluate_field(const FieldSpec& spec, std::span<const double> xi, double s1, double s2);

/// Stream ids keep the three fields' draws independent.
enum class FieldStream : std::uint64_t { Coefficient = 0, Load = 1, Obstacle = 2 };

/// Counter-based draw in [-1, 1): a pure function of its key.
double uniform_symmetric(std::uint64_t seed, FieldStream stream, std::uint64_t scenario,
                         std::uint64_t mode);

class ScenarioSet {
 public:
  ScenarioSet(FieldSpec coefficient, FieldSpec load, FieldSpec obstacle, int count,
              std::uint64_t seed, std::vector<double> probabilities);

  int size() const noexcept { return count_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<double>& probabilities() const noexcept { return probabilities_; }

  const FieldSpec& coefficient_spec() const noexcept { return coefficient_; }
  const FieldSpec& load_spec() const noexcept { return load_; }
  const FieldSpec& obstacle_spec() const noexcept { return obstacle_; }

  /// Mode coefficients xi for scenario k.
  std::span<const double> coefficient_xi(int k) const;
  std::span<const double> load_xi(int k) const;
  std::span<const double> obstacle_xi(int k) const;

 private:
  FieldSpec coefficient_, load_, obstacle_;
  int count_;
  std::uint64_t seed_;
  std::vector<double> probabilities_;
  std::vector<double> xi_a_, xi_g_, xi_psi_;
};

/// S >= 1; empty `probabilities` means uniform 1/S. A supplied vector must be
/// positive and sum to 1 within 1e-12; it is renormalized exactly afterwards.
ScenarioSet sample_scenarios(const FieldSpec& spec_a, const FieldSpec& spec_g,
                             const FieldSpec& spec_psi, int count, std::uint64_t seed,
                             std::vector<double> probabilities = {});

/// Realized nodal data of one scenario.
struct ScenarioFields {
  CoefficientField coefficient;  ///< extended lattice, boundary included
  Vector load;                   ///< interior nodes
  Vector obstacle;               ///< interior nodes
};

std::vector<ScenarioFields> realize_fields(const ScenarioSet& set, const Grid& grid);

struct EllipticityBounds {
  double min = 0.0;
  double max = 0.0;
};

EllipticityBounds ellipticity_report(const std::vector<ScenarioFields>& fields);

/// Deterministic field (every xi = 1) on interior nodes; used for targets.
Vector realize_deterministic(const FieldSpec& spec, const Grid& grid);

}  // namespace sassc
