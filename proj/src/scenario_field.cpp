#include "sassc/scenario_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "sassc/errors.hpp"
#include "sassc/parallel.hpp"

namespace sassc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::vector<double> draw_xi(std::uint64_t seed, FieldStream stream, int count, std::size_t modes) {
  std::vector<double> xi(static_cast<std::size_t>(count) * modes);
  for (int k = 0; k < count; ++k)
    for (std::size_t m = 0; m < modes; ++m)
      xi[static_cast<std::size_t>(k) * modes + m] =
          uniform_symmetric(seed, stream, static_cast<std::uint64_t>(k), m);
  return xi;
}

std::span<const double> row(const std::vector<double>& xi, std::size_t modes, int k) {
  return {xi.data() + static_cast<std::size_t>(k) * modes, modes};
}

}  // namespace

void validate_field_spec(const FieldSpec& spec, bool coefficient) {
  if (!std::isfinite(spec.base)) throw InputError("field base value must be finite");
  for (const auto& m : spec.modes) {
    if (!std::isfinite(m.amplitude)) throw InputError("mode amplitude must be finite");
    if (m.k1 < 1 || m.k2 < 1) throw InputError("mode wavenumbers must be positive integers");
  }
  if (spec.clip) {
    if (!(spec.clip->lo <= spec.clip->hi))
      throw InputError("clip bounds must satisfy lo <= hi");
  }
  if (coefficient) {
    if (!spec.clip)
      throw EllipticityError("coefficient field needs clip bounds 0 < a_min <= a_max (uniform ellipticity)");
    if (!(spec.clip->lo > 0.0))
      throw EllipticityError("a_min must be positive (uniform ellipticity), got " +
                             std::to_string(spec.clip->lo));
    if (!std::isfinite(spec.clip->hi))
      throw EllipticityError("a_max must be finite (uniform ellipticity)");
  }
}

double evaluate_field(const FieldSpec& spec, std::span<const double> xi, double s1, double s2) {
  constexpr double pi = std::numbers::pi;
  double v = spec.base;
  for (std::size_t m = 0; m < spec.modes.size(); ++m) {
    const auto& mode = spec.modes[m];
    v += xi[m] * mode.amplitude * std::sin(pi * mode.k1 * s1) * std::sin(pi * mode.k2 * s2);
  }
  if (spec.clip) v = std::clamp(v, spec.clip->lo, spec.clip->hi);
  return v;
}

double uniform_symmetric(std::uint64_t seed, FieldStream stream, std::uint64_t scenario,
                         std::uint64_t mode) {
  std::uint64_t x = splitmix64(seed);
  x = splitmix64(x ^ static_cast<std::uint64_t>(stream));
  x = splitmix64(x ^ scenario);
  x = splitmix64(x ^ mode);
  const double unit = static_cast<double>(x >> 11) * 0x1.0p-53;
  return 2.0 * unit - 1.0;
}

ScenarioSet::ScenarioSet(FieldSpec coefficient, FieldSpec load, FieldSpec obstacle, int count,
                         std::uint64_t seed, std::vector<double> probabilities)
    : coefficient_(std::move(coefficient)),
      load_(std::move(load)),
      obstacle_(std::move(obstacle)),
      count_(count),
      seed_(seed),
      probabilities_(std::move(probabilities)) {
  xi_a_ = draw_xi(seed_, FieldStream::Coefficient, count_, coefficient_.modes.size());
  xi_g_ = draw_xi(seed_, FieldStream::Load, count_, load_.modes.size());
  xi_psi_ = draw_xi(seed_, FieldStream::Obstacle, count_, obstacle_.modes.size());
}

std::span<const double> ScenarioSet::coefficient_xi(int k) const {
  return row(xi_a_, coefficient_.modes.size(), k);
}
std::span<const double> ScenarioSet::load_xi(int k) const { return row(xi_g_, load_.modes.size(), k); }
std::span<const double> ScenarioSet::obstacle_xi(int k) const {
  return row(xi_psi_, obstacle_.modes.size(), k);
}

ScenarioSet sample_scenarios(const FieldSpec& spec_a, const FieldSpec& spec_g,
                             const FieldSpec& spec_psi, int count, std::uint64_t seed,
                             std::vector<double> probabilities) {
  if (count < 1) throw InputError("scenario count must be at least 1");
  validate_field_spec(spec_a, true);
  validate_field_spec(spec_g, false);
  validate_field_spec(spec_psi, false);

  if (probabilities.empty()) {
    probabilities.assign(static_cast<std::size_t>(count), 1.0 / count);
  } else {
    if (probabilities.size() != static_cast<std::size_t>(count))
      throw InputError("probability vector length does not match the scenario count");
    for (double p : probabilities)
      if (!(p > 0.0) || !std::isfinite(p)) throw InputError("scenario probabilities must be positive");
    const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) throw InputError("scenario probabilities must sum to 1");
    for (double& p : probabilities) p /= total;
  }
  return ScenarioSet(spec_a, spec_g, spec_psi, count, seed, std::move(probabilities));
}

std::vector<ScenarioFields> realize_fields(const ScenarioSet& set, const Grid& grid) {
  std::vector<ScenarioFields> out(static_cast<std::size_t>(set.size()));
  parallel_for(out.size(), [&](std::size_t idx) {
    const int k = static_cast<int>(idx);
    auto& f = out[idx];
    auto xi_a = set.coefficient_xi(k);
    f.coefficient = sample_coefficient(grid, [&](double s1, double s2) {
      return evaluate_field(set.coefficient_spec(), xi_a, s1, s2);
    });
    f.load.resize(grid.size());
    f.obstacle.resize(grid.size());
    for (int node = 0; node < grid.size(); ++node) {
      auto [s1, s2] = grid.node_coords(node);
      f.load[node] = evaluate_field(set.load_spec(), set.load_xi(k), s1, s2);
      f.obstacle[node] = evaluate_field(set.obstacle_spec(), set.obstacle_xi(k), s1, s2);
    }
  });
  return out;
}

EllipticityBounds ellipticity_report(const std::vector<ScenarioFields>& fields) {
  EllipticityBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& f : fields) {
    for (double v : f.coefficient.values) {
      b.min = std::min(b.min, v);
      b.max = std::max(b.max, v);
    }
  }
  return b;
}

Vector realize_deterministic(const FieldSpec& spec, const Grid& grid) {
  std::vector<double> ones(spec.modes.size(), 1.0);
  Vector v(grid.size());
  for (int node = 0; node < grid.size(); ++node) {
    auto [s1, s2] = grid.node_coords(node);
    v[node] = evaluate_field(spec, ones, s1, s2);
  }
  return v;
}

}  // namespace sassc
