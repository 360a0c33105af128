#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mottlab/common.hpp"
#include "mottlab/kernel.hpp"
#include "mottlab/rng.hpp"

namespace mottlab {

enum class ProcessKind { PoissonHomogeneous, PerturbedLatticePercolation };

// nu(dE) = c |E|^alpha dE on [-A, A].
struct PowerLaw {
  double alpha = 0.0;
  double A = 1.0;

  double normalization() const { return (alpha + 1.0) / (2.0 * std::pow(A, alpha + 1.0)); }
};

struct PointMass {
  double value = 0.0;
};

using MarkLaw = std::variant<PowerLaw, PointMass>;

struct ProcessSpec {
  ProcessKind kind = ProcessKind::PoissonHomogeneous;
  // Points per unit volume for Poisson; retention probability p for the
  // perturbed lattice.
  double intensity = 1.0;
  MarkLaw marks = PowerLaw{};
  int dimension = 2;
  // Pins the common lattice shift U instead of drawing it uniformly.
  std::optional<Point> lattice_shift;

  void validate() const;
};

struct MarkedPoint {
  Point x{};
  double mark = 0.0;
};

struct MarkedConfiguration {
  int dimension = 1;
  Box window;
  std::uint64_t seed = 0;
  std::vector<MarkedPoint> points;

  std::size_t size() const { return points.size(); }
  std::vector<Point> positions() const;
};

/// Draws one realization of `spec` inside `window`. Pure in (spec, window,
/// seed). Throws InvalidArgument on a bad spec or an empty window and Error
/// if two generated positions coincide.
MarkedConfiguration sample_configuration(const ProcessSpec& spec,
                                         const Box& window, std::uint64_t seed);

/// Inverse-CDF draw from c|E|^alpha on [-A, A].
double sample_power_law_mark(double alpha, double A, SplitMix64& rng);

double sample_mark(const MarkLaw& law, SplitMix64& rng);

double empirical_intensity(const MarkedConfiguration& config);

/// Empirical Palm average (1/N) sum_i sum_{j != i} c_ij |x_j - x_i|^k for
/// k in {0, 2}. Pairs beyond the kernel's 1e-16 cutoff are skipped.
double moment_diagnostics(const MarkedConfiguration& config,
                          const ConductanceKernel& kernel, int k);

// Throws Error when two points share a position.
void check_simple(const MarkedConfiguration& config);

nlohmann::json to_json(const MarkedConfiguration& config);
MarkedConfiguration configuration_from_json(const nlohmann::json& j);

}  // namespace mottlab
