#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mottlab/common.hpp"
#include "mottlab/corrector.hpp"
#include "mottlab/rng.hpp"

namespace mottlab {

// Quenched environment with per-node alias tables for O(1) target draws.
class WalkEnvironment {
 public:
  explicit WalkEnvironment(PeriodicEnvironment env);

  const PeriodicEnvironment& env() const { return env_; }
  std::size_t size() const { return env_.size(); }
  double exit_rate(std::size_t i) const { return rate_[i]; }

  // Index into the CSR arrays of the sampled neighbor slot.
  std::size_t sample_slot(std::size_t node, SplitMix64& rng) const;

 private:
  PeriodicEnvironment env_;
  std::vector<double> rate_;
  std::vector<double> accept_;       // alias acceptance per CSR slot
  std::vector<std::uint32_t> alias_; // alias offset within the node's row
};

struct WalkState {
  std::uint32_t start = 0;
  std::uint32_t node = 0;
  Point displacement{};  // unwrapped, sum of minimum-image jumps
  double time = 0.0;
  std::uint64_t jumps = 0;
  SplitMix64 rng;
};

WalkState start_walk(const WalkEnvironment& env, std::uint64_t seed);

/// One jump: Exponential holding time with the node's total rate, target
/// drawn proportionally to c_ij. Throws ZeroExitRate at isolated nodes.
WalkState step(const WalkEnvironment& env, WalkState state);

/// start position + displacement lands on the current node modulo L.
bool displacement_consistent(const WalkEnvironment& env, const WalkState& state,
                             double tol = 1e-9);

struct DiffusionEstimate {
  int dimension = 1;
  std::vector<double> slope;    // mean (X_T . e_a)^2 / T
  std::vector<double> D;        // slope * kConventionFactor
  std::vector<double> stderr_;  // standard error of D
  int n_walkers = 0;
  double horizon = 0.0;
  double mean_jumps = 0.0;
  // MSD per direction at checkpoints spread over [T/2, T].
  std::vector<double> checkpoint_times;
  std::vector<std::vector<double>> msd;
  // Per walker (X_T . e_1)^2 / T, for pooling across environments.
  std::vector<double> samples_e1;
  std::vector<std::string> warnings;
};

/// MSD slope to diffusion matrix: the constant-rate lattice has MSD slope 2c
/// and corrector D_11 = c.
inline constexpr double kConventionFactor = 0.5;

/// Walkers start at uniform nodes with seeds derive_seed(master_seed, w).
DiffusionEstimate estimate_diffusion(const WalkEnvironment& env, int n_walkers,
                                     double horizon, std::uint64_t master_seed,
                                     int n_checkpoints = 11);

/// Least-squares slope of msd(t) over the checkpoints in direction `axis`.
double msd_fit_slope(const DiffusionEstimate& est, int axis);

}  // namespace mottlab
