#include "mottlab/mott_walk.hpp"

#include <cmath>
#include <numeric>

namespace mottlab {

WalkEnvironment::WalkEnvironment(PeriodicEnvironment env) : env_(std::move(env)) {
  const std::size_t n = env_.size();
  rate_.resize(n);
  accept_.assign(env_.weights.size(), 1.0);
  alias_.assign(env_.weights.size(), 0);
  std::vector<double> scaled;
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = env_.offsets[i];
    const std::size_t m = env_.offsets[i + 1] - lo;
    rate_[i] = env_.exit_rate(i);
    if (m == 0 || rate_[i] <= 0.0) continue;
    // Vose's alias method.
    scaled.assign(m, 0.0);
    small.clear();
    large.clear();
    for (std::size_t k = 0; k < m; ++k) {
      scaled[k] = env_.weights[lo + k] * static_cast<double>(m) / rate_[i];
      (scaled[k] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(k));
    }
    while (!small.empty() && !large.empty()) {
      const std::uint32_t s = small.back();
      small.pop_back();
      const std::uint32_t l = large.back();
      accept_[lo + s] = scaled[s];
      alias_[lo + s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::uint32_t k : large) {
      accept_[lo + k] = 1.0;
      alias_[lo + k] = k;
    }
    for (std::uint32_t k : small) {
      accept_[lo + k] = 1.0;
      alias_[lo + k] = k;
    }
  }
}

std::size_t WalkEnvironment::sample_slot(std::size_t node, SplitMix64& rng) const {
  const std::size_t lo = env_.offsets[node];
  const std::size_t m = env_.offsets[node + 1] - lo;
  const double u = uniform01(rng) * static_cast<double>(m);
  auto k = static_cast<std::size_t>(u);
  if (k >= m) k = m - 1;
  const double frac = u - static_cast<double>(k);
  return lo + (frac < accept_[lo + k] ? k : alias_[lo + k]);
}

WalkState start_walk(const WalkEnvironment& env, std::uint64_t seed) {
  require(env.size() > 0, "walk needs a non-empty environment");
  WalkState s;
  s.rng = SplitMix64(seed);
  auto node = static_cast<std::size_t>(uniform01(s.rng) * static_cast<double>(env.size()));
  if (node >= env.size()) node = env.size() - 1;
  s.start = s.node = static_cast<std::uint32_t>(node);
  return s;
}

WalkState step(const WalkEnvironment& env, WalkState state) {
  const double rate = env.exit_rate(state.node);
  if (!(rate > 0.0)) {
    throw ZeroExitRate("walker stuck at isolated node " + std::to_string(state.node));
  }
  state.time += exponential(state.rng, rate);
  const std::size_t slot = env.sample_slot(state.node, state.rng);
  state.displacement = state.displacement + env.env().z[slot];
  state.node = env.env().neighbors[slot];
  ++state.jumps;
  return state;
}

bool displacement_consistent(const WalkEnvironment& env, const WalkState& state,
                             double tol) {
  const auto& e = env.env();
  const Point landed = e.positions[state.start] + state.displacement;
  const Point target = e.positions[state.node];
  for (int k = 0; k < e.dimension; ++k) {
    double gap = landed[k] - target[k];
    gap -= e.L * std::round(gap / e.L);
    if (std::abs(gap) > tol * std::max(1.0, std::abs(state.displacement[k]))) return false;
  }
  return true;
}

DiffusionEstimate estimate_diffusion(const WalkEnvironment& env, int n_walkers,
                                     double horizon, std::uint64_t master_seed,
                                     int n_checkpoints) {
  require(n_walkers >= 2, "need at least two walkers");
  require(horizon > 0.0, "time horizon must be positive");
  require(n_checkpoints >= 2, "need at least two checkpoints");
  const int d = env.env().dimension;
  DiffusionEstimate est;
  est.dimension = d;
  est.n_walkers = n_walkers;
  est.horizon = horizon;
  for (int c = 0; c < n_checkpoints; ++c) {
    est.checkpoint_times.push_back(0.5 * horizon +
                                   0.5 * horizon * c / static_cast<double>(n_checkpoints - 1));
  }
  est.msd.assign(static_cast<std::size_t>(d), std::vector<double>(n_checkpoints, 0.0));
  std::vector<double> sum(d, 0.0), sum2(d, 0.0);
  double jumps = 0.0;

  for (int w = 0; w < n_walkers; ++w) {
    WalkState s = start_walk(env, derive_seed(master_seed, static_cast<std::uint64_t>(w)));
    int next_checkpoint = 0;
    while (true) {
      WalkState moved = step(env, s);
      // The walker sits at s.node during [s.time, moved.time).
      while (next_checkpoint < n_checkpoints &&
             moved.time > est.checkpoint_times[next_checkpoint]) {
        for (int a = 0; a < d; ++a) {
          est.msd[a][next_checkpoint] += s.displacement[a] * s.displacement[a];
        }
        ++next_checkpoint;
      }
      if (next_checkpoint == n_checkpoints) break;
      s = std::move(moved);
    }
    jumps += static_cast<double>(s.jumps);
    for (int a = 0; a < d; ++a) {
      const double v = s.displacement[a] * s.displacement[a] / horizon;
      sum[a] += v;
      sum2[a] += v * v;
      if (a == 0) est.samples_e1.push_back(v);
    }
  }

  const double n = n_walkers;
  for (int a = 0; a < d; ++a) {
    for (double& m : est.msd[a]) m /= n;
    const double mean = sum[a] / n;
    const double var = std::max(0.0, (sum2[a] - n * mean * mean) / (n - 1.0));
    est.slope.push_back(mean);
    est.D.push_back(kConventionFactor * mean);
    est.stderr_.push_back(kConventionFactor * std::sqrt(var / n));
  }
  est.mean_jumps = jumps / n;
  if (est.mean_jumps < 100.0) {
    est.warnings.push_back("fewer than 100 jumps per walker on average; horizon too short");
  }
  return est;
}

double msd_fit_slope(const DiffusionEstimate& est, int axis) {
  const auto& t = est.checkpoint_times;
  const auto& y = est.msd.at(static_cast<std::size_t>(axis));
  const double n = static_cast<double>(t.size());
  const double tm = std::accumulate(t.begin(), t.end(), 0.0) / n;
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - tm) * (y[i] - ym);
    sxx += (t[i] - tm) * (t[i] - tm);
  }
  return sxy / sxx;
}

}  // namespace mottlab
