#include "mottlab/environment.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mottlab/spatial_grid.hpp"

namespace mottlab {

void ProcessSpec::validate() const {
  require(dimension >= 1 && dimension <= kMaxDim, "dimension must be 1, 2 or 3");
  require(std::isfinite(intensity) && intensity > 0.0, "intensity must be positive");
  if (kind == ProcessKind::PerturbedLatticePercolation) {
    require(intensity <= 1.0, "retention probability must lie in (0, 1]");
  }
  if (const auto* pl = std::get_if<PowerLaw>(&marks)) {
    require(pl->alpha >= 0.0, "power-law exponent alpha must be >= 0");
    require(pl->A > 0.0, "power-law support A must be > 0");
  }
  if (lattice_shift) {
    for (int k = 0; k < dimension; ++k) {
      require((*lattice_shift)[k] >= 0.0 && (*lattice_shift)[k] < 1.0,
              "lattice shift must lie in [0, 1)^d");
    }
  }
}

double sample_power_law_mark(double alpha, double A, SplitMix64& rng) {
  const double u = uniform_open0(rng);
  const double sign = (rng() >> 63) != 0 ? -1.0 : 1.0;
  return sign * A * std::pow(u, 1.0 / (alpha + 1.0));
}

double sample_mark(const MarkLaw& law, SplitMix64& rng) {
  if (const auto* pl = std::get_if<PowerLaw>(&law)) {
    return sample_power_law_mark(pl->alpha, pl->A, rng);
  }
  return std::get<PointMass>(law).value;
}

std::vector<Point> MarkedConfiguration::positions() const {
  std::vector<Point> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.x);
  return out;
}

namespace {

void sample_poisson(const ProcessSpec& spec, const Box& window, SplitMix64& rng,
                    MarkedConfiguration& out) {
  std::poisson_distribution<std::int64_t> count_law(spec.intensity * window.volume());
  const std::int64_t n = count_law(rng);
  out.points.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    MarkedPoint p;
    for (int k = 0; k < spec.dimension; ++k) {
      p.x[k] = window.lo[k] + (window.hi[k] - window.lo[k]) * uniform01(rng);
      // Rounding can land exactly on the open upper face.
      if (p.x[k] >= window.hi[k]) p.x[k] = window.lo[k];
    }
    out.points.push_back(p);
  }
}

void sample_lattice(const ProcessSpec& spec, const Box& window, SplitMix64& rng,
                    MarkedConfiguration& out) {
  Point shift{};
  for (int k = 0; k < spec.dimension; ++k) {
    shift[k] = spec.lattice_shift ? (*spec.lattice_shift)[k] : uniform01(rng);
  }
  // Integer sites k with lo <= k + U < hi.
  std::array<std::int64_t, kMaxDim> first{0, 0, 0}, last{0, 0, 0};
  for (int k = 0; k < spec.dimension; ++k) {
    first[k] = static_cast<std::int64_t>(std::ceil(window.lo[k] - shift[k]));
    last[k] = static_cast<std::int64_t>(std::ceil(window.hi[k] - shift[k])) - 1;
  }
  std::array<std::int64_t, kMaxDim> site = first;
  for (site[0] = first[0]; site[0] <= last[0]; ++site[0]) {
    for (site[1] = first[1]; site[1] <= last[1]; ++site[1]) {
      for (site[2] = first[2]; site[2] <= last[2]; ++site[2]) {
        const bool keep = spec.intensity >= 1.0 || uniform01(rng) < spec.intensity;
        if (!keep) continue;
        MarkedPoint p;
        for (int k = 0; k < spec.dimension; ++k) {
          p.x[k] = static_cast<double>(site[k]) + shift[k];
        }
        if (window.contains(p.x)) out.points.push_back(p);
      }
    }
  }
}

}  // namespace

MarkedConfiguration sample_configuration(const ProcessSpec& spec,
                                         const Box& window, std::uint64_t seed) {
  spec.validate();
  require(window.dimension == spec.dimension, "window dimension mismatch");
  require(!window.degenerate(), "sampling window is empty");

  MarkedConfiguration out;
  out.dimension = spec.dimension;
  out.window = window;
  out.seed = seed;

  // Positions and marks use independent streams.
  SplitMix64 position_rng(derive_seed(seed, 0));
  SplitMix64 mark_rng(derive_seed(seed, 1));
  if (spec.kind == ProcessKind::PoissonHomogeneous) {
    sample_poisson(spec, window, position_rng, out);
  } else {
    sample_lattice(spec, window, position_rng, out);
  }
  for (auto& p : out.points) p.mark = sample_mark(spec.marks, mark_rng);
  check_simple(out);
  return out;
}

void check_simple(const MarkedConfiguration& config) {
  std::vector<Point> xs = config.positions();
  std::sort(xs.begin(), xs.end());
  if (std::adjacent_find(xs.begin(), xs.end()) != xs.end()) {
    throw Error("configuration has two points at the same position");
  }
}

double empirical_intensity(const MarkedConfiguration& config) {
  return static_cast<double>(config.size()) / config.window.volume();
}

double moment_diagnostics(const MarkedConfiguration& config,
                          const ConductanceKernel& kernel, int k) {
  require(k == 0 || k == 2, "moment order must be 0 or 2");
  require(config.size() > 0, "moment diagnostics need a non-empty configuration");
  if (config.size() == 1) return 0.0;
  const std::vector<Point> xs = config.positions();
  double radius = kernel.cutoff_radius(1e-16);
  double diameter = 0.0;
  for (int a = 0; a < config.dimension; ++a) {
    const double e = config.window.hi[a] - config.window.lo[a];
    diameter += e * e;
  }
  radius = std::min(radius, std::sqrt(diameter) + 1.0);
  const SpatialGrid grid(config.window, std::max(radius, 1e-6), xs);
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    grid.for_each_within(xs[i], radius, static_cast<std::int64_t>(i),
                         [&](std::uint32_t j, const Point& z) {
                           const double c = kernel(xs[i], xs[j], config.points[i].mark,
                                                   config.points[j].mark);
                           total += k == 0 ? c : c * dot(z, z);
                         });
  }
  return total / static_cast<double>(config.size());
}

nlohmann::json to_json(const MarkedConfiguration& config) {
  nlohmann::json window;
  window["lo"] = std::vector<double>(config.window.lo.begin(),
                                     config.window.lo.begin() + config.dimension);
  window["hi"] = std::vector<double>(config.window.hi.begin(),
                                     config.window.hi.begin() + config.dimension);
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : config.points) {
    points.push_back({{"x", std::vector<double>(p.x.begin(), p.x.begin() + config.dimension)},
                      {"E", p.mark}});
  }
  return {{"dimension", config.dimension},
          {"window", window},
          {"seed", config.seed},
          {"points", points}};
}

MarkedConfiguration configuration_from_json(const nlohmann::json& j) {
  MarkedConfiguration out;
  out.dimension = j.at("dimension").get<int>();
  require(out.dimension >= 1 && out.dimension <= kMaxDim, "bad dimension in snapshot");
  out.window.dimension = out.dimension;
  const auto lo = j.at("window").at("lo").get<std::vector<double>>();
  const auto hi = j.at("window").at("hi").get<std::vector<double>>();
  require(static_cast<int>(lo.size()) == out.dimension &&
              static_cast<int>(hi.size()) == out.dimension,
          "window corner has wrong length");
  std::copy(lo.begin(), lo.end(), out.window.lo.begin());
  std::copy(hi.begin(), hi.end(), out.window.hi.begin());
  out.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& p : j.at("points")) {
    MarkedPoint mp;
    const auto x = p.at("x").get<std::vector<double>>();
    require(static_cast<int>(x.size()) == out.dimension, "point has wrong length");
    std::copy(x.begin(), x.end(), mp.x.begin());
    mp.mark = p.at("E").get<double>();
    out.points.push_back(mp);
  }
  return out;
}

}  // namespace mottlab
