#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mottlab/corrector.hpp"
#include "mottlab/environment.hpp"

namespace mottlab::oracles {

// Z^d torus of side L with nearest-neighbour weight c.
inline PeriodicEnvironment lattice_torus(int d, int L, double c) {
  ProcessSpec spec;
  spec.kind = ProcessKind::PerturbedLatticePercolation;
  spec.intensity = 1.0;
  spec.marks = PointMass{0.0};
  spec.dimension = d;
  spec.lattice_shift = Point{0.0, 0.0, 0.0};
  const auto cfg = sample_configuration(spec, Box::cube(d, 0.0, L), 1);
  return build_periodic_environment(cfg, ConductanceKernel::nearest_neighbor(c, 1.0), 1.0 + 1e-9);
}

// F is quadratic, so F(f) = F0 + g.f + f'Hf/2 with g and H recovered exactly
// from evaluations of F; minimize densely with a pseudo-inverse.
inline double brute_force_min(const PeriodicEnvironment& env, const Point& a) {
  const std::size_t n = env.size();
  std::vector<double> f(n, 0.0);
  const double F0 = corrector_functional(env, a, f);
  Eigen::VectorXd g(n);
  Eigen::MatrixXd H(n, n);
  std::vector<double> Fi(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.assign(n, 0.0);
    f[i] = 1.0;
    const double plus = corrector_functional(env, a, f);
    f[i] = -1.0;
    const double minus = corrector_functional(env, a, f);
    g(i) = (plus - minus) / 2.0;
    Fi[i] = plus;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      f.assign(n, 0.0);
      f[i] += 1.0;
      f[j] += 1.0;
      const double both = corrector_functional(env, a, f);
      H(i, j) = i == j ? (both - 2.0 * g(i) - F0) / 2.0 : both - Fi[i] - Fi[j] + F0;
    }
  }
  const Eigen::VectorXd x = -H.completeOrthogonalDecomposition().solve(g);
  std::vector<double> best(x.data(), x.data() + n);
  return corrector_functional(env, a, best);
}

}  // namespace mottlab::oracles
