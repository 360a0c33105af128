#include "mottlab/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "mottlab/rng.hpp"
#include "mottlab/spatial_grid.hpp"

namespace mottlab {

namespace {

Point minimum_image(const Point& from, const Point& to, int d, double L) {
  Point z = to - from;
  for (int k = 0; k < d; ++k) z[k] -= L * std::round(z[k] / L);
  return z;
}

void finish_csr(PeriodicEnvironment& env, const std::vector<PeriodicEdge>& edges) {
  const std::size_t n = env.size();
  std::vector<std::size_t> count(n + 1, 0);
  for (const auto& e : edges) {
    ++count[e.i + 1];
    ++count[e.j + 1];
  }
  std::partial_sum(count.begin(), count.end(), count.begin());
  env.offsets = count;
  env.neighbors.resize(count[n]);
  env.z.resize(count[n]);
  env.weights.resize(count[n]);
  std::vector<std::size_t> fill(count.begin(), count.end() - 1);
  for (const auto& e : edges) {
    const Point zij = minimum_image(env.positions[e.i], env.positions[e.j], env.dimension, env.L);
    const Point zji = minimum_image(env.positions[e.j], env.positions[e.i], env.dimension, env.L);
    std::size_t s = fill[e.i]++;
    env.neighbors[s] = e.j;
    env.z[s] = zij;
    env.weights[s] = e.weight;
    s = fill[e.j]++;
    env.neighbors[s] = e.i;
    env.z[s] = zji;
    env.weights[s] = e.weight;
  }
}

double norm2(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

void subtract_mean(std::vector<double>& v) {
  if (v.empty()) return;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (double& x : v) x -= m;
}

}  // namespace

double PeriodicEnvironment::exit_rate(std::size_t i) const {
  double s = 0.0;
  for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) s += weights[k];
  return s;
}

std::size_t PeriodicEnvironment::components() const {
  std::vector<std::uint8_t> seen(size(), 0);
  std::vector<std::uint32_t> stack;
  std::size_t count = 0;
  for (std::uint32_t s = 0; s < size(); ++s) {
    if (seen[s]) continue;
    ++count;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::uint32_t a = stack.back();
      stack.pop_back();
      for (std::size_t k = offsets[a]; k < offsets[a + 1]; ++k) {
        if (!seen[neighbors[k]]) {
          seen[neighbors[k]] = 1;
          stack.push_back(neighbors[k]);
        }
      }
    }
  }
  return count;
}

PeriodicEnvironment build_periodic_environment(const MarkedConfiguration& config,
                                               const ConductanceKernel& kernel, double R) {
  const int d = config.dimension;
  const double L = config.window.hi[0] - config.window.lo[0];
  for (int k = 0; k < d; ++k) {
    require(config.window.lo[k] == 0.0 && config.window.hi[k] == L,
            "periodic environment needs the window [0, L)^d");
  }
  require(R > 0.0 && R < 0.5 * L, "edge radius must satisfy 0 < R < L/2");

  PeriodicEnvironment env;
  env.dimension = d;
  env.L = L;
  env.R = R;
  env.positions = config.positions();
  for (const auto& p : config.points) env.marks.push_back(p.mark);

  const SpatialGrid grid(config.window, R, env.positions, /*periodic=*/true);
  std::vector<PeriodicEdge> edges;
  const Point origin{};
  for (std::uint32_t i = 0; i < env.size(); ++i) {
    grid.for_each_within(env.positions[i], R, i, [&](std::uint32_t j, const Point& z) {
      if (j < i) return;
      // Covariance: the weight depends on the displacement only.
      const double c = kernel(origin, z, env.marks[i], env.marks[j]);
      if (c > 0.0) edges.push_back({i, j, c});
    });
  }
  finish_csr(env, edges);
  return env;
}

PeriodicEnvironment make_periodic_environment(int dimension, double L,
                                              std::vector<Point> positions,
                                              std::vector<PeriodicEdge> edges) {
  require(dimension >= 1 && dimension <= kMaxDim, "dimension must be 1, 2 or 3");
  require(L > 0.0, "torus side must be positive");
  PeriodicEnvironment env;
  env.dimension = dimension;
  env.L = L;
  env.positions = std::move(positions);
  env.marks.assign(env.positions.size(), 0.0);
  for (const auto& e : edges) {
    require(e.i < env.size() && e.j < env.size() && e.i != e.j, "edge endpoint out of range");
    require(e.weight > 0.0 && std::isfinite(e.weight), "edge weight must be finite and > 0");
    const Point z = minimum_image(env.positions[e.i], env.positions[e.j], dimension, L);
    env.R = std::max(env.R, norm(z));
  }
  finish_csr(env, edges);
  return env;
}

double corrector_functional(const PeriodicEnvironment& env, const Point& a,
                            std::span<const double> f) {
  require(f.size() == env.size(), "corrector size does not match environment");
  double total = 0.0;
  for (std::size_t i = 0; i < env.size(); ++i) {
    for (std::size_t k = env.offsets[i]; k < env.offsets[i + 1]; ++k) {
      const double g = dot(a, env.z[k]) - (f[env.neighbors[k]] - f[i]);
      total += env.weights[k] * g * g;
    }
  }
  return total / (2.0 * static_cast<double>(env.size()));
}

std::vector<double> corrector_rhs(const PeriodicEnvironment& env, const Point& a) {
  const double scale = 2.0 / static_cast<double>(env.size());
  std::vector<double> g(env.size(), 0.0);
  for (std::size_t i = 0; i < env.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = env.offsets[i]; k < env.offsets[i + 1]; ++k) {
      s += env.weights[k] * dot(a, env.z[k]);
    }
    g[i] = scale * s;
  }
  return g;
}

CorrectorSolution solve_corrector(const PeriodicEnvironment& env, const Point& a,
                                  double tol, int max_iter) {
  require(env.size() > 0, "corrector needs a non-empty environment");
  require(tol > 0.0, "corrector tolerance must be positive");
  if (env.components() != 1) {
    throw DisconnectedEnvironment("periodic environment is not connected under retained edges");
  }
  const std::size_t n = env.size();
  const double scale = 2.0 / static_cast<double>(n);
  // System (2/N) L f = -g.
  std::vector<double> diag(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) diag[i] = scale * env.exit_rate(i);
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t k = env.offsets[i]; k < env.offsets[i + 1]; ++k) {
        acc += env.weights[k] * (x[i] - x[env.neighbors[k]]);
      }
      y[i] = scale * acc;
    }
  };

  std::vector<double> rhs = corrector_rhs(env, a);
  for (double& v : rhs) v = -v;
  subtract_mean(rhs);
  const double bnorm = norm2(rhs);
  const int cap = max_iter > 0 ? max_iter
                               : std::max(1000, static_cast<int>(100.0 * std::sqrt(static_cast<double>(n))));

  std::vector<double> f(n, 0.0), r(rhs), z(n), p(n), q(n);
  int it = 0;
  double rel = 0.0;
  if (bnorm > 0.0) {
    for (std::size_t i = 0; i < n; ++i) z[i] = diag[i] > 0.0 ? r[i] / diag[i] : 0.0;
    p = z;
    double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    rel = 1.0;
    while (rel > tol && it < cap) {
      apply(p, q);
      const double alpha = rz / std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        f[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      for (std::size_t i = 0; i < n; ++i) z[i] = diag[i] > 0.0 ? r[i] / diag[i] : 0.0;
      const double rz_next = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
      ++it;
      rel = norm2(r) / bnorm;
    }
    apply(f, q);
    for (std::size_t i = 0; i < n; ++i) q[i] = rhs[i] - q[i];
    rel = norm2(q) / bnorm;
    if (rel > tol) {
      throw NotConverged("corrector solve stopped at relative residual " + format_scientific(rel),
                         it, rel);
    }
  }
  subtract_mean(f);

  CorrectorSolution sol;
  sol.direction = a;
  sol.D_aa = corrector_functional(env, a, f);
  sol.f = std::move(f);
  sol.residual = rel;
  sol.iterations = it;
  return sol;
}

DiffusionMatrix diffusion_matrix(const PeriodicEnvironment& env, double tol) {
  const int d = env.dimension;
  std::vector<double> q(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    Point e{};
    e[i] = 1.0;
    q[i] = solve_corrector(env, e, tol).D_aa;
  }
  DiffusionMatrix out;
  out.D = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    out.D(i, i) = q[i];
    for (int j = i + 1; j < d; ++j) {
      Point e{};
      e[i] = 1.0;
      e[j] = 1.0;
      const double qij = solve_corrector(env, e, tol).D_aa;
      out.D(i, j) = out.D(j, i) = 0.5 * (qij - q[i] - q[j]);
      out.offdiag_max = std::max(out.offdiag_max, std::abs(out.D(i, j)));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.D);
  out.eigenvalues = eig.eigenvalues();
  out.eigenvectors = eig.eigenvectors();
  return out;
}

EnsembleRealization corrector_realization(const ProcessSpec& spec,
                                          const ConductanceKernel& kernel, double L,
                                          double R, std::uint64_t seed, double tol) {
  const MarkedConfiguration config =
      sample_configuration(spec, Box::cube(spec.dimension, 0.0, L), seed);
  const PeriodicEnvironment env = build_periodic_environment(config, kernel, R);
  EnsembleRealization real;
  real.seed = seed;
  real.intensity = empirical_intensity(config);
  real.D = diffusion_matrix(env, tol).D;
  return real;
}

EnsembleDiffusion summarize_ensemble(std::vector<EnsembleRealization> realizations,
                                     double L, double R) {
  require(realizations.size() >= 2, "ensemble needs at least two realizations");
  const auto d = realizations.front().D.rows();
  EnsembleDiffusion out;
  out.L = L;
  out.R = R;
  out.realizations = std::move(realizations);
  out.mean = Eigen::MatrixXd::Zero(d, d);
  out.stderr_ = Eigen::MatrixXd::Zero(d, d);
  std::vector<double> mD11;
  for (const auto& real : out.realizations) {
    out.mean += real.D;
    out.mean_intensity += real.intensity;
    mD11.push_back(real.intensity * real.D(0, 0));
  }
  const auto n = static_cast<double>(out.realizations.size());
  out.mean /= n;
  out.mean_intensity /= n;
  for (const auto& real : out.realizations) {
    out.stderr_ += (real.D - out.mean).cwiseAbs2();
  }
  out.stderr_ = (out.stderr_ / (n - 1.0) / n).cwiseSqrt();
  out.mD11 = std::accumulate(mD11.begin(), mD11.end(), 0.0) / n;
  double var = 0.0;
  for (double v : mD11) var += (v - out.mD11) * (v - out.mD11);
  out.mD11_stderr = std::sqrt(var / (n - 1.0) / n);
  return out;
}

EnsembleDiffusion ensemble_D(const ProcessSpec& spec, const ConductanceKernel& kernel,
                             double L, double R, int n_realizations,
                             std::uint64_t master_seed, double tol) {
  require(n_realizations >= 2, "ensemble needs at least two realizations");
  std::vector<EnsembleRealization> reals;
  for (int r = 0; r < n_realizations; ++r) {
    reals.push_back(corrector_realization(
        spec, kernel, L, R, derive_seed(master_seed, static_cast<std::uint64_t>(r)), tol));
  }
  return summarize_ensemble(std::move(reals), L, R);
}

double mott_exponent(double alpha, int dimension) {
  if (dimension == 1) return 1.0;
  return (alpha + 1.0) / (alpha + dimension + 1.0);
}

}  // namespace mottlab
