#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mottlab/common.hpp"
#include "mottlab/environment.hpp"
#include "mottlab/kernel.hpp"

namespace mottlab {

// Marked points on the torus [0, L)^d with every pair at minimum-image
// distance <= R joined by an edge. Adjacency is stored in CSR form, each
// undirected edge once per endpoint.
struct PeriodicEnvironment {
  int dimension = 1;
  double L = 1.0;
  double R = 0.0;
  std::vector<Point> positions;
  std::vector<double> marks;
  std::vector<std::size_t> offsets;     // size N + 1
  std::vector<std::uint32_t> neighbors;
  std::vector<Point> z;                 // minimum-image displacement to neighbor
  std::vector<double> weights;

  std::size_t size() const { return positions.size(); }
  double exit_rate(std::size_t i) const;
  // Number of connected components under retained edges.
  std::size_t components() const;
};

/// Periodizes `config`, whose window must be the cube [0, L)^d. Requires
/// 0 < R < L/2 so the minimum image is unique.
PeriodicEnvironment build_periodic_environment(const MarkedConfiguration& config,
                                               const ConductanceKernel& kernel, double R);

struct PeriodicEdge {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double weight = 0.0;
};

/// Environment from explicit edges; displacements are minimum images.
PeriodicEnvironment make_periodic_environment(int dimension, double L,
                                              std::vector<Point> positions,
                                              std::vector<PeriodicEdge> edges);

struct CorrectorSolution {
  Point direction{};
  std::vector<double> f;  // mean zero
  double D_aa = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// F(f) = (1/(2N)) sum_i sum_j c_ij (a.z_ij - (f_j - f_i))^2
double corrector_functional(const PeriodicEnvironment& env, const Point& a,
                            std::span<const double> f);

/// Gradient of F at f = 0, i.e. (2/N) sum_j c_ij a.z_ij. The minimizer solves
/// (2/N) L f = -g with L the weighted graph Laplacian.
std::vector<double> corrector_rhs(const PeriodicEnvironment& env, const Point& a);

/// Minimizes F over node functions by Jacobi-preconditioned CG on the
/// Laplacian system (gauge: mean zero) and returns D_aa = F(f*).
/// Throws DisconnectedEnvironment or NotConverged.
CorrectorSolution solve_corrector(const PeriodicEnvironment& env, const Point& a,
                                  double tol = 1e-10, int max_iter = 0);

struct DiffusionMatrix {
  Eigen::MatrixXd D;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns are principal directions
  double offdiag_max = 0.0;
};

/// Full matrix by polarization: a.Db = (q(a+b) - q(a) - q(b)) / 2 over the
/// canonical basis.
DiffusionMatrix diffusion_matrix(const PeriodicEnvironment& env, double tol = 1e-10);

struct EnsembleRealization {
  std::uint64_t seed = 0;
  double intensity = 0.0;  // empirical m
  Eigen::MatrixXd D;
};

struct EnsembleDiffusion {
  double L = 0.0;
  double R = 0.0;
  std::vector<EnsembleRealization> realizations;
  Eigen::MatrixXd mean;
  Eigen::MatrixXd stderr_;
  double mean_intensity = 0.0;
  // m D_11 averaged realization by realization.
  double mD11 = 0.0;
  double mD11_stderr = 0.0;
};

/// One periodized realization on [0, L)^d with its full D matrix.
EnsembleRealization corrector_realization(const ProcessSpec& spec,
                                          const ConductanceKernel& kernel, double L,
                                          double R, std::uint64_t seed, double tol = 1e-10);

/// Mean and standard error over realizations (needs two or more).
EnsembleDiffusion summarize_ensemble(std::vector<EnsembleRealization> realizations,
                                     double L, double R);

/// Seeds derive_seed(master_seed, r) for r < n_realizations.
EnsembleDiffusion ensemble_D(const ProcessSpec& spec, const ConductanceKernel& kernel,
                             double L, double R, int n_realizations,
                             std::uint64_t master_seed, double tol = 1e-10);

/// Exponent (alpha+1)/(alpha+d+1) of the stretched-exponential Mott decay;
/// 1 in dimension one.
double mott_exponent(double alpha, int dimension);

}  // namespace mottlab
