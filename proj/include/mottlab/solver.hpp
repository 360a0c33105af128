#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mottlab/network.hpp"

namespace mottlab {

enum class SolverKind { CG, Direct };

struct PotentialField {
  std::vector<double> values;  // one per network node
  double residual_norm = 0.0;  // ||L_II V_I - b|| / ||b||
  int iterations = 0;
  SolverKind solver_kind = SolverKind::CG;
};

/// Electrical potential with V = 0 on the left half-stripe and V = 1 on the
/// right one, harmonic at every interior node. Jacobi-preconditioned CG on
/// the interior block; default iteration cap is 50 sqrt(N_interior).
/// Floating components are held at 1/2.
/// Throws NotConverged or SingularComponent.
PotentialField solve_potential(const StripeNetwork& net, double tol = 1e-10,
                               std::optional<int> max_iter = std::nullopt);

/// Dense LDLT solve of the same system. Oracle for small networks.
PotentialField solve_potential_direct(const StripeNetwork& net);

// sum over edges of c_ij (V_i - V_j)^2
double dirichlet_energy(const StripeNetwork& net, std::span<const double> values);

/// Per interior node |sum_y c_xy (V_y - V_x)| / sum_y c_xy. Floating nodes
/// report 0.
std::vector<double> kirchhoff_residuals(const StripeNetwork& net,
                                        std::span<const double> values);

/// Random interior perturbations of size `magnitude` never lower the energy
/// by more than 10 tol energy(V).
bool verify_minimality(const StripeNetwork& net, const PotentialField& potential,
                       int n_trials, double magnitude, std::uint64_t seed = 0,
                       double tol = 1e-10);

// CSV "node_index,x1..xd,class,V".
void write_potential_csv(std::ostream& os, const StripeNetwork& net,
                         const PotentialField& potential);

}  // namespace mottlab
