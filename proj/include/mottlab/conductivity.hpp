#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mottlab/network.hpp"
#include "mottlab/solver.hpp"

namespace mottlab {

// Current entering the interior from the left half-stripe:
// sum over (x left, y interior) of c_xy (V_y - V_x).
double sigma_boundary_current(const StripeNetwork& net, std::span<const double> values);

/// Current through the hyperplane {x_1 = plane}: sum over edges with
/// x_1 <= plane < y_1 of c_xy (V_y - V_x). `plane` must lie in
/// [-ell/2, ell/2).
double sigma_cross_section(const StripeNetwork& net, std::span<const double> values,
                           double plane);

double sigma_energy(const StripeNetwork& net, std::span<const double> values);

// ell^(2-d) sigma
double rescaled_conductivity(double sigma, double ell, int dimension);

/// Planes -ell/2 + j ell/10, j = 0..9.
std::vector<double> default_cross_sections(double ell);

/// max / min total incident weight over solved interior nodes.
double condition_proxy(const StripeNetwork& net);

struct RunTag {
  std::uint64_t seed = 0;
  double beta = 0.0;
  double alpha = 0.0;
  double gamma_loc = 0.0;
};

struct ConductivityReport {
  double sigma_boundary = 0.0;
  std::map<double, double> sigma_cross;  // plane -> current
  double sigma_energy = 0.0;
  double rescaled = 0.0;
  double ell = 0.0;
  int dimension = 1;
  RunTag tag;
  int cg_iters = 0;
  double condition_proxy = 1.0;
  double tol_equiv = 0.0;

  double cross_min() const;
  double cross_max() const;
  // Largest pairwise relative disagreement among all formulas.
  double max_relative_spread() const;
};

/// Evaluates every conductivity formula on a solved potential and checks
/// they agree to tol_equiv = max(1e-8, 100 solver_tol condition_proxy).
/// Throws EquivalenceFailure when they do not.
ConductivityReport analyze_conductivity(const StripeNetwork& net,
                                        const PotentialField& potential,
                                        double solver_tol, const RunTag& tag = {},
                                        std::span<const double> planes = {});

std::string conductivity_csv_header();
void write_conductivity_row(std::ostream& os, const ConductivityReport& report);

}  // namespace mottlab
