#pragma once

#include <functional>
#include <limits>
#include <variant>

#include "mottlab/common.hpp"

namespace mottlab {

// c = exp(-(2/gamma)|x-y| - (beta/2)(|Ex| + |Ey| + |Ex - Ey|))
struct MillerAbrahams {
  double beta = 0.0;   // inverse temperature
  double gamma = 1.0;  // localization length
};

// Constant weight `c` for |x-y| <= range, zero beyond.
struct NearestNeighbor {
  double c = 1.0;
  double range = 1.0;
};

struct CustomKernel {
  std::function<double(const Point&, const Point&, double, double)> fn;
  // Pairs farther apart than this carry zero (or negligible) weight.
  double range = std::numeric_limits<double>::infinity();
};

class ConductanceKernel {
 public:
  using Kind = std::variant<MillerAbrahams, NearestNeighbor, CustomKernel>;

  ConductanceKernel(Kind kind);  // NOLINT(google-explicit-constructor)

  static ConductanceKernel miller_abrahams(double beta, double gamma) {
    return ConductanceKernel(MillerAbrahams{beta, gamma});
  }
  static ConductanceKernel nearest_neighbor(double c, double range) {
    return ConductanceKernel(NearestNeighbor{c, range});
  }

  const Kind& kind() const { return kind_; }
  bool is_miller_abrahams() const {
    return std::holds_alternative<MillerAbrahams>(kind_);
  }

  double operator()(const Point& x, const Point& y, double ex, double ey) const;

  /// Smallest radius beyond which every weight is below `rel_tol` times the
  /// largest possible weight at zero distance. Finite-range kernels return
  /// their range regardless of `rel_tol`.
  double cutoff_radius(double rel_tol) const;

  /// Upper bound on the spatial factor of the weight at distance r, used to
  /// bound neglected conductance. Returns 0 beyond a finite range.
  double distance_envelope(double r) const;

  /// ln of the envelope decay per unit distance (2/gamma for MA); 0 for
  /// finite-range kernels.
  double decay_rate() const;

 private:
  Kind kind_;
};

double conductance(const ConductanceKernel& kernel, const Point& x,
                   const Point& y, double ex, double ey);

}  // namespace mottlab
