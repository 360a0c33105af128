#include "mottlab/kernel.hpp"

#include <cmath>

namespace mottlab {

namespace {

// Exact equality test on all coordinates: the kernel vanishes on the diagonal.
bool same_point(const Point& x, const Point& y) {
  return x[0] == y[0] && x[1] == y[1] && x[2] == y[2];
}

// Matches the distance test of the nearest-neighbor kernel on lattices whose
// coordinates carry rounding from the random shift.
constexpr double kRangeSlack = 1e-9;

}  // namespace

ConductanceKernel::ConductanceKernel(Kind kind) : kind_(std::move(kind)) {
  if (const auto* ma = std::get_if<MillerAbrahams>(&kind_)) {
    require(ma->beta >= 0.0, "Miller-Abrahams kernel needs beta >= 0");
    require(ma->gamma > 0.0, "Miller-Abrahams kernel needs gamma > 0");
  } else if (const auto* nn = std::get_if<NearestNeighbor>(&kind_)) {
    require(nn->c > 0.0, "nearest-neighbor kernel needs c > 0");
    require(nn->range > 0.0, "nearest-neighbor kernel needs range > 0");
  } else {
    const auto& custom = std::get<CustomKernel>(kind_);
    require(static_cast<bool>(custom.fn), "custom kernel needs a function");
    require(custom.range > 0.0, "custom kernel needs range > 0");
  }
}

double ConductanceKernel::operator()(const Point& x, const Point& y, double ex,
                                     double ey) const {
  if (same_point(x, y)) return 0.0;
  if (const auto* ma = std::get_if<MillerAbrahams>(&kind_)) {
    const double r = distance(x, y);
    const double marks = std::abs(ex) + std::abs(ey) + std::abs(ex - ey);
    return std::exp(-(2.0 / ma->gamma) * r - 0.5 * ma->beta * marks);
  }
  if (const auto* nn = std::get_if<NearestNeighbor>(&kind_)) {
    return distance(x, y) <= nn->range + kRangeSlack ? nn->c : 0.0;
  }
  const auto& custom = std::get<CustomKernel>(kind_);
  const double c = custom.fn(x, y, ex, ey);
  return c > 0.0 ? c : 0.0;
}

double ConductanceKernel::cutoff_radius(double rel_tol) const {
  if (const auto* ma = std::get_if<MillerAbrahams>(&kind_)) {
    return 0.5 * ma->gamma * std::log(1.0 / rel_tol);
  }
  if (const auto* nn = std::get_if<NearestNeighbor>(&kind_)) {
    return nn->range + kRangeSlack;
  }
  return std::get<CustomKernel>(kind_).range;
}

double ConductanceKernel::distance_envelope(double r) const {
  if (const auto* ma = std::get_if<MillerAbrahams>(&kind_)) {
    return std::exp(-(2.0 / ma->gamma) * r);
  }
  if (const auto* nn = std::get_if<NearestNeighbor>(&kind_)) {
    return r <= nn->range + kRangeSlack ? nn->c : 0.0;
  }
  const auto& custom = std::get<CustomKernel>(kind_);
  // Unknown shape: nothing can be said inside the range.
  return r <= custom.range ? std::numeric_limits<double>::infinity() : 0.0;
}

double ConductanceKernel::decay_rate() const {
  if (const auto* ma = std::get_if<MillerAbrahams>(&kind_)) return 2.0 / ma->gamma;
  return 0.0;
}

double conductance(const ConductanceKernel& kernel, const Point& x,
                   const Point& y, double ex, double ey) {
  return kernel(x, y, ex, ey);
}

}  // namespace mottlab
