#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mottlab {

/// Spatial dimensions supported by the lab. Coordinates beyond `dimension`
/// are kept at zero so distances can always be taken over all three slots.
inline constexpr int kMaxDim = 3;

using Point = std::array<double, kMaxDim>;

inline double norm(const Point& p) {
  return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
}

inline Point operator-(const Point& a, const Point& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Point operator+(const Point& a, const Point& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline double dot(const Point& a, const Point& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double distance(const Point& a, const Point& b) { return norm(a - b); }

// Axis-aligned box [lo, hi) in the first `dimension` coordinates.
struct Box {
  int dimension = 1;
  Point lo{};
  Point hi{};

  double volume() const {
    double v = 1.0;
    for (int k = 0; k < dimension; ++k) v *= hi[k] - lo[k];
    return v;
  }

  bool degenerate() const {
    for (int k = 0; k < dimension; ++k)
      if (!(hi[k] > lo[k])) return true;
    return false;
  }

  bool contains(const Point& x) const {
    for (int k = 0; k < dimension; ++k)
      if (x[k] < lo[k] || x[k] >= hi[k]) return false;
    return true;
  }

  static Box cube(int dimension, double lo, double hi) {
    Box b;
    b.dimension = dimension;
    for (int k = 0; k < dimension; ++k) {
      b.lo[k] = lo;
      b.hi[k] = hi;
    }
    return b;
  }
};

// Error hierarchy. Everything the library throws derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class EmptyBoundary : public Error {
 public:
  using Error::Error;
};

class WindowTooSmall : public Error {
 public:
  using Error::Error;
};

class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class SingularComponent : public Error {
 public:
  using Error::Error;
};

class DisconnectedEnvironment : public Error {
 public:
  using Error::Error;
};

class ZeroExitRate : public Error {
 public:
  using Error::Error;
};

class EquivalenceFailure : public Error {
 public:
  using Error::Error;
};

inline std::string format_scientific(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace mottlab
