#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mottlab/common.hpp"

namespace mottlab {

// Uniform cell list over a box. In periodic mode the box is a torus and
// queries use minimum-image displacements.
class SpatialGrid {
 public:
  SpatialGrid(const Box& box, double cell_size, std::span<const Point> points,
              bool periodic = false);

  /// Calls fn(j, displacement y_j - x) for every point j != self within
  /// `radius` of x. Pass self = -1 to keep all points.
  template <class Fn>
  void for_each_within(const Point& x, double radius, std::int64_t self,
                       Fn&& fn) const;

  Point displacement(const Point& from, const Point& to) const;

  std::size_t max_occupancy() const { return max_occupancy_; }

 private:
  std::array<std::int64_t, kMaxDim> cell_of(const Point& x) const;
  std::size_t flat(const std::array<std::int64_t, kMaxDim>& c) const;

  Box box_;
  Point width_{1.0, 1.0, 1.0};
  bool periodic_;
  std::span<const Point> points_;
  std::array<std::int64_t, kMaxDim> ncell_{1, 1, 1};
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> cell_items_;
  std::size_t max_occupancy_ = 0;
};

template <class Fn>
void SpatialGrid::for_each_within(const Point& x, double radius,
                                  std::int64_t self, Fn&& fn) const {
  const int d = box_.dimension;
  const auto center = cell_of(x);
  std::array<std::int64_t, kMaxDim> lo{0, 0, 0}, hi{0, 0, 0};
  for (int k = 0; k < d; ++k) {
    const auto reach = static_cast<std::int64_t>(std::ceil(radius / width_[k]));
    lo[k] = center[k] - reach;
    hi[k] = center[k] + reach;
    if (periodic_) {
      // Visiting a cell twice would double count; clamp the span to one wrap.
      if (hi[k] - lo[k] + 1 > ncell_[k]) {
        lo[k] = 0;
        hi[k] = ncell_[k] - 1;
      }
    } else {
      lo[k] = std::max<std::int64_t>(lo[k], 0);
      hi[k] = std::min<std::int64_t>(hi[k], ncell_[k] - 1);
    }
  }
  const double r2 = radius * radius;
  std::array<std::int64_t, kMaxDim> c{0, 0, 0};
  for (c[0] = lo[0]; c[0] <= hi[0]; ++c[0]) {
    for (c[1] = lo[1]; c[1] <= hi[1]; ++c[1]) {
      for (c[2] = lo[2]; c[2] <= hi[2]; ++c[2]) {
        std::array<std::int64_t, kMaxDim> w = c;
        if (periodic_) {
          for (int k = 0; k < d; ++k) w[k] = ((w[k] % ncell_[k]) + ncell_[k]) % ncell_[k];
        }
        const std::size_t f = flat(w);
        for (std::uint32_t s = cell_start_[f]; s < cell_start_[f + 1]; ++s) {
          const std::uint32_t j = cell_items_[s];
          if (static_cast<std::int64_t>(j) == self) continue;
          const Point z = displacement(x, points_[j]);
          if (dot(z, z) <= r2) fn(j, z);
        }
      }
    }
  }
}

}  // namespace mottlab
