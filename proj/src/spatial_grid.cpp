#include "mottlab/spatial_grid.hpp"

#include <algorithm>
#include <cmath>

namespace mottlab {

SpatialGrid::SpatialGrid(const Box& box, double cell_size,
                         std::span<const Point> points, bool periodic)
    : box_(box), periodic_(periodic), points_(points) {
  require(!box.degenerate(), "spatial grid needs a non-degenerate box");
  require(cell_size > 0.0 && std::isfinite(cell_size),
          "spatial grid needs a finite positive cell size");
  for (int k = 0; k < box.dimension; ++k) {
    const double extent = box.hi[k] - box.lo[k];
    // Periodic cells must tile the torus exactly, so round the count down.
    auto n = static_cast<std::int64_t>(periodic ? std::floor(extent / cell_size)
                                                : std::ceil(extent / cell_size));
    ncell_[k] = std::clamp<std::int64_t>(n, 1, 1 << 20);
    width_[k] = extent / static_cast<double>(ncell_[k]);
  }
  std::size_t total = 1;
  for (int k = 0; k < kMaxDim; ++k) total *= static_cast<std::size_t>(ncell_[k]);

  std::vector<std::uint32_t> counts(total + 1, 0);
  std::vector<std::size_t> cell_index(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    cell_index[i] = flat(cell_of(points[i]));
    ++counts[cell_index[i] + 1];
  }
  for (std::size_t f = 0; f < total; ++f) {
    max_occupancy_ = std::max<std::size_t>(max_occupancy_, counts[f + 1]);
    counts[f + 1] += counts[f];
  }
  cell_start_ = counts;
  cell_items_.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    cell_items_[counts[cell_index[i]]++] = static_cast<std::uint32_t>(i);
  }
}

std::array<std::int64_t, kMaxDim> SpatialGrid::cell_of(const Point& x) const {
  std::array<std::int64_t, kMaxDim> c{0, 0, 0};
  for (int k = 0; k < box_.dimension; ++k) {
    auto i = static_cast<std::int64_t>(std::floor((x[k] - box_.lo[k]) / width_[k]));
    if (periodic_) {
      i = ((i % ncell_[k]) + ncell_[k]) % ncell_[k];
    } else {
      i = std::clamp<std::int64_t>(i, 0, ncell_[k] - 1);
    }
    c[k] = i;
  }
  return c;
}

std::size_t SpatialGrid::flat(const std::array<std::int64_t, kMaxDim>& c) const {
  return static_cast<std::size_t>((c[0] * ncell_[1] + c[1]) * ncell_[2] + c[2]);
}

Point SpatialGrid::displacement(const Point& from, const Point& to) const {
  Point z = to - from;
  if (periodic_) {
    for (int k = 0; k < box_.dimension; ++k) {
      const double L = box_.hi[k] - box_.lo[k];
      z[k] -= L * std::round(z[k] / L);
    }
  }
  return z;
}

}  // namespace mottlab
