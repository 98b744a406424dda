#ifndef SPDELAB_GRID_HPP
#define SPDELAB_GRID_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace spdelab {

using Point = std::array<double, 3>;  // unused trailing components are 0

inline double norm(const Point& p) {
  return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
}

// Space-time lattice over the periodized box [-L, L)^d. Cells are axis-aligned
// with centers at -L + (i + 1/2) dx; the observation window is the interior
// sub-box on which wave-equation results are unaffected by box truncation.
struct GridSpec {
  int dimension = 1;
  double half_width = 5.0;        // L
  int points_per_axis = 64;       // n_x
  double horizon = 1.0;           // T
  int time_steps = 64;            // n_t
  double window_half_width = 0.0; // 0 means "whole box"

  double dx() const { return 2.0 * half_width / points_per_axis; }
  double dt() const { return horizon / time_steps; }
  double cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < dimension; ++i) v *= dx();
    return v;
  }

  std::int64_t n_cells() const {
    std::int64_t n = 1;
    for (int i = 0; i < dimension; ++i) n *= points_per_axis;
    return n;
  }

  void validate(bool wave = false) const {
    if (dimension < 1 || dimension > 3)
      throw std::invalid_argument("grid: dimension must be in {1,2,3}");
    if (half_width <= 0.0) throw std::invalid_argument("grid: half_width <= 0");
    if (points_per_axis < 2)
      throw std::invalid_argument("grid: points_per_axis < 2");
    if (horizon <= 0.0) throw std::invalid_argument("grid: horizon <= 0");
    if (time_steps < 1) throw std::invalid_argument("grid: time_steps < 1");
    if (window_half_width < 0.0 || window_half_width > half_width)
      throw std::invalid_argument("grid: window outside box");
    if (wave) {
      double w = window_half_width > 0.0 ? window_half_width : 0.0;
      if (half_width < w + horizon)
        throw std::invalid_argument(
            "grid: wave experiments need half_width >= window + horizon "
            "(finite propagation speed makes box truncation exact only then)");
    }
  }

  std::array<int, 3> unflatten(std::int64_t c) const {
    std::array<int, 3> idx = {0, 0, 0};
    for (int i = 0; i < dimension; ++i) {
      idx[i] = static_cast<int>(c % points_per_axis);
      c /= points_per_axis;
    }
    return idx;
  }

  std::int64_t flatten(const std::array<int, 3>& idx) const {
    std::int64_t c = 0;
    for (int i = dimension - 1; i >= 0; --i)
      c = c * points_per_axis + idx[i];
    return c;
  }

  Point center(std::int64_t c) const {
    auto idx = unflatten(c);
    Point p = {0.0, 0.0, 0.0};
    for (int i = 0; i < dimension; ++i)
      p[i] = -half_width + (idx[i] + 0.5) * dx();
    return p;
  }

  // Minimum-image displacement on the torus of size 2L per axis.
  Point wrap(Point p) const {
    double period = 2.0 * half_width;
    for (int i = 0; i < dimension; ++i) {
      p[i] = std::remainder(p[i], period);
    }
    return p;
  }

  // Cell containing x (periodic). Returns flattened index.
  std::int64_t locate(const Point& x) const {
    std::array<int, 3> idx = {0, 0, 0};
    for (int i = 0; i < dimension; ++i) {
      double u = (x[i] + half_width) / dx();
      double n = static_cast<double>(points_per_axis);
      u = u - std::floor(u / n) * n;
      int k = static_cast<int>(u);
      if (k >= points_per_axis) k = points_per_axis - 1;
      idx[i] = k;
    }
    return flatten(idx);
  }

  bool in_window(const Point& p) const {
    if (window_half_width <= 0.0) return true;
    for (int i = 0; i < dimension; ++i)
      if (std::abs(p[i]) > window_half_width) return false;
    return true;
  }

  std::vector<std::int64_t> window_cells() const {
    std::vector<std::int64_t> cells;
    for (std::int64_t c = 0; c < n_cells(); ++c)
      if (in_window(center(c))) cells.push_back(c);
    return cells;
  }
};

}  // namespace spdelab

#endif  // SPDELAB_GRID_HPP
