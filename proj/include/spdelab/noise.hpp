#ifndef SPDELAB_NOISE_HPP
#define SPDELAB_NOISE_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "spdelab/covariance.hpp"
#include "spdelab/grid.hpp"

namespace spdelab {

// One real orthonormal basis element of the noise space U on the periodized
// box: a lattice trigonometric mode scaled by the spectral density at its
// frequency. The zero mode uses the Brillouin-cell density average so that
// densities unbounded at the origin (riesz) stay finite.
struct SpectralMode {
  std::array<int, 3> lattice = {0, 0, 0};  // xi = m / (2L)
  bool sine = false;                       // cos when false
  double xi_norm = 0.0;
  double density_weight = 0.0;             // lambda_j = d mu/d xi at xi_j
  std::uint64_t stream_id = 0;             // stable across truncations
};

struct SpectralBasis {
  int dimension = 1;
  double half_width = 0.0;
  std::vector<SpectralMode> modes;  // ordered by (|m|^2, lex, cos-before-sin)

  // Mode function u_j at x (orthonormal in L^2 of the box).
  double evaluate(std::size_t j, const Point& x) const;
  // Exact integral of u_j over the cell of `grid` with flat index c.
  double cell_integral(std::size_t j, const GridSpec& grid,
                       std::int64_t c) const;
  // True when every per-axis frequency index is strictly below the grid's
  // Nyquist index n_x / 2 (the mode is faithfully representable on cells).
  bool grid_resolvable(std::size_t j, const GridSpec& grid) const;
};

// First `count` basis elements in the canonical order.
SpectralBasis make_spectral_basis(const CovarianceModel& model,
                                  const GridSpec& grid, int count);

// A realization of the noise on the space-time lattice, in physical
// (cell-averaged martingale-measure increments) and/or spectral
// (independent Brownian increments per basis element) form. Immutable
// after creation; with identical (seed, inputs) the bytes are identical.
struct NoiseRealization {
  GridSpec grid;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  int truncation = 0;  // J, when the spectral part exists

  // Cell averages of W over (slab x cell): w[k*n_cells + c]. Per slab the
  // vector is N(0, dt * covariance_matrix).
  std::optional<std::vector<double>> grid_increments;

  // d beta_j over each slab: s[k*J + j], i.i.d. N(0, dt).
  std::optional<std::vector<double>> spectral_increments;
  SpectralBasis basis;

  double grid_at(int slab, std::int64_t cell) const {
    return (*grid_increments)[static_cast<std::size_t>(slab) *
                                  static_cast<std::size_t>(grid.n_cells()) +
                              static_cast<std::size_t>(cell)];
  }
  double spectral_at(int slab, int mode) const {
    return (*spectral_increments)[static_cast<std::size_t>(slab) *
                                      static_cast<std::size_t>(truncation) +
                                  static_cast<std::size_t>(mode)];
  }
};

// Draws the physical-grid form: n_t independent centered Gaussian vectors
// with covariance dt * covariance_matrix. White noise bypasses the dense
// factorization and keys one stream per (slab, global cell) so that grids
// sharing cell geometry share draws.
NoiseRealization sample_grid_increments(const CovarianceModel& model,
                                        const GridSpec& grid,
                                        std::uint64_t seed,
                                        std::uint64_t replicate = 0);

// Draws the spectral form: [n_t][J] i.i.d. N(0, dt), one counter stream per
// (mode, replicate) so a larger truncation extends a smaller one.
NoiseRealization sample_spectral_increments(const CovarianceModel& model,
                                            const GridSpec& grid,
                                            int truncation, std::uint64_t seed,
                                            std::uint64_t replicate = 0);

// Evaluates the spectral noise on cell indicators, producing the coupled
// grid form on the same probability space:
//   w[k][cell] = (dx)^{-d} sum_j <1_cell, e_j>_U dbeta_j[k].
// Modes at or above the grid Nyquist index are omitted (they are not
// representable on the cells); their count is returned via dropped_modes.
NoiseRealization project_to_grid(const NoiseRealization& spectral,
                                 const CovarianceModel& model,
                                 const GridSpec& grid,
                                 int* dropped_modes = nullptr);

}  // namespace spdelab

#endif  // SPDELAB_NOISE_HPP
