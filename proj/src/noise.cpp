#include "spdelab/noise.hpp"

#include <algorithm>
#include <cmath>

#include "spdelab/parallel.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

namespace {
constexpr double kPi = 3.14159265358979323846;

double sinc(double z) { return z == 0.0 ? 1.0 : std::sin(z) / z; }

std::uint64_t encode_mode_id(const std::array<int, 3>& m, bool sine) {
  // lattice components fit comfortably in 20 bits each at desk scale
  std::uint64_t id = sine ? 1 : 0;
  for (int i = 0; i < 3; ++i)
    id = (id << 20) | static_cast<std::uint64_t>(m[i] + (1 << 19));
  return id;
}

std::uint64_t encode_cell_id(const std::array<int, 3>& g) {
  std::uint64_t id = 0;
  for (int i = 0; i < 3; ++i)
    id = (id << 21) | static_cast<std::uint64_t>(g[i] + (1 << 20));
  return id;
}
}  // namespace

double SpectralBasis::evaluate(std::size_t j, const Point& x) const {
  const SpectralMode& m = modes[j];
  double box = std::pow(2.0 * half_width, 0.5 * dimension);
  bool zero = m.lattice[0] == 0 && m.lattice[1] == 0 && m.lattice[2] == 0;
  if (zero) return 1.0 / box;
  double phase = 0.0;
  for (int i = 0; i < dimension; ++i)
    phase += m.lattice[i] / (2.0 * half_width) * x[i];
  phase *= 2.0 * kPi;
  double trig = m.sine ? std::sin(phase) : std::cos(phase);
  return std::sqrt(2.0) / box * trig;
}

double SpectralBasis::cell_integral(std::size_t j, const GridSpec& grid,
                                    std::int64_t c) const {
  const SpectralMode& m = modes[j];
  double box = std::pow(2.0 * half_width, 0.5 * dimension);
  double vol = grid.cell_volume();
  bool zero = m.lattice[0] == 0 && m.lattice[1] == 0 && m.lattice[2] == 0;
  if (zero) return vol / box;
  Point y = grid.center(c);
  double phase = 0.0;
  double damp = 1.0;
  for (int i = 0; i < dimension; ++i) {
    double xi = m.lattice[i] / (2.0 * half_width);
    phase += xi * y[i];
    damp *= sinc(kPi * xi * grid.dx());
  }
  phase *= 2.0 * kPi;
  double trig = m.sine ? std::sin(phase) : std::cos(phase);
  return std::sqrt(2.0) / box * vol * damp * trig;
}

bool SpectralBasis::grid_resolvable(std::size_t j, const GridSpec& grid) const {
  const SpectralMode& m = modes[j];
  for (int i = 0; i < dimension; ++i)
    if (2 * std::abs(m.lattice[i]) >= grid.points_per_axis) return false;
  return true;
}

SpectralBasis make_spectral_basis(const CovarianceModel& model,
                                  const GridSpec& grid, int count) {
  if (count < 1) throw std::invalid_argument("spectral basis: count < 1");
  if (model.dimension() != grid.dimension)
    throw std::invalid_argument("spectral basis: dimension mismatch");
  const int d = grid.dimension;
  const double L = grid.half_width;

  SpectralBasis basis;
  basis.dimension = d;
  basis.half_width = L;

  // enumerate half-lattice representatives (first nonzero component > 0)
  int reach = 1;
  while (std::pow(2 * reach + 1, d) < 2 * count + 1) ++reach;
  struct Rep {
    std::array<int, 3> m;
    double norm2;
  };
  std::vector<Rep> reps;
  std::array<int, 3> m = {0, 0, 0};
  std::array<int, 3> lo = {0, 0, 0}, hi = {0, 0, 0};
  for (int i = 0; i < d; ++i) {
    lo[i] = -reach;
    hi[i] = reach;
  }
  for (m[2] = lo[2]; m[2] <= hi[2]; ++m[2])
    for (m[1] = lo[1]; m[1] <= hi[1]; ++m[1])
      for (m[0] = lo[0]; m[0] <= hi[0]; ++m[0]) {
        int first = 0;
        for (int i = 0; i < d; ++i)
          if (m[i] != 0) {
            first = m[i];
            break;
          }
        if (first < 0) continue;  // the mirror handles it
        double n2 = 0.0;
        for (int i = 0; i < d; ++i) n2 += double(m[i]) * m[i];
        reps.push_back({m, n2});
      }
  std::sort(reps.begin(), reps.end(), [](const Rep& a, const Rep& b) {
    if (a.norm2 != b.norm2) return a.norm2 < b.norm2;
    if (a.m[0] != b.m[0]) return a.m[0] < b.m[0];
    if (a.m[1] != b.m[1]) return a.m[1] < b.m[1];
    return a.m[2] < b.m[2];
  });

  for (const Rep& rep : reps) {
    bool zero = rep.norm2 == 0.0;
    double xi = std::sqrt(rep.norm2) / (2.0 * L);
    double weight;
    if (zero && model.kind() == CovKind::riesz)
      weight = model.spectral_density_cube_average(1.0 / (2.0 * L));
    else
      weight = model.spectral_density_radial(xi);
    SpectralMode mode;
    mode.lattice = rep.m;
    mode.xi_norm = xi;
    mode.density_weight = weight;
    mode.sine = false;
    mode.stream_id = encode_mode_id(rep.m, false);
    basis.modes.push_back(mode);
    if (static_cast<int>(basis.modes.size()) == count) break;
    if (!zero) {
      mode.sine = true;
      mode.stream_id = encode_mode_id(rep.m, true);
      basis.modes.push_back(mode);
      if (static_cast<int>(basis.modes.size()) == count) break;
    }
  }
  if (static_cast<int>(basis.modes.size()) < count)
    throw std::logic_error("spectral basis: enumeration too small");
  return basis;
}

NoiseRealization sample_grid_increments(const CovarianceModel& model,
                                        const GridSpec& grid,
                                        std::uint64_t seed,
                                        std::uint64_t replicate) {
  grid.validate();
  if (grid.dt() <= 0.0)
    throw std::invalid_argument("sample_grid_increments: dt <= 0");
  const std::int64_t nc = grid.n_cells();
  const int nt = grid.time_steps;
  const double dt = grid.dt();

  NoiseRealization noise;
  noise.grid = grid;
  noise.seed = seed;
  noise.replicate = replicate;
  noise.grid_increments.emplace(
      static_cast<std::size_t>(nt) * static_cast<std::size_t>(nc), 0.0);
  auto& w = *noise.grid_increments;

  if (model.kind() == CovKind::white) {
    // Cov = dt (dx)^{-d} I. One stream per (slab, global cell) makes draws
    // agree between grids that share cell geometry.
    double sd = std::sqrt(dt / grid.cell_volume());
    parallel_for(nt, [&](std::int64_t k) {
      for (std::int64_t c = 0; c < nc; ++c) {
        auto idx = grid.unflatten(c);
        std::array<int, 3> global = {0, 0, 0};
        for (int i = 0; i < grid.dimension; ++i)
          global[i] = idx[i] - grid.points_per_axis / 2;
        CounterRng rng(seed, stream_tag::grid_noise, replicate,
                       static_cast<std::uint64_t>(k),
                       encode_cell_id(global));
        w[static_cast<std::size_t>(k) * nc + static_cast<std::size_t>(c)] =
            sd * rng.next_normal();
      }
    });
    return noise;
  }

  CovarianceMatrix cm = covariance_matrix(model, grid);
  double sq = std::sqrt(dt);
  parallel_for(nt, [&](std::int64_t k) {
    CounterRng rng(seed, stream_tag::grid_noise, replicate,
                   static_cast<std::uint64_t>(k), 0);
    Eigen::VectorXd z(nc);
    for (std::int64_t c = 0; c < nc; ++c) z(c) = rng.next_normal();
    Eigen::VectorXd v = cm.cholesky * z;
    for (std::int64_t c = 0; c < nc; ++c)
      w[static_cast<std::size_t>(k) * nc + static_cast<std::size_t>(c)] =
          sq * v(c);
  });
  return noise;
}

NoiseRealization sample_spectral_increments(const CovarianceModel& model,
                                            const GridSpec& grid,
                                            int truncation, std::uint64_t seed,
                                            std::uint64_t replicate) {
  grid.validate();
  if (truncation < 1)
    throw std::invalid_argument("sample_spectral_increments: J < 1");
  const int nt = grid.time_steps;
  const double sq = std::sqrt(grid.dt());

  NoiseRealization noise;
  noise.grid = grid;
  noise.seed = seed;
  noise.replicate = replicate;
  noise.truncation = truncation;
  noise.basis = make_spectral_basis(model, grid, truncation);
  noise.spectral_increments.emplace(
      static_cast<std::size_t>(nt) * static_cast<std::size_t>(truncation),
      0.0);
  auto& s = *noise.spectral_increments;

  parallel_for(truncation, [&](std::int64_t j) {
    CounterRng rng(seed, stream_tag::spectral_noise, replicate,
                   noise.basis.modes[static_cast<std::size_t>(j)].stream_id,
                   0);
    for (int k = 0; k < nt; ++k)
      s[static_cast<std::size_t>(k) * truncation +
        static_cast<std::size_t>(j)] = sq * rng.next_normal();
  });
  return noise;
}

NoiseRealization project_to_grid(const NoiseRealization& spectral,
                                 const CovarianceModel& model,
                                 const GridSpec& grid, int* dropped_modes) {
  if (!spectral.spectral_increments)
    throw std::invalid_argument("project_to_grid: spectral part missing");
  if (grid.dimension != spectral.grid.dimension ||
      grid.half_width != spectral.grid.half_width ||
      grid.time_steps != spectral.grid.time_steps)
    throw std::invalid_argument(
        "project_to_grid: grid is incompatible with the basis "
        "(dimension, box or time partition differ)");
  (void)model;

  const std::int64_t nc = grid.n_cells();
  const int nt = grid.time_steps;
  const int J = spectral.truncation;
  const auto& basis = spectral.basis;

  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < static_cast<std::size_t>(J); ++j)
    if (basis.grid_resolvable(j, grid)) kept.push_back(j);
  if (dropped_modes)
    *dropped_modes = J - static_cast<int>(kept.size());

  // a_j(cell) = <1_cell, e_j>_U = sqrt(lambda_j) * \int_cell u_j
  std::vector<double> a(kept.size() * static_cast<std::size_t>(nc));
  for (std::size_t jj = 0; jj < kept.size(); ++jj) {
    std::size_t j = kept[jj];
    double sw = std::sqrt(basis.modes[j].density_weight);
    for (std::int64_t c = 0; c < nc; ++c)
      a[jj * static_cast<std::size_t>(nc) + static_cast<std::size_t>(c)] =
          sw * basis.cell_integral(j, grid, c);
  }

  NoiseRealization out;
  out.grid = grid;
  out.seed = spectral.seed;
  out.replicate = spectral.replicate;
  out.truncation = J;
  out.basis = basis;
  out.spectral_increments = spectral.spectral_increments;
  out.grid_increments.emplace(
      static_cast<std::size_t>(nt) * static_cast<std::size_t>(nc), 0.0);
  auto& w = *out.grid_increments;
  double invvol = 1.0 / grid.cell_volume();

  parallel_for(nt, [&](std::int64_t k) {
    for (std::size_t jj = 0; jj < kept.size(); ++jj) {
      double b = spectral.spectral_at(static_cast<int>(k),
                                      static_cast<int>(kept[jj]));
      if (b == 0.0) continue;
      const double* arow = &a[jj * static_cast<std::size_t>(nc)];
      double* wrow = &w[static_cast<std::size_t>(k) * nc];
      for (std::int64_t c = 0; c < nc; ++c)
        wrow[c] += invvol * arow[c] * b;
    }
  });
  return out;
}

}  // namespace spdelab
