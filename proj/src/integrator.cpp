#include "spdelab/integrator.hpp"

#include <cmath>

#include "spdelab/parallel.hpp"

namespace spdelab {

namespace {
constexpr double kPi = 3.14159265358979323846;

int time_index(const GridSpec& grid, double t) {
  double u = t / grid.dt();
  int i = static_cast<int>(std::llround(u));
  if (std::abs(u - i) > 1e-9 || i < 0 || i > grid.time_steps)
    throw std::invalid_argument(
        "time must lie on the grid's time partition");
  return i;
}

std::int64_t locate_center(const GridSpec& grid, const Point& x) {
  std::int64_t c = grid.locate(x);
  Point ctr = grid.center(c);
  for (int i = 0; i < grid.dimension; ++i)
    if (std::abs(ctr[i] - x[i]) > 1e-9 * std::max(1.0, grid.dx()))
      throw std::invalid_argument(
          "evaluation point must be a cell center of the noise grid");
  return c;
}
}  // namespace

IntegrandProcess IntegrandProcess::deterministic(
    std::function<double(double, const Point&)> f, std::string tag) {
  IntegrandProcess g;
  g.eval = [fn = std::move(f)](double s, const Point& y, const PastView&) {
    return fn(s, y);
  };
  g.tag = std::move(tag);
  return g;
}

IntegrandProcess IntegrandProcess::zero() {
  return deterministic([](double, const Point&) { return 0.0; }, "zero");
}

KernelLagCache::KernelLagCache(const Kernel& kernel, const GridSpec& grid,
                               KernelGridOptions opt)
    : kernel_(kernel), grid_(grid), opt_(opt) {}

const std::vector<double>& KernelLagCache::at(double tau) const {
  // lags arrive as multiples of dt/2
  long long key = std::llround(4.0 * tau / grid_.dt());
  auto it = cache_.find(key);
  if (it == cache_.end())
    it = cache_.emplace(key, kernel_lag_table(kernel_, tau, grid_, opt_))
             .first;
  return it->second;
}

std::int64_t cell_offset_index(const GridSpec& grid, std::int64_t cell_x,
                               std::int64_t cell_y) {
  auto ix = grid.unflatten(cell_x);
  auto iy = grid.unflatten(cell_y);
  std::array<int, 3> off = {0, 0, 0};
  for (int i = 0; i < grid.dimension; ++i) {
    int o = ix[i] - iy[i];
    o %= grid.points_per_axis;
    if (o < 0) o += grid.points_per_axis;
    off[i] = o;
  }
  return grid.flatten(off);
}

double kernel_time_lag(Equation eq, int target_index, int slab, double dt) {
  int lag = target_index - slab;
  if (lag < 1) throw std::logic_error("kernel_time_lag: slab not before t");
  if (eq == Equation::heat && lag == 1) return 0.5 * dt;
  return lag * dt;
}

double walsh_integral(const NoiseRealization& noise,
                      const IntegrandProcess& g, double t, const Point& x,
                      const KernelLagCache* kernel, const PastView& past) {
  if (!noise.grid_increments)
    throw std::invalid_argument("walsh_integral: grid part missing");
  const GridSpec& grid = noise.grid;
  const int i = time_index(grid, t);
  const std::int64_t nc = grid.n_cells();
  const double vol = grid.cell_volume();
  const double dt = grid.dt();

  std::int64_t xc = 0;
  if (kernel != nullptr) xc = locate_center(grid, x);

  double acc = 0.0;
  for (int k = 0; k < i; ++k) {
    double s = k * dt;
    const std::vector<double>* table = nullptr;
    if (kernel != nullptr)
      table = &kernel->at(
          kernel_time_lag(kernel->kernel().equation, i, k, dt));
    double slab_sum = 0.0;
    for (std::int64_t c = 0; c < nc; ++c) {
      double gv = g.eval ? g.eval(s, grid.center(c), past) : 1.0;
      if (table != nullptr)
        gv *= (*table)[static_cast<std::size_t>(
            cell_offset_index(grid, xc, c))];
      slab_sum += gv * noise.grid_at(k, c);
    }
    acc += slab_sum * vol;
  }
  return acc;
}

double series_integral(const NoiseRealization& noise,
                       const IntegrandProcess& g, double t, const Point& x,
                       const KernelLagCache* kernel, const SeriesOptions& opt,
                       const PastView& past) {
  if (!noise.spectral_increments)
    throw std::invalid_argument("series_integral: spectral part missing");
  const GridSpec& grid = noise.grid;
  const SpectralBasis& basis = noise.basis;
  const int i = time_index(grid, t);
  const int J = noise.truncation;
  const double dt = grid.dt();

  if (kernel != nullptr) {
    if (g.eval)
      throw std::invalid_argument(
          "series_integral: kernel form supports the pure stochastic "
          "convolution (no extra integrand factor)");
    // <Gamma(tau, x - .), e_j>_U = sqrt(lambda_j) FGamma(tau, |xi_j|) u_j(x)
    double acc = 0.0;
    for (int j = 0; j < J; ++j) {
      const SpectralMode& m = basis.modes[static_cast<std::size_t>(j)];
      double sw = std::sqrt(m.density_weight);
      double uj = basis.evaluate(static_cast<std::size_t>(j), x);
      double mode_acc = 0.0;
      for (int k = 0; k < i; ++k) {
        double tau =
            kernel_time_lag(kernel->kernel().equation, i, k, dt);
        mode_acc += kernel->kernel().fourier(tau, m.xi_norm) *
                    noise.spectral_at(k, j);
      }
      acc += sw * uj * mode_acc;
    }
    return acc;
  }

  // quadrature nodes: `refine` Gauss points per cell per axis
  const int r = std::max(1, opt.refine);
  const GaussRule& rule = gauss_legendre(r > 1 ? r : 2);
  std::vector<Point> pts;
  std::vector<double> wts;
  const double h = 0.5 * grid.dx();
  for (std::int64_t c = 0; c < grid.n_cells(); ++c) {
    Point ctr = grid.center(c);
    if (grid.dimension == 1) {
      for (int a = 0; a < static_cast<int>(rule.nodes.size()); ++a) {
        pts.push_back({ctr[0] + h * rule.nodes[a], 0.0, 0.0});
        wts.push_back(rule.weights[a] * h);
      }
    } else if (grid.dimension == 2) {
      for (int a = 0; a < static_cast<int>(rule.nodes.size()); ++a)
        for (int b = 0; b < static_cast<int>(rule.nodes.size()); ++b) {
          pts.push_back(
              {ctr[0] + h * rule.nodes[a], ctr[1] + h * rule.nodes[b], 0.0});
          wts.push_back(rule.weights[a] * rule.weights[b] * h * h);
        }
    } else {
      for (int a = 0; a < static_cast<int>(rule.nodes.size()); ++a)
        for (int b = 0; b < static_cast<int>(rule.nodes.size()); ++b)
          for (int cc = 0; cc < static_cast<int>(rule.nodes.size()); ++cc) {
            pts.push_back({ctr[0] + h * rule.nodes[a],
                           ctr[1] + h * rule.nodes[b],
                           ctr[2] + h * rule.nodes[cc]});
            wts.push_back(rule.weights[a] * rule.weights[b] *
                          rule.weights[cc] * h * h * h);
          }
    }
  }
  // basis values at the nodes, mode-major
  std::vector<double> umat(static_cast<std::size_t>(J) * pts.size());
  for (int j = 0; j < J; ++j)
    for (std::size_t p = 0; p < pts.size(); ++p)
      umat[static_cast<std::size_t>(j) * pts.size() + p] =
          basis.evaluate(static_cast<std::size_t>(j), pts[p]);

  double acc = 0.0;
  std::vector<double> gvals(pts.size());
  for (int k = 0; k < i; ++k) {
    double s = k * dt;
    for (std::size_t p = 0; p < pts.size(); ++p)
      gvals[p] = g.eval(s, pts[p], past) * wts[p];
    for (int j = 0; j < J; ++j) {
      double b = noise.spectral_at(k, j);
      if (b == 0.0) continue;
      const SpectralMode& m = basis.modes[static_cast<std::size_t>(j)];
      const double* urow =
          &umat[static_cast<std::size_t>(j) * pts.size()];
      double coeff = 0.0;
      for (std::size_t p = 0; p < pts.size(); ++p) coeff += gvals[p] * urow[p];
      acc += std::sqrt(m.density_weight) * coeff * b;
    }
  }
  (void)x;
  return acc;
}

double drift_integral(const KernelLagCache& kernel,
                      const IntegrandProcess& b_of_u, double t, const Point& x,
                      const GridSpec& grid, const PastView& past) {
  const int i = time_index(grid, t);
  if (i == 0) return 0.0;
  const std::int64_t nc = grid.n_cells();
  const double vol = grid.cell_volume();
  const double dt = grid.dt();
  std::int64_t xc = locate_center(grid, x);

  double acc = 0.0;
  for (int k = 0; k < i; ++k) {
    double s_mid = (k + 0.5) * dt;
    const auto& table = kernel.at(s_mid);
    double slab = 0.0;
    for (std::int64_t c = 0; c < nc; ++c) {
      double w = table[static_cast<std::size_t>(
          cell_offset_index(grid, xc, c))];
      if (w == 0.0) continue;
      slab += w * b_of_u.eval(t - s_mid, grid.center(c), past);
    }
    acc += slab * vol * dt;
  }
  return acc;
}

IsometryReport isometry_gap(const IntegrandProcess& g,
                            const CovarianceModel& model,
                            const KernelLagCache* kernel, double t,
                            const Point& x, const GridSpec& grid,
                            int replicates, std::uint64_t seed) {
  if (replicates < 2)
    throw std::invalid_argument("isometry_gap: need at least 2 replicates");
  const int i = time_index(grid, t);
  const std::int64_t nc = grid.n_cells();
  const double dt = grid.dt();
  const double vol = grid.cell_volume();

  // deterministic side: the discretized integrand per slab
  std::int64_t xc = kernel != nullptr ? locate_center(grid, x) : 0;
  PastView none;
  double quad = 0.0;
  for (int k = 0; k < i; ++k) {
    SampledFunction gk;
    gk.grid = grid;
    gk.values.resize(static_cast<std::size_t>(nc));
    for (std::int64_t c = 0; c < nc; ++c) {
      double v = g.eval ? g.eval(k * dt, grid.center(c), none) : 1.0;
      if (kernel != nullptr) {
        const auto& table = kernel->at(
            kernel_time_lag(kernel->kernel().equation, i, k, dt));
        v *= table[static_cast<std::size_t>(cell_offset_index(grid, xc, c))];
      }
      gk.values[static_cast<std::size_t>(c)] = v;
    }
    if (model.kind() == CovKind::white) {
      double n2 = 0.0;
      for (double v : gk.values) n2 += v * v;
      quad += n2 * vol * dt;
    } else {
      UInnerOptions uopt;
      uopt.spectral_radius = 50.0;
      uopt.radial_panels = 256;
      uopt.check_tol = 5e-3;
      quad += u_inner(model, gk, gk, uopt) * dt;
    }
  }

  // Monte Carlo side
  std::vector<double> vals(static_cast<std::size_t>(replicates));
  parallel_for(replicates, [&](std::int64_t r) {
    auto noise = sample_grid_increments(model, grid, seed,
                                        static_cast<std::uint64_t>(r));
    vals[static_cast<std::size_t>(r)] =
        walsh_integral(noise, g, t, x, kernel);
  });
  double m2 = 0.0, m4 = 0.0;
  for (double v : vals) {
    m2 += v * v;
    m4 += v * v * v * v;
  }
  m2 /= replicates;
  m4 /= replicates;

  IsometryReport rep;
  rep.replicates = replicates;
  rep.mc_second_moment = m2;
  rep.quadrature_norm = quad;
  rep.gap = m2 - quad;
  rep.standard_error = std::sqrt(std::max(0.0, m4 - m2 * m2) / replicates);
  return rep;
}

}  // namespace spdelab
