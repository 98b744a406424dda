#include "spdelab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spdelab/parallel.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void Field::check_finite() const {
  for (double v : values)
    if (!std::isfinite(v))
      throw std::runtime_error("field contains a non-finite entry");
}

Coefficients Coefficients::make(const std::string& sigma_name,
                                double sigma_scale, double sigma_shift,
                                const std::string& b_name, double b_scale,
                                double b_shift) {
  auto build = [](const std::string& name, double scale, double shift,
                  std::function<double(double)>* fn, double* lip) {
    if (name == "zero") {
      *fn = [](double) { return 0.0; };
      *lip = 0.0;
    } else if (name == "one") {
      *fn = [](double) { return 1.0; };
      *lip = 0.0;
    } else if (name == "linear") {
      *fn = [scale, shift](double u) { return scale * u + shift; };
      *lip = std::abs(scale);
    } else if (name == "sine") {
      *fn = [scale, shift](double u) { return scale * std::sin(u) + shift; };
      *lip = std::abs(scale);
    } else {
      throw std::invalid_argument("unknown coefficient '" + name +
                                  "' (catalog: zero, one, linear, sine)");
    }
  };
  Coefficients c;
  build(sigma_name, sigma_scale, sigma_shift, &c.sigma, &c.sigma_lipschitz);
  build(b_name, b_scale, b_shift, &c.b, &c.b_lipschitz);
  c.sigma_tag = sigma_name;
  c.b_tag = b_name;
  c.validate_lipschitz();
  return c;
}

void Coefficients::validate_lipschitz(std::uint64_t seed) const {
  CounterRng rng(seed, stream_tag::probe);
  for (int i = 0; i < 256; ++i) {
    double x = 10.0 * (rng.next_uniform() - 0.5);
    double y = 10.0 * (rng.next_uniform() - 0.5);
    double slack = 1e-9 * (1.0 + std::abs(x - y));
    if (std::abs(sigma(x) - sigma(y)) >
        sigma_lipschitz * std::abs(x - y) + slack)
      throw std::invalid_argument(
          "sigma violates its declared Lipschitz constant on a probe pair");
    if (std::abs(b(x) - b(y)) > b_lipschitz * std::abs(x - y) + slack)
      throw std::invalid_argument(
          "b violates its declared Lipschitz constant on a probe pair");
  }
}

// ---------------------------------------------------------------------------
// linear spectral solver

Field solve_linear_spectral(const Kernel& kernel, const CovarianceModel& model,
                            const GridSpec& grid, std::uint64_t seed,
                            std::uint64_t replicate,
                            const LinearSpectralOptions& opt) {
  grid.validate(kernel.equation == Equation::wave);
  QuadratureSpec quad;
  if (!dalang_condition(model, quad).holds)
    throw std::invalid_argument(
        "solve_linear_spectral: the model fails the admissibility "
        "(integrability) condition");

  int modes = opt.modes;
  if (modes <= 0) {
    int per_axis = grid.points_per_axis / 2 - 1;  // strictly sub-Nyquist
    if (per_axis < 0) per_axis = 0;
    modes = 1;
    for (int i = 0; i < grid.dimension; ++i) modes *= 2 * per_axis + 1;
  }
  SpectralBasis basis = make_spectral_basis(model, grid, modes);

  const int nt = grid.time_steps;
  const std::int64_t nc = grid.n_cells();
  const double h = grid.dt();

  Field field;
  field.grid = grid;
  field.values.assign(
      static_cast<std::size_t>(nt + 1) * static_cast<std::size_t>(nc), 0.0);
  field.provenance.scheme = "linear-spectral";
  field.provenance.model = model.describe();
  field.provenance.kernel = to_string(kernel.equation);
  field.provenance.sigma_tag = "one";
  field.provenance.b_tag = "zero";
  field.provenance.seed = seed;
  field.provenance.replicate = replicate;

  const int threads = thread_count();
  std::vector<std::vector<double>> partial(
      static_cast<std::size_t>(threads),
      std::vector<double>(field.values.size(), 0.0));
  std::int64_t n_modes = static_cast<std::int64_t>(basis.modes.size());
  std::int64_t chunk = (n_modes + threads - 1) / threads;

  parallel_for(threads, [&](std::int64_t tid) {
    std::vector<double>& acc = partial[static_cast<std::size_t>(tid)];
    std::vector<double> path(static_cast<std::size_t>(nt + 1), 0.0);
    for (std::int64_t j = tid * chunk;
         j < std::min(n_modes, (tid + 1) * chunk); ++j) {
      const SpectralMode& m = basis.modes[static_cast<std::size_t>(j)];
      CounterRng rng(seed, stream_tag::linear_solver, replicate, m.stream_id,
                     0);
      path[0] = 0.0;
      if (kernel.equation == Equation::heat) {
        double a = 4.0 * kPi * kPi * m.xi_norm * m.xi_norm;
        double decay = std::exp(-a * h);
        double incr_sd =
            a > 0.0 ? std::sqrt(-std::expm1(-2.0 * a * h) / (2.0 * a))
                    : std::sqrt(h);
        double x = 0.0;
        for (int i = 1; i <= nt; ++i) {
          x = decay * x + incr_sd * rng.next_normal();
          path[static_cast<std::size_t>(i)] = x;
        }
      } else {
        // stochastic oscillator (X, V) with exact rotation and increment
        // covariance
        double a = 2.0 * kPi * m.xi_norm;
        double c = std::cos(a * h), s = std::sin(a * h);
        double q11, q22, q12;
        if (a * h < 1e-4) {
          q11 = h * h * h / 3.0 - a * a * std::pow(h, 5) / 15.0;
          q22 = h - a * a * h * h * h / 3.0;
          q12 = 0.5 * h * h;
        } else {
          q11 = (0.5 * h - s * c / (2.0 * a)) / (a * a);
          q22 = 0.5 * h + s * c / (2.0 * a);
          q12 = s * s / (2.0 * a * a);
        }
        double l11 = std::sqrt(std::max(q11, 0.0));
        double l21 = l11 > 0.0 ? q12 / l11 : 0.0;
        double l22 = std::sqrt(std::max(q22 - l21 * l21, 0.0));
        double x = 0.0, v = 0.0;
        for (int i = 1; i <= nt; ++i) {
          double z1 = rng.next_normal(), z2 = rng.next_normal();
          double dx = l11 * z1;
          double dv = l21 * z1 + l22 * z2;
          double xn, vn;
          if (a > 0.0) {
            xn = c * x + (s / a) * v + dx;
            vn = -a * s * x + c * v + dv;
          } else {
            xn = x + h * v + dx;
            vn = v + dv;
          }
          x = xn;
          v = vn;
          path[static_cast<std::size_t>(i)] = x;
        }
      }
      double sw = std::sqrt(m.density_weight);
      for (std::int64_t cidx = 0; cidx < nc; ++cidx) {
        double uj = basis.evaluate(static_cast<std::size_t>(j),
                                   grid.center(cidx));
        double coeff = sw * uj;
        if (coeff == 0.0) continue;
        for (int i = 1; i <= nt; ++i)
          acc[static_cast<std::size_t>(i) * nc +
              static_cast<std::size_t>(cidx)] +=
              coeff * path[static_cast<std::size_t>(i)];
      }
    }
  });
  for (const auto& acc : partial)
    for (std::size_t i = 0; i < acc.size(); ++i) field.values[i] += acc[i];
  field.check_finite();
  return field;
}

// ---------------------------------------------------------------------------
// Picard and one-pass schemes

namespace {

struct MildWorkspace {
  GridSpec grid;
  int nt = 0;
  std::int64_t nc = 0;
  std::vector<double> i0;  // (nt+1) x nc
  KernelLagCache stoch_tables;
  KernelLagCache drift_tables;
  std::vector<std::vector<std::int64_t>> offsets;  // [xc][c] flattened lag

  MildWorkspace(const Kernel& kernel, const GridSpec& g,
                const InitialData& data)
      : grid(g),
        nt(g.time_steps),
        nc(g.n_cells()),
        stoch_tables(kernel, g),
        drift_tables(kernel, g) {
    i0.resize(static_cast<std::size_t>(nt + 1) *
              static_cast<std::size_t>(nc));
    parallel_for(nt + 1, [&](std::int64_t i) {
      for (std::int64_t c = 0; c < nc; ++c)
        i0[static_cast<std::size_t>(i) * nc + static_cast<std::size_t>(c)] =
            initial_term(kernel, data, i * g.dt(), g.center(c));
    });
    offsets.resize(static_cast<std::size_t>(nc));
    for (std::int64_t xc = 0; xc < nc; ++xc) {
      offsets[static_cast<std::size_t>(xc)].resize(
          static_cast<std::size_t>(nc));
      for (std::int64_t c = 0; c < nc; ++c)
        offsets[static_cast<std::size_t>(xc)][static_cast<std::size_t>(c)] =
            cell_offset_index(grid, xc, c);
    }
  }
};

// One full right-hand-side evaluation of the mild equation on the grid:
// out(t_i, x) = I0 + stochastic term of sigma(state) + drift of b(state).
// `euler_drift` freezes the drift's interior time at the previous grid
// point; otherwise the midpoint value interpolates the two bracketing
// slices of `state` (which is what makes the Picard map read its iterate
// at the target time through the drift).
void mild_rhs(const Kernel& kernel, const MildWorkspace& ws,
              const NoiseRealization& noise, const Coefficients& coeffs,
              const std::vector<double>& state, bool euler_drift,
              int only_time_index, std::vector<double>* out) {
  const int nt = ws.nt;
  const std::int64_t nc = ws.nc;
  const double dt = ws.grid.dt();
  const double vol = ws.grid.cell_volume();
  const bool has_drift = coeffs.b_tag != "zero";

  // sigma(state) * increment * volume per slab
  std::vector<double> s_slab(static_cast<std::size_t>(nt) *
                             static_cast<std::size_t>(nc));
  for (int k = 0; k < nt; ++k)
    for (std::int64_t c = 0; c < nc; ++c)
      s_slab[static_cast<std::size_t>(k) * nc + static_cast<std::size_t>(c)] =
          coeffs.sigma(state[static_cast<std::size_t>(k) * nc +
                             static_cast<std::size_t>(c)]) *
          noise.grid_at(k, c) * vol;

  parallel_for(nt + 1, [&](std::int64_t i) {
    if (only_time_index >= 0 && i != only_time_index) return;
    for (std::int64_t xc = 0; xc < nc; ++xc) {
      double acc =
          ws.i0[static_cast<std::size_t>(i) * nc +
                static_cast<std::size_t>(xc)];
      const auto& off = ws.offsets[static_cast<std::size_t>(xc)];
      for (int k = 0; k < static_cast<int>(i); ++k) {
        const auto& table = ws.stoch_tables.at(
            kernel_time_lag(kernel.equation, static_cast<int>(i), k, dt));
        const double* srow = &s_slab[static_cast<std::size_t>(k) * nc];
        double slab_sum = 0.0;
        for (std::int64_t c = 0; c < nc; ++c) {
          double w = table[static_cast<std::size_t>(off[c])];
          if (w != 0.0) slab_sum += w * srow[c];
        }
        acc += slab_sum;
      }
      if (has_drift) {
        for (int k = 0; k < static_cast<int>(i); ++k) {
          double s_mid = (k + 0.5) * dt;
          const auto& table = ws.drift_tables.at(s_mid);
          // interior time t_i - s_mid lies between indices i-k-1 and i-k
          int lo = static_cast<int>(i) - k - 1;
          double slab_sum = 0.0;
          for (std::int64_t c = 0; c < nc; ++c) {
            double w = table[static_cast<std::size_t>(off[c])];
            if (w == 0.0) continue;
            double ulo = state[static_cast<std::size_t>(lo) * nc +
                               static_cast<std::size_t>(c)];
            double uval;
            if (euler_drift) {
              uval = ulo;
            } else {
              double uhi = state[static_cast<std::size_t>(lo + 1) * nc +
                                 static_cast<std::size_t>(c)];
              uval = 0.5 * (ulo + uhi);
            }
            slab_sum += w * coeffs.b(uval);
          }
          acc += slab_sum * vol * dt;
        }
      }
      (*out)[static_cast<std::size_t>(i) * nc +
             static_cast<std::size_t>(xc)] = acc;
    }
  });
}

void require_mild_inputs(const Kernel& kernel, const CovarianceModel& model,
                         const GridSpec& grid,
                         const NoiseRealization& noise) {
  grid.validate(kernel.equation == Equation::wave);
  if (!noise.grid_increments)
    throw std::invalid_argument("solver: noise realization has no grid part");
  if (noise.grid.n_cells() != grid.n_cells() ||
      noise.grid.time_steps != grid.time_steps ||
      noise.grid.dimension != grid.dimension)
    throw std::invalid_argument("solver: noise grid mismatch");
  QuadratureSpec quad;
  if (!dalang_condition(model, quad).holds)
    throw std::invalid_argument(
        "solver: the model fails the admissibility condition");
}

}  // namespace

Field solve_picard(const Kernel& kernel, const CovarianceModel& model,
                   const GridSpec& grid, const Coefficients& coeffs,
                   const InitialData& data, const NoiseRealization& noise,
                   const PicardOptions& opt) {
  require_mild_inputs(kernel, model, grid, noise);
  MildWorkspace ws(kernel, grid, data);

  Field field;
  field.grid = grid;
  field.provenance.scheme = "picard";
  field.provenance.model = model.describe();
  field.provenance.kernel = to_string(kernel.equation);
  field.provenance.sigma_tag = coeffs.sigma_tag;
  field.provenance.b_tag = coeffs.b_tag;
  field.provenance.seed = noise.seed;
  field.provenance.replicate = noise.replicate;
  field.provenance.picard.tolerance = opt.tolerance;

  std::vector<double> current = ws.i0;  // u^0 = I0
  std::vector<double> next(current.size());
  PicardLog& log = field.provenance.picard;

  for (int n = 0; n < opt.max_iterations; ++n) {
    mild_rhs(kernel, ws, noise, coeffs, current, /*euler_drift=*/false, -1,
             &next);
    double diff = 0.0, scale = 1.0;
    for (std::size_t idx = 0; idx < next.size(); ++idx) {
      diff = std::max(diff, std::abs(next[idx] - current[idx]));
      scale = std::max(scale, std::abs(next[idx]));
    }
    log.max_diffs.push_back(diff);
    log.iterations = n + 1;
    current.swap(next);
    if (diff <= opt.tolerance * scale) {
      log.converged = true;
      break;
    }
  }
  if (!log.converged) {
    std::ostringstream os;
    os << "Picard iteration did not converge after " << log.iterations
       << " iterations (last max difference " << log.max_diffs.back() << ")";
    throw PicardNonConvergence(os.str(), log);
  }
  field.values = std::move(current);
  field.check_finite();
  return field;
}

Field solve_euler(const Kernel& kernel, const CovarianceModel& model,
                  const GridSpec& grid, const Coefficients& coeffs,
                  const InitialData& data, const NoiseRealization& noise) {
  require_mild_inputs(kernel, model, grid, noise);
  MildWorkspace ws(kernel, grid, data);

  Field field;
  field.grid = grid;
  field.provenance.scheme = "euler";
  field.provenance.model = model.describe();
  field.provenance.kernel = to_string(kernel.equation);
  field.provenance.sigma_tag = coeffs.sigma_tag;
  field.provenance.b_tag = coeffs.b_tag;
  field.provenance.seed = noise.seed;
  field.provenance.replicate = noise.replicate;

  // one pass: time index i only ever reads indices < i
  std::vector<double> state = ws.i0;
  std::vector<double> rhs(state.size());
  for (int i = 1; i <= ws.nt; ++i) {
    mild_rhs(kernel, ws, noise, coeffs, state, /*euler_drift=*/true, i, &rhs);
    for (std::int64_t c = 0; c < ws.nc; ++c)
      state[static_cast<std::size_t>(i) * ws.nc +
            static_cast<std::size_t>(c)] =
          rhs[static_cast<std::size_t>(i) * ws.nc +
              static_cast<std::size_t>(c)];
  }
  field.values = std::move(state);
  field.check_finite();
  return field;
}

std::vector<double> weighted_l2_norm_sq(const Field& field, WeightKind kind,
                                        double k) {
  const GridSpec& grid = field.grid;
  if (kind == WeightKind::theta && !(k > grid.dimension))
    throw std::invalid_argument(
        "weighted norm: theta weight requires k > dimension");
  auto weight = [&](const Point& x) {
    double r = norm(x);
    if (kind == WeightKind::vartheta) return std::exp(-r);
    return std::min(1.0, std::pow(r, -k));
  };
  auto cells = grid.window_cells();
  std::vector<double> norms(static_cast<std::size_t>(grid.time_steps + 1),
                            0.0);
  double vol = grid.cell_volume();
  for (int i = 0; i <= grid.time_steps; ++i) {
    double acc = 0.0;
    for (std::int64_t c : cells) {
      double u = field.at(i, c);
      acc += u * u * weight(grid.center(c));
    }
    norms[static_cast<std::size_t>(i)] = acc * vol;
  }
  return norms;
}

}  // namespace spdelab
