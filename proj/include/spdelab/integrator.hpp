#ifndef SPDELAB_INTEGRATOR_HPP
#define SPDELAB_INTEGRATOR_HPP

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "spdelab/kernels.hpp"
#include "spdelab/noise.hpp"

namespace spdelab {

// Read-only access to the state known strictly before the current slab.
// Construction fixes the last visible time index; later slices throw.
class PastView {
 public:
  PastView() = default;
  PastView(const std::vector<double>* slices, std::int64_t n_cells, int limit)
      : slices_(slices), n_cells_(n_cells), limit_(limit) {}

  bool empty() const { return slices_ == nullptr; }
  int limit() const { return limit_; }
  double at(int time_index, std::int64_t cell) const {
    if (slices_ == nullptr)
      throw std::logic_error("PastView: no state attached");
    if (time_index > limit_)
      throw std::logic_error(
          "PastView: integrand read state at or after the current slab "
          "(predictability violation)");
    return (*slices_)[static_cast<std::size_t>(time_index) *
                          static_cast<std::size_t>(n_cells_) +
                      static_cast<std::size_t>(cell)];
  }

 private:
  const std::vector<double>* slices_ = nullptr;
  std::int64_t n_cells_ = 0;
  int limit_ = -1;
};

// Integrand evaluated at slab left endpoints (Ito convention). The PastView
// argument carries the restriction of the solution state to times before the
// slab's increment; deterministic integrands ignore it.
struct IntegrandProcess {
  std::function<double(double s, const Point& y, const PastView& past)> eval;
  std::string tag;

  static IntegrandProcess deterministic(
      std::function<double(double, const Point&)> f, std::string tag = {});
  static IntegrandProcess zero();
};

// Cell-averaged kernel translation tables, cached per time lag.
class KernelLagCache {
 public:
  KernelLagCache(const Kernel& kernel, const GridSpec& grid,
                 KernelGridOptions opt = {});
  const std::vector<double>& at(double tau) const;
  const Kernel& kernel() const { return kernel_; }

 private:
  Kernel kernel_;
  GridSpec grid_;
  KernelGridOptions opt_;
  mutable std::map<long long, std::vector<double>> cache_;
};

// Periodic per-axis offset of two cells, flattened with grid indexing.
std::int64_t cell_offset_index(const GridSpec& grid, std::int64_t cell_x,
                               std::int64_t cell_y);

// The time lag Gamma is evaluated at for slab k when the target time is
// t = i dt: left endpoints, except the slab adjacent to t for the heat
// kernel, whose integrable small-time peak is taken at the midpoint.
double kernel_time_lag(Equation eq, int target_index, int slab, double dt);

// Riemann-Ito sum of the integrand against the grid increments:
//   sum_slabs sum_cells g(s_k, y_c) * [w_k(c) * cell_volume],
// with g replaced by Gamma(t - s, x - y) g(s, y) when a kernel is given.
// x must be a cell center of the noise grid; t a grid time.
double walsh_integral(const NoiseRealization& noise,
                      const IntegrandProcess& g, double t, const Point& x,
                      const KernelLagCache* kernel = nullptr,
                      const PastView& past = {});

struct SeriesOptions {
  int refine = 4;  // quadrature points per cell per axis for coefficients
};

// Truncated series form: sum_{j<=J} sum_slabs <g(s_k), e_j>_U dbeta_j[k].
// Without a kernel the coefficients are quadratures of g against the basis;
// with a kernel the integrand is Gamma(t-s, x-.) and the coefficients are
// closed forms in F Gamma.
double series_integral(const NoiseRealization& noise,
                       const IntegrandProcess& g, double t, const Point& x,
                       const KernelLagCache* kernel = nullptr,
                       const SeriesOptions& opt = {},
                       const PastView& past = {});

// Pathwise drift term \int_0^t ds \int Gamma(s, dy) b(t - s, x - y):
// midpoint rule in s, kernel mass tables in space, the integrand's time
// argument interpolated by the caller-supplied evaluator.
double drift_integral(const KernelLagCache& kernel,
                      const IntegrandProcess& b_of_u, double t, const Point& x,
                      const GridSpec& grid, const PastView& past = {});

struct IsometryReport {
  double mc_second_moment = 0.0;
  double quadrature_norm = 0.0;
  double gap = 0.0;
  double standard_error = 0.0;
  int replicates = 0;
};

// Monte Carlo second moment of the Walsh integral of a deterministic g over
// fresh noise realizations versus the deterministic norm
// sum_k dt ||g_k||_U^2 of the discretized integrand, the latter through the
// spectral quadrature route (white: the L^2 identity).
IsometryReport isometry_gap(const IntegrandProcess& g,
                            const CovarianceModel& model,
                            const KernelLagCache* kernel, double t,
                            const Point& x, const GridSpec& grid,
                            int replicates, std::uint64_t seed);

}  // namespace spdelab

#endif  // SPDELAB_INTEGRATOR_HPP
