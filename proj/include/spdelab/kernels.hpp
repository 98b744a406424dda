#ifndef SPDELAB_KERNELS_HPP
#define SPDELAB_KERNELS_HPP

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spdelab/covariance.hpp"
#include "spdelab/grid.hpp"

namespace spdelab {

enum class Equation { heat, wave };

std::string to_string(Equation eq);

// Fundamental solution of the heat (d >= 1) or wave (d in {1,2,3}) equation.
// Carries the exact Fourier transform; physical-space representations are
// produced on demand for a grid.
struct Kernel {
  Equation equation;
  int dimension;

  Kernel(Equation eq, int d);

  // F Gamma(t)(xi) as a function of |xi| (radial).
  double fourier(double t, double xi_norm) const;

  // Wave kernels are supported in the ball of radius t; the heat kernel's
  // effective radius keeps the truncated mass error below 1e-12.
  double support_radius(double t) const;
};

inline double green_fourier(const Kernel& k, double t, double xi_norm) {
  return k.fourier(t, xi_norm);
}

// Cell-averaged kernel values on the periodized grid (heat all d, wave
// d = 1, 2). Values are densities; sum(values) * cell_volume = mass.
struct GridKernelValues {
  GridSpec grid;
  double t = 0.0;
  std::vector<double> values;
};

// Surface-measure descriptor for the wave kernel in d = 3: the uniform
// measure on the sphere of radius t scaled by 1/(4 pi t), discretized by
// Gauss-Legendre colatitude x uniform longitude nodes whose masses sum to
// the total mass t exactly.
struct SphereNodes {
  double radius = 0.0;
  double density_weight = 0.0;  // 1 / (4 pi t)
  std::vector<Point> nodes;
  std::vector<double> masses;
};

using PhysicalKernel = std::variant<GridKernelValues, SphereNodes>;

struct KernelGridOptions {
  int disk_radial = 192;    // wave d=2 rim-exact substitution nodes
  int disk_angular = 256;
  int sphere_colatitude = 32;
  int sphere_longitude = 64;
};

PhysicalKernel green_physical(const Kernel& k, double t, const GridSpec& grid,
                              const KernelGridOptions& opt = {});

double physical_mass(const PhysicalKernel& pk);

// Cell-averaged Gamma(t, .) over boxes centered at the lattice displacements
// m * dx (periodic); entry index uses the grid's flattened indexing of m.
// This is the translation table the Riemann-Ito sums consume.
std::vector<double> kernel_lag_table(const Kernel& k, double t,
                                     const GridSpec& grid,
                                     const KernelGridOptions& opt = {});

// J(s) = \int mu(dxi) |F Gamma(s)(xi)|^2, radial quadrature with an analytic
// tail estimate; throws with a divergence diagnosis when the tail is
// unbounded.
double j_function(const Kernel& k, const CovarianceModel& model, double s,
                  const QuadratureSpec& quad);

struct AdmissibilityReport {
  bool holds = false;
  double integral = 0.0;  // \int_0^T J(s) ds when finite
  std::string diagnosis;
};

// Checks \int_0^T dt \int mu(dxi) |F Gamma(t)(xi)|^2 < infinity. For the heat
// and wave kernels this holds exactly when the Dalang condition does, and the
// verdict is taken from there; the integral is evaluated when finite.
AdmissibilityReport hypothesis_a_check(const Kernel& k,
                                       const CovarianceModel& model, double T,
                                       const QuadratureSpec& quad);

// Initial data with the regularity bookkeeping required per equation and
// dimension. Catalog constructors set the flags; custom data declares them.
struct InitialData {
  std::function<double(const Point&)> u0;
  std::function<double(const Point&)> v0;        // wave only
  std::function<Point(const Point&)> grad_u0;    // wave d = 2, 3

  struct Flags {
    bool u0_bounded = false;
    bool u0_continuous = false;
    bool u0_c1 = false;           // grad_u0 present and continuous
    bool grad_u0_bounded = false;
    bool v0_bounded = false;
    bool v0_continuous = false;
  } flags;

  static InitialData zero();
  static InitialData constant(double u_value, double v_value = 0.0);
  // amp * exp(-|x|^2 / width^2), with analytic gradient
  static InitialData gaussian_bump(double amp, double width,
                                   double v_value = 0.0);
  // u0 = indicator of the centered box of given half width (discontinuous)
  static InitialData indicator(double half_width, double v_value = 0.0);
};

struct InitialTermOptions {
  int heat_panels = 12;     // per axis, on the substituted [-6, 6] window
  int heat_order = 16;
  int line_panels = 32;     // d'Alembert segment quadrature
  int disk_radial = 128;    // Poisson formula nodes
  int disk_angular = 128;
  int sphere_colatitude = 32;
  int sphere_longitude = 64;
};

// I_0(t, x): heat convolution, d'Alembert (wave d=1), Poisson disk formula
// (wave d=2), Kirchhoff spherical mean (wave d=3). I_0(0, x) = u0(x).
double initial_term(const Kernel& k, const InitialData& data, double t,
                    const Point& x, const InitialTermOptions& opt = {});

}  // namespace spdelab

#endif  // SPDELAB_KERNELS_HPP
