#ifndef SPDELAB_COVARIANCE_HPP
#define SPDELAB_COVARIANCE_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "spdelab/grid.hpp"
#include "spdelab/quadrature.hpp"

namespace spdelab {

enum class CovKind { white, riesz, exponential, gaussian, tabulated };

std::string to_string(CovKind kind);

enum class TailMode { power_law, exponential, none };

// Controls the deterministic radial quadratures: truncation radius, panel
// budget, target tolerance and how the tail beyond the truncation is handled.
struct QuadratureSpec {
  double radial_truncation = 200.0;
  int panels = 256;
  double abs_tol = 1e-8;
  TailMode tail_mode = TailMode::power_law;

  void validate() const;
};

// Power-law or Gaussian-type envelope of the spectral density beyond
// `valid_from`: density(r) <= scale * r^{-power}   (power_law)
//               density(r) <= scale * exp(-decay * r^2)   (exponential)
struct TailEnvelope {
  TailMode mode = TailMode::none;
  double scale = 0.0;
  double power = 0.0;
  double decay = 0.0;
  double valid_from = 1.0;
};

struct TabulatedData {
  std::vector<double> spectral_radii;   // increasing, for d mu/d xi
  std::vector<double> spectral_values;
  std::vector<double> spatial_radii;    // increasing, for f
  std::vector<double> spatial_values;
};

// Spatial covariance f and spectral measure mu of the noise. Radial by
// construction; white noise is the distinguished case with f a Dirac mass
// and mu Lebesgue measure. Immutable after construction.
class CovarianceModel {
 public:
  static CovarianceModel white(int dimension);
  static CovarianceModel riesz(int dimension, double alpha);
  static CovarianceModel exponential(int dimension, double lambda);
  static CovarianceModel gaussian(int dimension, double ell);
  static CovarianceModel tabulated(int dimension, TabulatedData data);

  CovKind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  double parameter() const { return param_; }
  bool has_spatial_density() const { return kind_ != CovKind::white; }

  // d mu / d xi at radius |xi| (white: Lebesgue density 1).
  double spectral_density_radial(double xi_norm) const;
  double spectral_density(const Point& xi) const;

  // f at radius |x| > 0; throws for white (no density) and for the riesz
  // singularity at 0.
  double spatial_covariance_radial(double x_norm) const;
  double spatial_covariance(const Point& x) const;

  // Average of the spectral density over the centered cube of side h;
  // finite even when the density blows up at 0 (riesz).
  double spectral_density_cube_average(double h) const;

  TailEnvelope spectral_tail() const;
  TailMode default_tail_mode() const;

  // Smallest m <= 8 with \int (1+|xi|^2)^{-m} mu(dxi) finite, decided by
  // exponent/decay analysis. Every catalog entry must have one.
  int tempered_order() const;

  std::string describe() const;

 private:
  CovarianceModel(CovKind kind, int dimension, double param)
      : kind_(kind), dimension_(dimension), param_(param) {}

  CovKind kind_;
  int dimension_;
  double param_ = 0.0;
  double riesz_constant_ = 0.0;  // c_{d,alpha} in mu(dxi) = c |xi|^{a-d} dxi
  TabulatedData table_;
};

struct DalangReport {
  bool holds = false;
  double value = 0.0;          // +inf encoded as infinity() when diverging
  double tail_bound = 0.0;     // bound on the part beyond the truncation
  std::string diagnosis;
};

// Evaluates \int (1+|xi|^2)^{-1} mu(dxi). For power-law densities the
// holds/fails verdict comes from exponent comparison, never from truncation.
DalangReport dalang_condition(const CovarianceModel& model,
                              const QuadratureSpec& quad);

// A function sampled at the cell centers of a grid.
struct SampledFunction {
  GridSpec grid;
  std::vector<double> values;  // size grid.n_cells()

  static SampledFunction from(const GridSpec& grid,
                              const std::function<double(const Point&)>& f);
};

struct UInnerOptions {
  double spectral_radius = 40.0;  // xi-space truncation
  int radial_panels = 200;
  int angular_order = 32;
  bool cross_check = true;        // compare spectral vs convolution form
  double check_tol = 1e-3;
};

// <phi, psi>_U via the spectral form; when f has a density the double
// convolution form is evaluated too and a disagreement beyond the combined
// tolerance throws (it signals aliasing or truncation problems).
double u_inner(const CovarianceModel& model, const SampledFunction& phi,
               const SampledFunction& psi, const UInnerOptions& opt = {});

inline constexpr std::int64_t kCovarianceMatrixCellCap = 4096;

struct CovarianceMatrix {
  Eigen::MatrixXd entries;       // cell-averaged covariance, symmetric PSD
  double jitter = 0.0;           // diagonal shift applied before factorizing
  Eigen::MatrixXd cholesky;      // lower-triangular factor of entries+jitter*I
  bool is_diagonal = false;      // white-noise fast path
};

// Entry (j,k) = (dx)^{-2d} \int_{cell_j} \int_{cell_k} f(x-y) dx dy
// (white: (dx)^{-d} I). Throws beyond kCovarianceMatrixCellCap cells; a
// failed factorization reports the smallest eigenvalue.
CovarianceMatrix covariance_matrix(const CovarianceModel& model,
                                   const GridSpec& grid);

// Lag-space version: value for cells whose index offset is `lag` (the matrix
// is Toeplitz). Exposed for tests and the Toeplitz-aware quadratures.
double covariance_cell_entry(const CovarianceModel& model,
                             const GridSpec& grid,
                             const std::array<int, 3>& lag);

}  // namespace spdelab

#endif  // SPDELAB_COVARIANCE_HPP
