#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "spdelab/covariance.hpp"
#include "spdelab/quadrature.hpp"

using namespace spdelab;

namespace {
constexpr double kPi = 3.14159265358979323846;

// Independent oracle: Fourier transform of a radial f in d=1 by brute
// quadrature against exp(-2 pi i xi x) over [-R, R].
double fourier_of_f_1d(const CovarianceModel& m, double xi, double R,
                       int panels = 400) {
  return integrate(
      [&](double x) {
        double r = std::abs(x);
        double f = r == 0.0 ? 0.0 : m.spatial_covariance_radial(r);
        return f * std::cos(2.0 * kPi * xi * x);
      },
      -R, R, panels, 16);
}
}  // namespace

TEST_CASE("spectral density catalog values") {
  // white: Lebesgue density
  auto w = CovarianceModel::white(1);
  CHECK(w.spectral_density_radial(0.0) == 1.0);
  CHECK(w.spectral_density_radial(7.3) == 1.0);

  // gaussian(ell=1), d=1, xi=0 -> integral of exp(-x^2) = sqrt(pi)
  auto g = CovarianceModel::gaussian(1, 1.0);
  CHECK(g.spectral_density_radial(0.0) ==
        doctest::Approx(std::sqrt(kPi)).epsilon(1e-12));

  // exponential(lambda=1), d=1, xi=0 -> integral of exp(-|x|) = 2
  auto e = CovarianceModel::exponential(1, 1.0);
  CHECK(e.spectral_density_radial(0.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("spectral density matches brute Fourier quadrature of f (d=1)") {
  const double freqs[] = {0.1, 0.3, 0.5, 1.0, 2.0};
  auto g = CovarianceModel::gaussian(1, 1.0);
  auto e = CovarianceModel::exponential(1, 1.0);
  for (double xi : freqs) {
    CHECK(g.spectral_density_radial(xi) ==
          doctest::Approx(fourier_of_f_1d(g, xi, 12.0)).epsilon(1e-8));
    CHECK(e.spectral_density_radial(xi) ==
          doctest::Approx(fourier_of_f_1d(e, xi, 60.0)).epsilon(1e-5));
  }
}

TEST_CASE("riesz constant satisfies Parseval against self-dual Gaussians") {
  // exp(-pi |x|^2 / w) has transform w^{d/2} exp(-pi w |xi|^2); Parseval pins
  // the density constant: \int f(x) e^{-pi x^2/w} dx = \int m(xi) w^{d/2}
  // e^{-pi w xi^2} dxi. Five widths probe five spectral scales. Endpoint
  // singularities r^{-a} and r^{a-d} are removed by power substitutions.
  auto both_sides = [](const CovarianceModel& m, double w) {
    int d = m.dimension();
    double a = m.parameter();
    double s = sphere_surface(d);
    // spatial side: p = d - a > 0
    double p = d - a;
    double lhs =
        s * integrate(
                [&](double u) {
                  double r = std::pow(u, 1.0 / p);
                  return std::pow(r, -a) * std::exp(-kPi * r * r / w) *
                         std::pow(r, d - 1.0) * std::pow(u, 1.0 / p - 1.0) / p;
                },
                0.0, std::pow(8.0 * std::sqrt(w), p), 400, 16);
    // spectral side: q = a > 0
    double q = a;
    double rhs =
        s * integrate(
                [&](double u) {
                  double r = std::pow(u, 1.0 / q);
                  return m.spectral_density_radial(r) * std::pow(w, 0.5 * d) *
                         std::exp(-kPi * w * r * r) * std::pow(r, d - 1.0) *
                         std::pow(u, 1.0 / q - 1.0) / q;
                },
                0.0, std::pow(8.0 / std::sqrt(w), q), 400, 16);
    return std::pair<double, double>(lhs, rhs);
  };
  for (double w : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    auto [l1, r1] = both_sides(CovarianceModel::riesz(1, 0.6), w);
    CHECK(l1 == doctest::Approx(r1).epsilon(1e-6));
    auto [l2, r2] = both_sides(CovarianceModel::riesz(2, 1.2), w);
    CHECK(l2 == doctest::Approx(r2).epsilon(1e-6));
    auto [l3, r3] = both_sides(CovarianceModel::riesz(3, 1.5), w);
    CHECK(l3 == doctest::Approx(r3).epsilon(1e-6));
  }
}

TEST_CASE("spatial covariance values and errors") {
  auto e = CovarianceModel::exponential(1, 1.0);
  CHECK(e.spatial_covariance_radial(0.0) == doctest::Approx(1.0));

  auto r2 = CovarianceModel::riesz(2, 1.0);
  CHECK(r2.spatial_covariance({2.0, 0.0, 0.0}) == doctest::Approx(0.5));

  auto g = CovarianceModel::gaussian(1, 1.0);
  CHECK(g.spatial_covariance({1.0, 0.0, 0.0}) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  CHECK_THROWS_AS((void)r2.spatial_covariance({0.0, 0.0, 0.0}),
                  std::domain_error);
  auto w = CovarianceModel::white(1);
  CHECK_THROWS_AS((void)w.spatial_covariance_radial(1.0), std::domain_error);
}

TEST_CASE("model invariants") {
  CHECK_THROWS_AS(CovarianceModel::riesz(2, 2.5), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceModel::riesz(1, 0.0), std::invalid_argument);

  // evenness and nonnegativity on a radius sweep
  for (auto m : {CovarianceModel::exponential(2, 0.7),
                 CovarianceModel::gaussian(3, 1.3),
                 CovarianceModel::riesz(3, 1.5)}) {
    for (double r : {0.05, 0.3, 1.0, 4.0, 25.0}) {
      CHECK(m.spectral_density_radial(r) >= 0.0);
      CHECK(m.spectral_density_radial(-r) ==
            doctest::Approx(m.spectral_density_radial(r)));
      CHECK(m.spatial_covariance_radial(r) ==
            doctest::Approx(m.spatial_covariance_radial(-r)));
    }
  }

  // a tempered order m <= 3 exists for the whole catalog in d <= 3
  for (int d : {1, 2, 3}) {
    CHECK(CovarianceModel::white(d).tempered_order() <= 3);
    CHECK(CovarianceModel::exponential(d, 1.0).tempered_order() <= 3);
    CHECK(CovarianceModel::gaussian(d, 1.0).tempered_order() <= 3);
    if (d >= 2) CHECK(CovarianceModel::riesz(d, 1.5).tempered_order() <= 3);
  }
}

TEST_CASE("dalang condition: white d=1 value is pi") {
  QuadratureSpec quad;
  quad.radial_truncation = 2000.0;
  quad.panels = 600;
  auto rep = dalang_condition(CovarianceModel::white(1), quad);
  CHECK(rep.holds);
  // oracle: arctan antiderivative, \int dxi/(1+xi^2) = pi
  CHECK(std::abs(rep.value + rep.tail_bound - kPi) < 2e-3);
  CHECK(rep.value < kPi);
}

TEST_CASE("dalang condition: exponent matrix") {
  QuadratureSpec quad;
  // white: holds iff d = 1
  CHECK(dalang_condition(CovarianceModel::white(1), quad).holds);
  CHECK_FALSE(dalang_condition(CovarianceModel::white(2), quad).holds);
  CHECK_FALSE(dalang_condition(CovarianceModel::white(3), quad).holds);
  // riesz: holds iff alpha < 2
  CHECK(dalang_condition(CovarianceModel::riesz(3, 1.5), quad).holds);
  CHECK_FALSE(dalang_condition(CovarianceModel::riesz(3, 2.5), quad).holds);
  CHECK(dalang_condition(CovarianceModel::riesz(2, 0.5), quad).holds);
  // exponential / gaussian: hold in every dimension
  for (int d : {1, 2, 3}) {
    CHECK(dalang_condition(CovarianceModel::exponential(d, 1.0), quad).holds);
    CHECK(dalang_condition(CovarianceModel::gaussian(d, 1.0), quad).holds);
  }
}

TEST_CASE("dalang verdict is independent of the truncation radius") {
  for (double R : {10.0, 100.0, 1000.0}) {
    QuadratureSpec quad;
    quad.radial_truncation = R;
    CHECK(dalang_condition(CovarianceModel::riesz(3, 1.5), quad).holds);
    CHECK_FALSE(dalang_condition(CovarianceModel::riesz(3, 2.5), quad).holds);
  }
}

TEST_CASE("dalang inconclusive without a tail bound") {
  // tabulated model with no envelope and a non-converged integrand
  TabulatedData data;
  data.spectral_radii = {0.0, 1.0, 2.0};
  data.spectral_values = {1.0, 1.0, 1.0};
  auto m = CovarianceModel::tabulated(1, data);
  QuadratureSpec quad;
  quad.radial_truncation = 2.0;
  quad.tail_mode = TailMode::none;
  CHECK_THROWS_AS(dalang_condition(m, quad), std::runtime_error);
}

TEST_CASE("u_inner: white reduces to L2, zero function gives zero") {
  GridSpec grid;
  grid.dimension = 1;
  grid.half_width = 8.0;
  grid.points_per_axis = 512;
  auto bump = SampledFunction::from(
      grid, [](const Point& x) { return std::exp(-x[0] * x[0]); });
  auto zero = SampledFunction::from(grid, [](const Point&) { return 0.0; });

  auto white = CovarianceModel::white(1);
  // ||exp(-x^2)||_{L2}^2 = sqrt(pi/2)
  CHECK(u_inner(white, bump, bump) ==
        doctest::Approx(std::sqrt(kPi / 2.0)).epsilon(1e-6));
  CHECK(u_inner(white, zero, bump) == doctest::Approx(0.0));
}

TEST_CASE("u_inner: exponential model against brute double quadrature") {
  GridSpec grid;
  grid.dimension = 1;
  grid.half_width = 8.0;
  grid.points_per_axis = 256;
  auto bump = SampledFunction::from(
      grid, [](const Point& x) { return std::exp(-x[0] * x[0]); });
  auto model = CovarianceModel::exponential(1, 1.0);

  // independent 2-D brute-force oracle for
  // \int\int exp(-x^2) exp(-|x-y|) exp(-y^2) dx dy, inner integral split at
  // the |x-y| kink so the panels never straddle it
  double oracle = integrate(
      [&](double x) {
        auto inner = [&](double y) {
          return std::exp(-std::abs(x - y)) * std::exp(-y * y);
        };
        return std::exp(-x * x) *
               (integrate(inner, -8.0, x, 32, 16) +
                integrate(inner, x, 8.0, 32, 16));
      },
      -8.0, 8.0, 64, 16);

  UInnerOptions opt;
  opt.spectral_radius = 60.0;
  opt.radial_panels = 400;
  double val = u_inner(model, bump, bump, opt);
  // u_inner evaluates the piecewise-constant extension; O(dx^2) bias expected
  CHECK(val == doctest::Approx(oracle).epsilon(1e-3));
}

TEST_CASE("u_inner is positive semi-definite on random samples") {
  GridSpec grid;
  grid.dimension = 1;
  grid.half_width = 6.0;
  grid.points_per_axis = 96;
  std::mt19937 rng(42);
  std::normal_distribution<double> normal;
  auto model = CovarianceModel::gaussian(1, 1.0);
  UInnerOptions opt;
  opt.spectral_radius = 30.0;
  opt.radial_panels = 200;
  for (int rep = 0; rep < 4; ++rep) {
    SampledFunction phi;
    phi.grid = grid;
    phi.values.resize(static_cast<std::size_t>(grid.n_cells()));
    for (auto& v : phi.values) v = normal(rng);
    // random samples are rough; the envelope localizes them
    for (std::int64_t c = 0; c < grid.n_cells(); ++c) {
      double x = grid.center(c)[0];
      phi.values[static_cast<std::size_t>(c)] *= std::exp(-0.5 * x * x);
    }
    opt.cross_check = false;  // rough functions alias; PSD is the claim here
    CHECK(u_inner(model, phi, phi, opt) >= -1e-9);
  }
}

TEST_CASE("covariance_matrix: white is scaled identity") {
  GridSpec grid;
  grid.dimension = 1;
  grid.half_width = 1.0;
  grid.points_per_axis = 8;
  auto cm = covariance_matrix(CovarianceModel::white(1), grid);
  CHECK(cm.is_diagonal);
  CHECK(cm.entries(3, 3) == doctest::Approx(1.0 / grid.dx()));
  CHECK(cm.entries(3, 4) == 0.0);
}

TEST_CASE("covariance_matrix: exponential off-diagonal approaches f") {
  // two cells a fixed distance s apart; as dx -> 0 the cell-averaged entry
  // approaches f(s) = exp(-s)
  auto model = CovarianceModel::exponential(1, 1.0);
  double s = 1.0;
  double prev_err = 1e9;
  for (int nx : {16, 32, 64}) {
    GridSpec grid;
    grid.dimension = 1;
    grid.half_width = 2.0;
    grid.points_per_axis = nx;
    int lag = static_cast<int>(std::round(s / grid.dx()));
    double entry = covariance_cell_entry(model, grid, {lag, 0, 0});
    double err = std::abs(entry - std::exp(-s));
    CHECK(err < prev_err + 1e-12);
    prev_err = err;
  }
  CHECK(prev_err < 2e-4);
}

TEST_CASE("covariance_matrix: riesz adjacent cells, exact oracle") {
  // d=1, f(x) = |x|^{-1/2}, unit cells [0,1] and [1,2]:
  // I = \int_0^1\int_1^2 |x-y|^{-a} dy dx with a = 1/2, via the primitive
  // Phi(u) = u^{3/2}/((1/2)(3/2)) evaluated independently here.
  double a = 0.5;
  auto model = CovarianceModel::riesz(1, a);
  GridSpec grid;
  grid.dimension = 1;
  grid.half_width = 2.0;
  grid.points_per_axis = 4;  // dx = 1
  auto phi = [&](double u) {
    return std::pow(std::abs(u), 2.0 - a) / ((1.0 - a) * (2.0 - a));
  };
  double oracle_adjacent = phi(2.0) - 2.0 * phi(1.0) + phi(0.0);
  double oracle_diag = phi(1.0) - 2.0 * phi(0.0) + phi(1.0);
  CHECK(covariance_cell_entry(model, grid, {1, 0, 0}) ==
        doctest::Approx(oracle_adjacent).epsilon(1e-12));
  CHECK(covariance_cell_entry(model, grid, {0, 0, 0}) ==
        doctest::Approx(oracle_diag).epsilon(1e-12));
  CHECK(std::isfinite(covariance_cell_entry(model, grid, {0, 0, 0})));
}

TEST_CASE("covariance_matrix: riesz d=2 diagonal is finite and consistent") {
  auto model = CovarianceModel::riesz(2, 1.0);
  GridSpec grid;
  grid.dimension = 2;
  grid.half_width = 1.0;
  grid.points_per_axis = 4;
  double h = grid.dx();
  double diag = covariance_cell_entry(model, grid, {0, 0, 0});
  CHECK(std::isfinite(diag));
  // brute oracle: correlation form with polar quadrature, crude but
  // independent: \int (h-|wx|)(h-|wy|) |w|^{-1} dw / h^4
  double acc = 0.0;
  int nt = 2000, nr = 400;
  for (int i = 0; i < nt; ++i) {
    double th = (i + 0.5) * (2.0 * kPi / nt);
    double c = std::abs(std::cos(th)), sn = std::abs(std::sin(th));
    double rmax = h / std::max(c, sn);
    for (int j = 0; j < nr; ++j) {
      double r = (j + 0.5) * (rmax / nr);
      acc += (h - r * c) * (h - r * sn) * (rmax / nr) * (2.0 * kPi / nt);
    }
  }
  acc /= h * h * h * h;
  CHECK(diag == doctest::Approx(acc).epsilon(1e-3));
}

TEST_CASE("covariance_matrix: symmetry, PSD, factorization, cap") {
  auto model = CovarianceModel::exponential(1, 1.0);
  GridSpec grid;
  grid.dimension = 1;
  grid.half_width = 2.0;
  grid.points_per_axis = 32;
  auto cm = covariance_matrix(model, grid);
  CHECK((cm.entries - cm.entries.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cm.entries,
                                                    Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() >= -cm.jitter - 1e-12);
  // L L^T reproduces the (jittered) matrix
  Eigen::MatrixXd back = cm.cholesky * cm.cholesky.transpose();
  CHECK((back - cm.entries).cwiseAbs().maxCoeff() < 1e-8);

  GridSpec big = grid;
  big.points_per_axis = 8192;
  CHECK_THROWS_AS(covariance_matrix(model, big), std::invalid_argument);
}

TEST_CASE("tabulated model: interpolation and forbidden extrapolation") {
  TabulatedData data;
  data.spectral_radii = {0.0, 1.0, 2.0};
  data.spectral_values = {2.0, 1.0, 0.0};
  data.spatial_radii = {0.0, 1.0};
  data.spatial_values = {1.0, 0.5};
  auto m = CovarianceModel::tabulated(1, data);
  CHECK(m.spectral_density_radial(0.5) == doctest::Approx(1.5));
  CHECK(m.spatial_covariance_radial(0.5) == doctest::Approx(0.75));
  CHECK_THROWS_AS(m.spectral_density_radial(3.0), std::out_of_range);
  CHECK_THROWS_AS(m.spatial_covariance_radial(2.0), std::out_of_range);
}
