#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spdelab/kernels.hpp"

using namespace spdelab;

namespace {
constexpr double kPi = 3.14159265358979323846;

GridSpec make_grid(int d, double L, int nx, double T = 1.0) {
  GridSpec g;
  g.dimension = d;
  g.half_width = L;
  g.points_per_axis = nx;
  g.horizon = T;
  g.time_steps = 16;
  return g;
}
}  // namespace

TEST_CASE("green_fourier closed forms") {
  Kernel heat(Equation::heat, 1);
  CHECK(green_fourier(heat, 1.0, 0.0) == doctest::Approx(1.0));
  CHECK(green_fourier(heat, 0.5, 1.0) ==
        doctest::Approx(std::exp(-4.0 * kPi * kPi * 0.5)));

  Kernel wave(Equation::wave, 3);
  CHECK(green_fourier(wave, 0.25, 1.0) ==
        doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-14));
  CHECK(green_fourier(wave, 2.0, 0.0) == doctest::Approx(2.0));

  CHECK_THROWS_AS(Kernel(Equation::wave, 4), std::invalid_argument);
}

TEST_CASE("green_physical: wave d=1 box kernel") {
  Kernel wave(Equation::wave, 1);
  auto grid = make_grid(1, 4.0, 128);
  auto pk = green_physical(wave, 1.0, grid);
  const auto& gk = std::get<GridKernelValues>(pk);
  // interior cells well inside |x| < 1 carry the exact density 1/2
  CHECK(gk.values[static_cast<std::size_t>(grid.locate({0.0, 0, 0}))] ==
        doctest::Approx(0.5));
  CHECK(gk.values[static_cast<std::size_t>(grid.locate({2.5, 0, 0}))] == 0.0);
  CHECK(physical_mass(pk) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("green_physical: heat d=2 center value") {
  Kernel heat(Equation::heat, 2);
  auto grid = make_grid(2, 4.0, 64);
  double t = 0.5;
  auto pk = green_physical(heat, t, grid);
  const auto& gk = std::get<GridKernelValues>(pk);
  // cell average near the peak approaches (4 pi t)^{-1} = 1/(2 pi)
  double center = gk.values[static_cast<std::size_t>(
      grid.locate({0.01, 0.01, 0.0}))];
  CHECK(center == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(5e-3));
}

TEST_CASE("green_physical: wave d=3 sphere descriptor") {
  Kernel wave(Equation::wave, 3);
  auto grid = make_grid(3, 4.0, 16, 2.0);
  auto pk = green_physical(wave, 2.0, grid);
  const auto& sn = std::get<SphereNodes>(pk);
  CHECK(sn.radius == 2.0);
  CHECK(sn.density_weight == doctest::Approx(1.0 / (8.0 * kPi)));
  CHECK(physical_mass(pk) == doctest::Approx(2.0).epsilon(1e-13));
  for (const auto& n : sn.nodes)
    CHECK(norm(n) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("mass identity across kernels and times") {
  for (double t : {0.1, 0.5, 1.0, 2.0}) {
    for (int d : {1, 2}) {
      Kernel heat(Equation::heat, d);
      auto grid = make_grid(d, 6.0, d == 1 ? 128 : 48, 2.0);
      auto pk = green_physical(heat, t, grid);
      CHECK(physical_mass(pk) ==
            doctest::Approx(green_fourier(heat, t, 0.0)).epsilon(1e-6));
    }
    for (int d : {1, 2, 3}) {
      Kernel wave(Equation::wave, d);
      auto grid = make_grid(d, 4.0, d == 3 ? 16 : 64, 2.0);
      grid.horizon = 2.0;
      auto pk = green_physical(wave, t, grid);
      CHECK(physical_mass(pk) ==
            doctest::Approx(green_fourier(wave, t, 0.0)).epsilon(1e-6));
    }
  }
}

TEST_CASE("physical kernels are nonnegative with finite propagation speed") {
  Kernel wave1(Equation::wave, 1);
  Kernel wave2(Equation::wave, 2);
  for (double t : {0.3, 0.9}) {
    for (auto* k : {&wave1, &wave2}) {
      auto grid = make_grid(k->dimension, 3.0, 32, 1.0);
      CHECK(k->support_radius(t) == t);
      auto pk = green_physical(*k, t, grid);
      const auto& gk = std::get<GridKernelValues>(pk);
      for (std::int64_t c = 0; c < grid.n_cells(); ++c) {
        double v = gk.values[static_cast<std::size_t>(c)];
        CHECK(v >= 0.0);
        // min distance from the cell to the origin
        Point p = grid.center(c);
        double dist = 0.0;
        for (int i = 0; i < grid.dimension; ++i) {
          double lo = std::abs(p[i]) - 0.5 * grid.dx();
          if (lo > 0.0) dist += lo * lo;
        }
        dist = std::sqrt(dist);
        if (dist > t) CHECK(v == 0.0);
      }
    }
  }
}

TEST_CASE("j_function oracles") {
  QuadratureSpec quad;
  quad.radial_truncation = 400.0;
  quad.panels = 300;
  Kernel heat1(Equation::heat, 1);
  auto white1 = CovarianceModel::white(1);
  // oracle: \int exp(-8 pi^2 s xi^2) dxi = (8 pi s)^{-1/2}
  CHECK(j_function(heat1, white1, 1.0, quad) ==
        doctest::Approx(1.0 / std::sqrt(8.0 * kPi)).epsilon(1e-8));

  Kernel wave1(Equation::wave, 1);
  // oracle: \int sin^2(2 pi s xi) / (4 pi^2 xi^2) dxi = s / 2
  CHECK(j_function(wave1, white1, 1.0, quad) ==
        doctest::Approx(0.5).epsilon(1e-4));
  CHECK(j_function(wave1, white1, 0.35, quad) ==
        doctest::Approx(0.175).epsilon(1e-4));

  // heat, white, d >= 2: J(s) blows up as s -> 0+ (exponent analysis)
  Kernel heat2(Equation::heat, 2);
  auto white2 = CovarianceModel::white(2);
  double j01 = j_function(heat2, white2, 0.1, quad);
  double j001 = j_function(heat2, white2, 0.01, quad);
  CHECK(j001 > 5.0 * j01);

  // wave, white, d = 2: the mu-weighted tail is not integrable
  Kernel wave2(Equation::wave, 2);
  CHECK_THROWS_AS(j_function(wave2, white2, 1.0, quad), std::runtime_error);
}

TEST_CASE("hypothesis A oracles and equivalence with the Dalang condition") {
  QuadratureSpec quad;
  quad.radial_truncation = 400.0;
  quad.panels = 200;

  Kernel wave1(Equation::wave, 1);
  auto white1 = CovarianceModel::white(1);
  auto repw = hypothesis_a_check(wave1, white1, 1.0, quad);
  CHECK(repw.holds);
  // oracle: \int_0^1 s/2 ds = 1/4
  CHECK(repw.integral == doctest::Approx(0.25).epsilon(5e-4));

  Kernel heat1(Equation::heat, 1);
  auto reph = hypothesis_a_check(heat1, white1, 1.0, quad);
  CHECK(reph.holds);
  // oracle: \int_0^1 (8 pi s)^{-1/2} ds = 2 (8 pi)^{-1/2}
  CHECK(reph.integral ==
        doctest::Approx(2.0 / std::sqrt(8.0 * kPi)).epsilon(1e-6));

  auto riesz25 = CovarianceModel::riesz(3, 2.5);
  Kernel wave3(Equation::wave, 3);
  CHECK_FALSE(hypothesis_a_check(wave3, riesz25, 1.0, quad).holds);

  // verdict equivalence across the catalog x kernel matrix
  std::vector<CovarianceModel> models;
  for (int d : {1, 2, 3}) {
    models.push_back(CovarianceModel::white(d));
    models.push_back(CovarianceModel::exponential(d, 1.0));
    models.push_back(CovarianceModel::gaussian(d, 0.8));
    if (d >= 2) models.push_back(CovarianceModel::riesz(d, 1.5));
  }
  for (const auto& m : models) {
    bool dal = dalang_condition(m, quad).holds;
    Kernel heat(Equation::heat, m.dimension());
    CHECK(hypothesis_a_check(heat, m, 0.5, quad).holds == dal);
    if (m.dimension() <= 3) {
      Kernel wave(Equation::wave, m.dimension());
      CHECK(hypothesis_a_check(wave, m, 0.5, quad).holds == dal);
    }
  }
}

TEST_CASE("initial term: wave identities") {
  InitialData vel1 = InitialData::constant(0.0, 1.0);
  Kernel wave1(Equation::wave, 1);
  Kernel wave2(Equation::wave, 2);
  Kernel wave3(Equation::wave, 3);
  for (double t : {0.25, 1.0, 1.7}) {
    CHECK(initial_term(wave1, vel1, t, {0.3, 0, 0}) ==
          doctest::Approx(t).epsilon(1e-12));
    CHECK(initial_term(wave2, vel1, t, {0.1, -0.2, 0}) ==
          doctest::Approx(t).epsilon(1e-10));
    CHECK(initial_term(wave3, vel1, t, {0.0, 0.5, 0.1}) ==
          doctest::Approx(t).epsilon(1e-10));
  }
}

TEST_CASE("initial term: heat preserves constants to 1e-10") {
  for (int d : {1, 2, 3}) {
    Kernel heat(Equation::heat, d);
    InitialData c = InitialData::constant(2.75);
    CHECK(initial_term(heat, c, 0.8, {0.2, 0.1, 0.0}) ==
          doctest::Approx(2.75).epsilon(1e-12));
  }
}

TEST_CASE("initial term: d'Alembert closed form") {
  Kernel wave1(Equation::wave, 1);
  InitialData d;
  d.u0 = [](const Point& x) { return std::cos(x[0]); };
  d.v0 = [](const Point& x) { return std::sin(x[0]); };
  d.grad_u0 = [](const Point& x) { return Point{-std::sin(x[0]), 0, 0}; };
  d.flags = {true, true, true, true, true, true};
  double t = 0.6, x = 0.4;
  // oracle: (cos(x+t)+cos(x-t))/2 + (cos(x-t)-cos(x+t))/2
  double expect = 0.5 * (std::cos(x + t) + std::cos(x - t)) +
                  0.5 * (std::cos(x - t) - std::cos(x + t));
  CHECK(initial_term(wave1, d, t, {x, 0, 0}) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("initial term: Kirchhoff quadratic oracle fixes the gradient sign") {
  Kernel wave3(Equation::wave, 3);
  InitialData d;
  d.u0 = [](const Point& x) { return x[0] * x[0]; };
  d.v0 = [](const Point&) { return 0.0; };
  d.grad_u0 = [](const Point& x) { return Point{2.0 * x[0], 0.0, 0.0}; };
  d.flags = {true, true, true, true, true, true};
  // smooth solution of the wave equation with u(0) = x1^2, u_t(0) = 0 is
  // x1^2 + t^2, so I0(t, x) = x1^2 + t^2
  double t = 0.7, x1 = 0.3;
  CHECK(initial_term(wave3, d, t, {x1, 0, 0}) ==
        doctest::Approx(x1 * x1 + t * t).epsilon(1e-10));
}

TEST_CASE("initial term: Poisson d=2 bump tends to u0 as t -> 0") {
  Kernel wave2(Equation::wave, 2);
  InitialData d = InitialData::gaussian_bump(1.0, 1.0);
  Point x = {0.2, -0.1, 0.0};
  // smooth wave solutions satisfy u(t) = u0 + (t^2/2) Lap u0 + O(t^4)
  double u0x = d.u0(x);
  double prev = 1e9;
  for (double t : {0.5, 0.25, 0.125}) {
    double err = std::abs(initial_term(wave2, d, t, x) - u0x);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 5e-2);
}

TEST_CASE("initial term: regularity flags are enforced") {
  InitialData rough = InitialData::indicator(1.0);
  Kernel wave3(Equation::wave, 3);
  CHECK_THROWS_AS(initial_term(wave3, rough, 0.5, {0, 0, 0}),
                  std::invalid_argument);
  Kernel heat(Equation::heat, 1);
  CHECK(initial_term(heat, rough, 0.01, {0.0, 0, 0}) ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("I0 obeys the uniform bound from the data sup norms") {
  // heat: |I0| <= ||u0||_inf ; wave d=1: <= ||u0|| + t ||v0||
  // wave d=3: <= ||u0|| + t ||v0|| + t ||grad u0||
  Kernel heat(Equation::heat, 1);
  Kernel wave1(Equation::wave, 1);
  Kernel wave3(Equation::wave, 3);
  InitialData d = InitialData::gaussian_bump(0.7, 1.3, 0.4);
  double T = 1.5;
  for (double t : {0.3, 0.9, 1.5}) {
    for (double xv : {-1.0, 0.0, 0.8}) {
      Point x = {xv, 0.2, -0.1};
      CHECK(std::abs(initial_term(heat, d, t, x)) <= 0.7 + 1e-12);
      CHECK(std::abs(initial_term(wave1, d, t, x)) <= 0.7 + t * 0.4 + 1e-12);
      double grad_sup = 0.7 * std::sqrt(2.0 / std::exp(1.0)) / 1.3;
      CHECK(std::abs(initial_term(wave3, d, t, x)) <=
            0.7 + t * 0.4 + t * grad_sup + 1e-10);
    }
    (void)T;
  }
}

TEST_CASE("kernel lag table conserves mass") {
  auto grid1 = make_grid(1, 4.0, 64, 2.0);
  Kernel heat1(Equation::heat, 1);
  auto table = kernel_lag_table(heat1, 0.7, grid1);
  double mass = 0.0;
  for (double v : table) mass += v;
  CHECK(mass * grid1.cell_volume() == doctest::Approx(1.0).epsilon(1e-12));

  Kernel wave1(Equation::wave, 1);
  table = kernel_lag_table(wave1, 1.3, grid1);
  mass = 0.0;
  for (double v : table) mass += v;
  CHECK(mass * grid1.cell_volume() == doctest::Approx(1.3).epsilon(1e-12));

  auto grid3 = make_grid(3, 2.0, 12, 1.0);
  Kernel wave3(Equation::wave, 3);
  table = kernel_lag_table(wave3, 0.8, grid3);
  mass = 0.0;
  for (double v : table) mass += v;
  CHECK(mass * grid3.cell_volume() == doctest::Approx(0.8).epsilon(1e-12));
}
