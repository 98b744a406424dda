#ifndef SPDELAB_QUADRATURE_HPP
#define SPDELAB_QUADRATURE_HPP

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace spdelab {

// Gauss-Legendre nodes/weights on [-1, 1], computed by Newton iteration on
// the Legendre recurrence. Cached per order.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussRule& gauss_legendre(int order);

// Composite Gauss-Legendre over [a, b] with `panels` equal panels.
template <typename F>
double integrate(F&& f, double a, double b, int panels = 16, int order = 16) {
  const GaussRule& rule = gauss_legendre(order);
  double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * h;
    double mid = lo + 0.5 * h;
    double half = 0.5 * h;
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
    total += acc * half;
  }
  return total;
}

// Surface area of the unit sphere in R^d.
double sphere_surface(int dimension);

// \int_0^R g(r) r^{d-1} dr * |S^{d-1}|, with panel count adapted to an
// oscillation frequency hint (panels per unit length of phase).
template <typename G>
double radial_integral(G&& g, int dimension, double R, int panels = 64,
                       int order = 16, double freq_hint = 0.0) {
  int p = panels;
  if (freq_hint > 0.0) {
    double needed = 4.0 * freq_hint * R;
    if (needed > p) p = static_cast<int>(needed) + 1;
  }
  double s = sphere_surface(dimension);
  return s * integrate(
                 [&](double r) {
                   return g(r) * std::pow(r, dimension - 1);
                 },
                 0.0, R, p, order);
}

}  // namespace spdelab

#endif  // SPDELAB_QUADRATURE_HPP
