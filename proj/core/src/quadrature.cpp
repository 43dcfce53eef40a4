#include "torusot/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <stdexcept>

namespace torusot {

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (!(a < b)) throw std::invalid_argument("integrate: need a < b");
  double error = 0.0;
  double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, 18, tol, &error);
  return value;
}

QuadratureNodes composite_gauss16(double a, double b, int panels) {
  if (!(a < b) || panels < 1) throw std::invalid_argument("composite_gauss16: bad panel setup");
  using rule = boost::math::quadrature::gauss<double, 16>;
  const auto& half_x = rule::abscissa();  // nonnegative half of the rule
  const auto& half_w = rule::weights();

  QuadratureNodes nodes;
  nodes.x.reserve(static_cast<std::size_t>(panels) * 16);
  nodes.w.reserve(static_cast<std::size_t>(panels) * 16);
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    const double scale = 0.5 * width;
    for (std::size_t i = 0; i < half_x.size(); ++i) {
      nodes.x.push_back(mid - scale * half_x[i]);
      nodes.w.push_back(scale * half_w[i]);
      nodes.x.push_back(mid + scale * half_x[i]);
      nodes.w.push_back(scale * half_w[i]);
    }
  }
  return nodes;
}

}  // namespace torusot
