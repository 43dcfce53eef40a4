#pragma once

#include <functional>
#include <vector>

namespace torusot {

// Adaptive Gauss-Kronrod integral of f over [a,b] to absolute tolerance tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12);

// Composite 16-point Gauss-Legendre rule on [a,b] split into equal panels.
// Meant for sweeping smooth integrands against many oscillatory weights.
struct QuadratureNodes {
  std::vector<double> x;
  std::vector<double> w;
};
QuadratureNodes composite_gauss16(double a, double b, int panels);

}  // namespace torusot
