#include "sfrc/eshelby.hpp"

#include <cmath>
#include <stdexcept>

namespace sfrc {

namespace {

// Below this distance from the sphere the closed form divides by ~0 and the
// sphere solution is exact to the precision we can resolve anyway.
constexpr double kSphereTol = 1e-9;

// Every independent component has the form (A + B nu) / (1 - nu).
struct Component {
  double a;
  double b;
};

struct Coefficients {
  Component s1111, s2222, s2233, s2211, s1122, s2323, s1212;
};

Coefficients coefficients(double ar) {
  if (!(ar >= 1.0) || !std::isfinite(ar))
    throw std::invalid_argument("eshelby: aspect ratio must be finite and >= 1 (prolate)");
  if (ar - 1.0 < kSphereTol) {
    constexpr double t = 1.0 / 15.0;
    return {{7 * t, -5 * t}, {7 * t, -5 * t}, {-t, 5 * t}, {-t, 5 * t},
            {-t, 5 * t},     {4 * t, -5 * t}, {4 * t, -5 * t}};
  }
  const double a2 = ar * ar;
  const double t = a2 - 1.0;
  const double g = spheroid_shape_factor(ar);

  Coefficients c;
  c.s1111 = {0.5 * (1.0 + (3.0 * a2 - 1.0) / t - (1.0 + 3.0 * a2 / t) * g), -1.0 + g};
  c.s2222 = {3.0 * a2 / (8.0 * t) + 0.25 * (1.0 - 9.0 / (4.0 * t)) * g, -0.5 * g};
  c.s2233 = {0.25 * (a2 / (2.0 * t) - (1.0 + 3.0 / (4.0 * t)) * g), 0.5 * g};
  c.s2211 = {-a2 / (2.0 * t) + 0.25 * (3.0 * a2 / t - 1.0) * g, 0.5 * g};
  c.s1122 = {-0.5 * (1.0 + 1.0 / t) + 0.5 * (1.0 + 3.0 / (2.0 * t)) * g, 1.0 - g};
  c.s2323 = {0.25 * (a2 / (2.0 * t) + (1.0 - 3.0 / (4.0 * t)) * g), -0.5 * g};
  c.s1212 = {0.25 * (1.0 - (a2 + 1.0) / t - 0.5 * (1.0 - 3.0 * (a2 + 1.0) / t) * g),
             0.25 * (-2.0 + g)};
  return c;
}

template <class F>
SymTensor4 assemble(const Coefficients& c, F&& value) {
  Mat6 s = Mat6::Zero();
  s(0, 0) = value(c.s1111);
  s(0, 1) = s(0, 2) = value(c.s1122);
  s(1, 0) = s(2, 0) = value(c.s2211);
  s(1, 1) = s(2, 2) = value(c.s2222);
  s(1, 2) = s(2, 1) = value(c.s2233);
  s(3, 3) = 2.0 * value(c.s2323);
  s(4, 4) = s(5, 5) = 2.0 * value(c.s1212);
  return SymTensor4(s);
}

}  // namespace

double spheroid_shape_factor(double ar) {
  const double t = ar * ar - 1.0;
  if (t < 0.3) {
    // alpha*s - asinh(s) with s^2 = t, divided by s^3, as a power series in t.
    double binom = 1.0;    // binom(1/2, n)
    double central = 1.0;  // (2n)! / (4^n (n!)^2)
    double tn = 1.0;       // t^(n-1)
    double sum = 0.0;
    for (int n = 1; n < 200; ++n) {
      binom *= (1.5 - n) / n;
      central *= (2.0 * n - 1.0) / (2.0 * n);
      const double asinh_coeff = (n % 2 ? -1.0 : 1.0) * central / (2.0 * n + 1.0);
      const double term = (binom - asinh_coeff) * tn;
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
      tn *= t;
    }
    return ar * sum;
  }
  const double s = std::sqrt(t);
  return ar / (t * s) * (ar * s - std::acosh(ar));
}

SymTensor4 eshelby(double aspect_ratio, double nu) {
  if (!(nu > -1.0 && nu < 0.5)) throw std::invalid_argument("eshelby: Poisson ratio outside (-1, 0.5)");
  const Coefficients c = coefficients(aspect_ratio);
  return assemble(c, [nu](Component k) { return (k.a + k.b * nu) / (1.0 - nu); });
}

SymTensor4 eshelby_nu_derivative(double aspect_ratio, double nu) {
  const Coefficients c = coefficients(aspect_ratio);
  const double d = (1.0 - nu) * (1.0 - nu);
  return assemble(c, [d](Component k) { return (k.a + k.b) / d; });
}

}  // namespace sfrc
