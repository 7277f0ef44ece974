#pragma once

// The line soliton phi_p solving -phi'' + phi = phi^{p-1} on R, and its
// closed-form integrals. Scaled copies lambda^{1/(p-2)} phi_p(sqrt(lambda) x)
// solve the equation with multiplier lambda.

#include <cmath>
#include <numbers>

#include "errors.hpp"

namespace graph_nls {

inline void require_soliton_exponent(double p) {
  if (!(p > 2.0) || !std::isfinite(p)) throw InputError("soliton exponent must be > 2");
}

inline double soliton_amplitude(double p) { return std::pow(0.5 * p, 1.0 / (p - 2.0)); }

// phi_p(y) = (p/2)^{1/(p-2)} sech^{2/(p-2)}((p-2) y / 2)
inline double soliton_profile(double p, double y) {
  require_soliton_exponent(p);
  const double z = std::fabs(0.5 * (p - 2.0) * y);
  const double e = std::exp(-z);
  const double sech = 2.0 * e / (1.0 + e * e);
  return soliton_amplitude(p) * std::pow(sech, 2.0 / (p - 2.0));
}

inline double soliton_derivative(double p, double y) {
  const double z = 0.5 * (p - 2.0) * y;
  return -soliton_profile(p, y) * std::tanh(z);
}

inline double scaled_soliton(double p, double lambda, double x) {
  return std::pow(lambda, 1.0 / (p - 2.0)) * soliton_profile(p, std::sqrt(lambda) * x);
}

// int_R phi_p^2, via int sech^a = sqrt(pi) Gamma(a/2) / Gamma((a+1)/2).
inline double soliton_mass(double p) {
  require_soliton_exponent(p);
  const double a = 4.0 / (p - 2.0);
  const double b = 0.5 * (p - 2.0);
  const double sech_int = std::sqrt(std::numbers::pi) * std::exp(std::lgamma(0.5 * a) - std::lgamma(0.5 * (a + 1.0)));
  return std::pow(0.5 * p, 2.0 / (p - 2.0)) * sech_int / b;
}

// int_R |phi_p'|^2 = m (p-2)/(p+2)
inline double soliton_dirichlet(double p) { return soliton_mass(p) * (p - 2.0) / (p + 2.0); }

// int_R phi_p^p = int |phi'|^2 + int phi^2
inline double soliton_lp(double p) { return soliton_dirichlet(p) + soliton_mass(p); }

inline double soliton_energy(double p) { return 0.5 * soliton_dirichlet(p) - soliton_lp(p) / p; }

// Mass of the scaled soliton with multiplier lambda: lambda^{(6-p)/(2(p-2))} m.
inline double scaled_soliton_mass(double p, double lambda) {
  return std::pow(lambda, (6.0 - p) / (2.0 * (p - 2.0))) * soliton_mass(p);
}

}  // namespace graph_nls
