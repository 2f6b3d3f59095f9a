#pragma once

// Exact transfer-matrix computations for the 1D Ising chain with coupling K
// and a symmetry-breaking field E. The spin-flip tilted pressure
// p(lambda, E) reduces to a difference of log transfer eigenvalues at
// shifted fields, which makes the lambda <-> 2E - lambda symmetry exact.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fluct/core.hpp"
#include "fluct/curves.hpp"

namespace fluct::gibbs1d {

struct IsingSpec {
  double beta = 1.0;
  double coupling = 0.0;  // K
  double field = 0.0;     // E

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw std::invalid_argument("IsingSpec: beta must be positive and finite");
    if (!std::isfinite(coupling) || !std::isfinite(field))
      throw std::invalid_argument("IsingSpec: K and E must be finite");
  }
};

// ln|S| offset of the a-priori counting measure; pressure() reports raw
// values so that the PCA normalization (free energy 0) and the Ising
// pressure can coexist without convention clashes.
inline constexpr double counting_log_offset = 0.69314718055994530942;  // ln 2

// ln of the dominant eigenvalue of T(s,s') = exp[bK s s' + bh (s+s')/2].
// Written in terms of |h| so evenness in the field is exact in floating
// point, which is what makes the fluctuation symmetry hold to 1e-15.
inline double log_transfer_eigenvalue(double beta, double coupling, double h) {
  const double bk = beta * coupling;
  const double bh = beta * std::fabs(h);
  const double ek = std::exp(bk);
  const double emk = std::exp(-bk);
  const double sh = std::sinh(bh);
  return std::log(ek * std::cosh(bh) + std::sqrt(ek * ek * sh * sh + emk * emk));
}

// Raw free-energy density at an overridden field (before the ln 2 offset):
// K = 0, h = 0 gives ln 2; K = 0 gives ln(2 cosh(beta h)).
inline double pressure(const IsingSpec& spec, double field_override) {
  spec.validate();
  return log_transfer_eigenvalue(spec.beta, spec.coupling, field_override);
}

// Tilted pressure of the spin-flip current J_x = sigma(x):
// p(lambda, E) = ln r(E) - ln r(E - lambda). Zero at lambda = 0 and at
// lambda = 2E; symmetric about lambda = E.
inline double tilted_pressure(const IsingSpec& spec, double lambda) {
  return pressure(spec, spec.field) - pressure(spec, spec.field - lambda);
}

inline ScgfCurve tilted_pressure_curve(const IsingSpec& spec,
                                       const std::vector<double>& lambdas) {
  std::vector<double> values;
  values.reserve(lambdas.size());
  for (double l : lambdas) values.push_back(tilted_pressure(spec, l));
  return exact_curve(lambdas, std::move(values), "ising");
}

// Dominant-eigenvector expectation of sigma_0 at field h (odd in h).
inline double magnetization(const IsingSpec& spec, double h) {
  spec.validate();
  const double bk = spec.beta * spec.coupling;
  const double bh = spec.beta * h;
  const double ek = std::exp(bk);
  const double emk = std::exp(-bk);
  const double sh = std::sinh(bh);
  return ek * sh / std::sqrt(ek * ek * sh * sh + emk * emk);
}

// s(mu|pi mu) = 2 beta E m(beta, K, E); strictly positive when E != 0.
inline double relative_entropy_density(const IsingSpec& spec) {
  return 2.0 * spec.beta * spec.field * magnetization(spec, spec.field);
}

struct GreenKubo {
  double response = 0.0;         // central difference of m at E = 0
  double correlation_sum = 0.0;  // beta * sum_x nu(sigma_0 sigma_x) at E = 0
};

// Green-Kubo check at E = 0. The two-point functions nu(sigma_0 sigma_x)
// = tanh(beta K)^{|x|} are summed until the remaining geometric tail is
// below 1e-14.
inline GreenKubo green_kubo_check(const IsingSpec& spec, double delta) {
  spec.validate();
  if (!(delta > 0.0 && delta <= 0.1))
    throw std::invalid_argument("green_kubo_check: delta must be in (0, 0.1]");
  if (spec.field != 0.0)
    throw std::invalid_argument("green_kubo_check: requires E = 0");

  GreenKubo gk;
  gk.response =
      (magnetization(spec, delta) - magnetization(spec, -delta)) / (2.0 * delta);

  const double t = std::tanh(spec.beta * spec.coupling);
  double sum = 1.0;  // x = 0 term, nu(sigma_0^2) = 1
  double term = 1.0;
  for (long long x = 1; x <= 100000000; ++x) {
    term *= t;
    sum += 2.0 * term;  // +x and -x
    const double tail = 2.0 * std::fabs(term * t) / (1.0 - std::fabs(t));
    if (tail < 1e-14) {
      gk.correlation_sum = spec.beta * sum;
      return gk;
    }
  }
  throw truncation_error("green_kubo_check: correlation tail did not converge",
                         spec.beta * sum);
}

}  // namespace fluct::gibbs1d
