#pragma once

// Sampled SCGF curves lambda -> e(lambda), their Legendre transforms
// w -> i(w), and grid helpers. Curves produced by the tilted-operator
// routes are concave with e(0) = 0; rate functions are convex and
// nonnegative whenever the grid contains lambda = 0.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluct/stats.hpp"

namespace fluct {

// Grid of 2*half_points+1 tilts symmetric about `center`; paired points
// (center - k*step, center + k*step) are exact mirror images in floating
// point by construction.
inline std::vector<double> symmetric_grid(double center, double half_width,
                                          double step) {
  if (step <= 0.0 || half_width < step)
    throw std::invalid_argument("symmetric_grid: need 0 < step <= half_width");
  const int half_points = int(std::floor(half_width / step + 1e-9));
  std::vector<double> grid;
  grid.reserve(std::size_t(2 * half_points + 1));
  for (int k = -half_points; k <= half_points; ++k)
    grid.push_back(center + k * step);
  return grid;
}

struct ScgfCurve {
  std::vector<double> lambdas;
  std::vector<double> values;
  std::vector<double> std_errors;  // zero for exact curves
  std::vector<double> ess;         // effective sample sizes (empirical only)
  std::vector<bool> clipped;       // true where the tilted estimator degenerated
  std::string provenance;          // "exact" or "empirical"
  std::string model;
  double time_norm = 1.0;

  std::size_t size() const { return lambdas.size(); }
  bool empirical() const { return provenance == "empirical"; }

  double value_at(double lambda, double tol = 1e-12) const {
    for (std::size_t k = 0; k < lambdas.size(); ++k)
      if (std::fabs(lambdas[k] - lambda) <= tol) return values[k];
    throw std::invalid_argument("ScgfCurve::value_at: tilt not on grid");
  }
};

inline ScgfCurve exact_curve(std::vector<double> lambdas,
                             std::vector<double> values,
                             const std::string& model) {
  ScgfCurve c;
  c.lambdas = std::move(lambdas);
  c.values = std::move(values);
  c.std_errors.assign(c.lambdas.size(), 0.0);
  c.ess.assign(c.lambdas.size(), std::numeric_limits<double>::infinity());
  c.clipped.assign(c.lambdas.size(), false);
  c.provenance = "exact";
  c.model = model;
  return c;
}

// Empirical SCGF from block sums via log-sum-exp with jackknife errors.
// Points where the effective sample size of the tilted weights drops below
// `min_ess` are flagged (value still reported, clipped = true).
inline ScgfCurve empirical_scgf_from_sums(const std::vector<double>& sums,
                                          const std::vector<double>& lambdas,
                                          double time_norm,
                                          const std::string& model,
                                          std::size_t min_blocks = 100,
                                          double min_ess = 30.0) {
  if (sums.size() < min_blocks)
    throw std::invalid_argument(
        "empirical_scgf: need at least " + std::to_string(min_blocks) +
        " blocks, got " + std::to_string(sums.size()));
  ScgfCurve c;
  c.lambdas = lambdas;
  c.provenance = "empirical";
  c.model = model;
  c.time_norm = time_norm;
  c.values.reserve(lambdas.size());
  c.std_errors.reserve(lambdas.size());
  for (double lambda : lambdas) {
    if (lambda == 0.0) {
      // exp(0) has zero variance; the estimator is identically 0.
      c.values.push_back(0.0);
      c.std_errors.push_back(0.0);
      c.ess.push_back(double(sums.size()));
      c.clipped.push_back(false);
      continue;
    }
    const ScgfPoint pt = scgf_point(sums, lambda, time_norm);
    c.values.push_back(pt.value);
    c.std_errors.push_back(pt.std_error);
    c.ess.push_back(pt.ess);
    c.clipped.push_back(pt.ess < min_ess);
  }
  return c;
}

// Max violation of discrete concavity (tilted-operator SCGFs are concave;
// their second differences along a uniform grid are <= 0 up to roundoff).
inline double concavity_defect(const ScgfCurve& c) {
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < c.size(); ++k) {
    const double second =
        c.values[k + 1] - 2.0 * c.values[k] + c.values[k - 1];
    worst = std::max(worst, second);
  }
  return worst;
}

struct RateFunction {
  std::vector<double> ws;
  std::vector<double> values;
  std::vector<bool> boundary_dominated;  // maximizer sat on the lambda-grid edge
  double grid_tolerance = 0.0;           // Legendre discretization error bound
  std::string source_model;

  std::size_t size() const { return ws.size(); }
};

// Legendre transform i(w) = max over the lambda grid of [e(lambda) - lambda w].
// The reported grid_tolerance bounds the loss from maximizing over a grid
// instead of the continuum: (step/2)^2 * max|e''| / 2.
inline RateFunction legendre_transform(const ScgfCurve& curve,
                                       const std::vector<double>& ws) {
  if (curve.size() < 3)
    throw std::invalid_argument("legendre_transform: curve needs >= 3 points");
  if (ws.empty())
    throw std::invalid_argument("legendre_transform: empty w grid");

  RateFunction rf;
  rf.ws = ws;
  rf.source_model = curve.model;
  rf.values.reserve(ws.size());
  rf.boundary_dominated.reserve(ws.size());

  double step = 0.0, max_curv = 0.0;
  for (std::size_t k = 1; k < curve.size(); ++k)
    step = std::max(step, curve.lambdas[k] - curve.lambdas[k - 1]);
  for (std::size_t k = 1; k + 1 < curve.size(); ++k) {
    const double h1 = curve.lambdas[k] - curve.lambdas[k - 1];
    const double h2 = curve.lambdas[k + 1] - curve.lambdas[k];
    const double second = (curve.values[k + 1] - curve.values[k]) / h2 -
                          (curve.values[k] - curve.values[k - 1]) / h1;
    max_curv = std::max(max_curv, std::fabs(second / (0.5 * (h1 + h2))));
  }
  rf.grid_tolerance = 0.125 * step * step * max_curv + 1e-12;

  // clipped (low effective-sample-size) points never enter the maximum
  std::vector<std::size_t> admitted;
  for (std::size_t k = 0; k < curve.size(); ++k)
    if (curve.clipped.empty() || !curve.clipped[k]) admitted.push_back(k);
  if (admitted.size() < 3)
    throw std::invalid_argument(
        "legendre_transform: fewer than 3 unclipped curve points");

  for (double w : ws) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_k = admitted.front();
    for (std::size_t k : admitted) {
      const double cand = curve.values[k] - curve.lambdas[k] * w;
      if (cand > best) {
        best = cand;
        best_k = k;
      }
    }
    rf.values.push_back(best);
    rf.boundary_dominated.push_back(best_k == admitted.front() ||
                                    best_k == admitted.back());
  }
  return rf;
}

// Default w grid for a rate function: spans +-(1.5 * max slope magnitude).
inline std::vector<double> default_w_grid(const ScgfCurve& curve,
                                          std::size_t points = 301) {
  double max_slope = 0.0;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    const double h = curve.lambdas[k] - curve.lambdas[k - 1];
    max_slope = std::max(
        max_slope, std::fabs((curve.values[k] - curve.values[k - 1]) / h));
  }
  if (max_slope == 0.0) max_slope = 1.0;
  const double span = 1.5 * max_slope;
  std::vector<double> ws;
  ws.reserve(points);
  const std::size_t half = points / 2;
  for (std::size_t k = 0; k < points; ++k)
    ws.push_back(span * (double(k) - double(half)) / double(half));
  return ws;
}

}  // namespace fluct
