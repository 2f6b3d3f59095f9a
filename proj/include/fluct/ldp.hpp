#pragma once

// Model-agnostic large-deviation analytics: symmetry audits of SCGF curves,
// rate-function symmetry residuals, histogram-ratio slope fits, and the
// Green-Kubo response comparator.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluct/curves.hpp"
#include "fluct/stats.hpp"

namespace fluct::ldp {

struct SymmetryReport {
  double center = 0.0;
  std::vector<double> grid;         // lambda values (one per pair member)
  std::vector<double> defect;       // e(lambda) - e(2*center - lambda)
  std::vector<double> stat_errors;  // propagated pair errors
  double max_abs_defect = 0.0;
  std::size_t n_skipped = 0;        // pairs dropped because a side was clipped
  bool pass = false;                // every |defect| <= 3 sigma_pair + 1e-9
};

// Pairs each grid point with its mirror about `center` and audits
// e(lambda) = e(2 center - lambda). The grid must pair up within 1e-12.
inline SymmetryReport symmetry_report(const ScgfCurve& curve, double center) {
  const std::size_t n = curve.size();
  if (n < 2) throw std::invalid_argument("symmetry_report: curve too short");
  SymmetryReport rep;
  rep.center = center;
  rep.pass = true;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t mirror = n - 1 - k;
    if (std::fabs((curve.lambdas[k] - center) + (curve.lambdas[mirror] - center)) >
        1e-12)
      throw std::invalid_argument(
          "symmetry_report: grid is not symmetric about the center (lambda = " +
          std::to_string(curve.lambdas[k]) + " unpaired)");
    if (mirror < k) break;  // each pair once
    const bool clipped = !curve.clipped.empty() &&
                         (curve.clipped[k] || curve.clipped[mirror]);
    if (clipped) {
      rep.n_skipped += 1;
      continue;
    }
    const double d = curve.values[k] - curve.values[mirror];
    const double se = std::hypot(curve.std_errors[k], curve.std_errors[mirror]);
    rep.grid.push_back(curve.lambdas[k]);
    rep.defect.push_back(d);
    rep.stat_errors.push_back(se);
    rep.max_abs_defect = std::max(rep.max_abs_defect, std::fabs(d));
    if (std::fabs(d) > 3.0 * se + 1e-9) rep.pass = false;
  }
  return rep;
}

struct RateSymmetryReport {
  double scale = 1.0;
  std::vector<double> ws;        // positive side of each pair
  std::vector<double> residual;  // i(w) - i(-w) + scale * w
  double max_abs_residual = 0.0;
  double tolerance = 0.0;        // grid tolerance carried from the transform
  std::size_t n_skipped = 0;     // boundary-dominated pairs
  bool pass = false;
};

// Audits the rate-function symmetry i(w) - i(-w) = -scale * w on a w grid
// symmetric about 0, skipping pairs where either side was boundary-dominated.
inline RateSymmetryReport rate_symmetry(const RateFunction& rf, double scale) {
  const std::size_t n = rf.size();
  if (n < 2) throw std::invalid_argument("rate_symmetry: grid too short");
  RateSymmetryReport rep;
  rep.scale = scale;
  rep.tolerance = 2.0 * rf.grid_tolerance;
  rep.pass = true;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t mirror = n - 1 - k;
    if (std::fabs(rf.ws[k] + rf.ws[mirror]) > 1e-12)
      throw std::invalid_argument(
          "rate_symmetry: w grid is not symmetric about 0");
    if (mirror < k) break;
    if (rf.boundary_dominated[k] || rf.boundary_dominated[mirror]) {
      rep.n_skipped += 1;
      continue;
    }
    const double w = rf.ws[mirror];  // nonnegative side
    const double r = rf.values[mirror] - rf.values[k] + scale * w;
    rep.ws.push_back(w);
    rep.residual.push_back(r);
    rep.max_abs_residual = std::max(rep.max_abs_residual, std::fabs(r));
    if (std::fabs(r) > rep.tolerance) rep.pass = false;
  }
  return rep;
}

struct HistogramRatio {
  std::vector<double> bins;       // positive-side midpoints admitted to the fit
  std::vector<double> log_ratio;  // ln P(w) / P(-w) per admitted bin
  OlsFit fit;
  double expected_slope = 1.0;    // un-normalized entropy-production sums
  std::size_t min_count = 20;
  bool weighted = false;
};

// Least-squares slope of ln[P(w)/P(-w)] versus w over symmetric bins.
// Only bins with at least `min_count` samples on both sides enter the fit.
// The default fit is unweighted; `weighted` switches to inverse-variance
// weights 1/(1/n+ + 1/n-) per bin and is flagged in the result.
inline HistogramRatio histogram_ratio(const std::vector<double>& sums,
                                      int n_bins, std::size_t min_count = 20,
                                      bool weighted = false) {
  if (n_bins < 5) throw std::invalid_argument("histogram_ratio: n_bins >= 5");
  if (sums.empty()) throw std::invalid_argument("histogram_ratio: no samples");
  double max_abs = 0.0;
  for (double w : sums) max_abs = std::max(max_abs, std::fabs(w));
  if (max_abs == 0.0)
    throw insufficient_statistics_error(
        "histogram_ratio: all window sums are zero");
  const double span = max_abs * (1.0 + 1e-12);
  std::vector<std::size_t> counts(std::size_t(n_bins), 0);
  for (double w : sums) {
    int b = int((w + span) / (2.0 * span) * n_bins);
    if (b >= 0 && b < n_bins) counts[std::size_t(b)] += 1;
  }

  HistogramRatio hr;
  hr.min_count = min_count;
  hr.weighted = weighted;
  std::vector<double> weights;
  std::string starved;
  for (int b = n_bins / 2; b < n_bins; ++b) {
    const int mirror = n_bins - 1 - b;
    if (mirror == b) continue;  // central bin has no partner
    const double mid = (-span) + (double(b) + 0.5) * (2.0 * span / n_bins);
    const std::size_t cp = counts[std::size_t(b)];
    const std::size_t cn = counts[std::size_t(mirror)];
    if (cp >= min_count && cn >= min_count) {
      hr.bins.push_back(mid);
      hr.log_ratio.push_back(std::log(double(cp) / double(cn)));
      weights.push_back(1.0 / (1.0 / double(cp) + 1.0 / double(cn)));
    } else if (cp > 0 || cn > 0) {
      starved += " [w=" + std::to_string(mid) + ": " + std::to_string(cp) +
                 "/" + std::to_string(cn) + "]";
    }
  }
  if (hr.bins.size() < 3)
    throw insufficient_statistics_error(
        "histogram_ratio: fewer than 3 bins have >= " +
        std::to_string(min_count) + " counts on both sides;" + starved);
  if (!weighted) {
    hr.fit = ols_fit(hr.bins, hr.log_ratio);
    return hr;
  }
  // inverse-variance weighted line through the admitted bins
  double sw = 0, swx = 0, swy = 0;
  for (std::size_t k = 0; k < hr.bins.size(); ++k) {
    sw += weights[k];
    swx += weights[k] * hr.bins[k];
    swy += weights[k] * hr.log_ratio[k];
  }
  const double mx = swx / sw, my = swy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < hr.bins.size(); ++k) {
    sxx += weights[k] * (hr.bins[k] - mx) * (hr.bins[k] - mx);
    sxy += weights[k] * (hr.bins[k] - mx) * (hr.log_ratio[k] - my);
  }
  hr.fit.n = hr.bins.size();
  hr.fit.slope = sxy / sxx;
  hr.fit.intercept = my - hr.fit.slope * mx;
  hr.fit.slope_std_error = std::sqrt(1.0 / sxx);
  return hr;
}

// Supplies a parameterized current mean and the equilibrium current
// autocovariance sequence for the Green-Kubo comparison.
struct ResponseFamily {
  std::function<double(double)> mean_current_at_field;
  std::function<double(long long)> correlation_term;  // term at lag x >= 0
  double beta = 1.0;
};

struct GreenKuboResponse {
  double response = 0.0;         // finite-difference d<J>/dE at E = 0
  double correlation_sum = 0.0;  // beta * sum_x of correlation terms
  double ratio = 0.0;
  long long terms_used = 0;
  bool consistent = false;  // ratio within [0.95, 1.05]
};

// Compares the finite-difference response at +-dE against the equilibrium
// correlation sum, truncating the sum once the running tail estimate drops
// below tail_rel_tol relative to the partial sum.
inline GreenKuboResponse green_kubo_response(const ResponseFamily& family,
                                             double dE,
                                             double tail_rel_tol = 1e-3,
                                             long long max_terms = 1000000) {
  if (!(dE > 0.0)) throw std::invalid_argument("green_kubo_response: dE > 0");
  GreenKuboResponse out;
  out.response = (family.mean_current_at_field(dE) -
                  family.mean_current_at_field(-dE)) /
                 (2.0 * dE);

  double sum = family.correlation_term(0);
  long long x = 0;
  double tail = std::fabs(sum);
  while (tail > tail_rel_tol * std::max(std::fabs(sum), 1e-300)) {
    if (++x > max_terms)
      throw truncation_error(
          "green_kubo_response: autocovariance tail did not converge "
          "(partial sum " + std::to_string(family.beta * sum) + ")",
          family.beta * sum);
    const double term = family.correlation_term(x);
    sum += 2.0 * term;  // lags +x and -x
    tail = 2.0 * std::fabs(term);
  }
  out.terms_used = x + 1;
  out.correlation_sum = family.beta * sum;
  out.ratio = out.response / out.correlation_sum;
  out.consistent = out.ratio >= 0.95 && out.ratio <= 1.05;
  return out;
}

}  // namespace fluct::ldp
