#pragma once

// Statistical estimators shared by the simulation modules: block means,
// log-sum-exp cumulant estimates with delete-one jackknife errors, and a
// plain least-squares line fit. Every estimator reduces over a sorted copy
// of its input, so results are invariant under permutation of the samples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fluct/core.hpp"

namespace fluct {

inline double sorted_sum(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}

struct MeanErr {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

inline MeanErr mean_std_error(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_std_error: empty sample");
  const double n = double(xs.size());
  const double mean = sorted_sum(xs) / n;
  std::vector<double> sq;
  sq.reserve(xs.size());
  for (double x : xs) sq.push_back((x - mean) * (x - mean));
  const double var = xs.size() > 1 ? sorted_sum(std::move(sq)) / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n), xs.size()};
}

// ln( (1/n) sum_j exp(x_j) ), overflow-free.
inline double log_mean_exp(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("log_mean_exp: empty sample");
  const double m = *std::max_element(xs.begin(), xs.end());
  std::vector<double> terms;
  terms.reserve(xs.size());
  for (double x : xs) terms.push_back(std::exp(x - m));
  return m + std::log(sorted_sum(std::move(terms)) / double(xs.size()));
}

struct ScgfPoint {
  double value = 0.0;      // -(1/time_norm) ln mean exp(-lambda W)
  double std_error = 0.0;  // delete-one jackknife
  double ess = 0.0;        // effective sample size of the tilted weights
};

// Empirical SCGF at a single tilt from block sums W_k. The jackknife handles
// the leading bias of the nonlinear ln-mean-exp estimator.
inline ScgfPoint scgf_point(const std::vector<double>& sums, double lambda,
                            double time_norm) {
  const std::size_t n = sums.size();
  if (n < 2) throw std::invalid_argument("scgf_point: need >= 2 blocks");
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = -lambda * sums[k];
  const double m = *std::max_element(t.begin(), t.end());
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = std::exp(t[k] - m);
  const double total = sorted_sum(w);
  double total_sq = 0.0;
  {
    std::vector<double> wsq(w);
    for (double& v : wsq) v *= v;
    total_sq = sorted_sum(std::move(wsq));
  }

  ScgfPoint out;
  out.value = -(m + std::log(total / double(n))) / time_norm;
  out.ess = total_sq > 0.0 ? (total * total) / total_sq : 0.0;

  // Delete-one jackknife over blocks.
  std::vector<double> loo(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double rest = total - w[k];
    loo[k] = -(m + std::log(rest / double(n - 1))) / time_norm;
  }
  const double loo_mean = sorted_sum(loo) / double(n);
  std::vector<double> devsq(n);
  for (std::size_t k = 0; k < n; ++k)
    devsq[k] = (loo[k] - loo_mean) * (loo[k] - loo_mean);
  out.std_error = std::sqrt(sorted_sum(std::move(devsq)) * double(n - 1) / double(n));
  return out;
}

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
  std::size_t n = 0;
};

inline OlsFit ols_fit(const std::vector<double>& xs,
                      const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 3)
    throw std::invalid_argument("ols_fit: need >= 3 paired points");
  const double n = double(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sx += xs[k];
    sy += ys[k];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("ols_fit: degenerate abscissae");
  OlsFit fit;
  fit.n = xs.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double r = ys[k] - (fit.intercept + fit.slope * xs[k]);
    rss += r * r;
  }
  fit.slope_std_error = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

}  // namespace fluct
