#pragma once

// Minimal dense linear algebra: just enough for stochastic kernels and
// tilted transfer operators. Kept dependency-free on purpose; every matrix
// in scope is small and strictly positive (or has strictly positive
// diagonal), so the power method with Collatz-Wielandt bounds is exact
// enough and certifiable.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fluct/core.hpp"

namespace fluct {

class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(std::size_t(rows) * cols, fill) {
    if (rows < 1 || cols < 1)
      throw std::invalid_argument("Matrix: dimensions must be >= 1");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int r, int c) { return a_[std::size_t(r) * cols_ + c]; }
  double operator()(int r, int c) const { return a_[std::size_t(r) * cols_ + c]; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    if (int(x.size()) != cols_)
      throw std::invalid_argument("Matrix::apply: size mismatch");
    std::vector<double> y(std::size_t(rows_), 0.0);
    for (int r = 0; r < rows_; ++r) {
      double acc = 0.0;
      const double* row = &a_[std::size_t(r) * cols_];
      for (int c = 0; c < cols_; ++c) acc += row[c] * x[std::size_t(c)];
      y[std::size_t(r)] = acc;
    }
    return y;
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

inline double linf_norm(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

inline double l1_norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += std::fabs(v);
  return s;
}

struct PowerResult {
  double value = 0.0;            // dominant eigenvalue
  std::vector<double> vector;    // L1-normalized positive eigenvector
  int iterations = 0;
  double residual = 0.0;         // final Collatz-Wielandt relative gap
};

// Dominant eigenvalue of a nonnegative irreducible operator with strictly
// positive diagonal action (stochastic kernels, tilted operators, shifted
// generators all qualify). Stops when the Collatz-Wielandt enclosure
// max_i (Ax)_i/x_i - min_i (Ax)_i/x_i is below rel_tol * r.
inline PowerResult power_iteration(
    const std::function<std::vector<double>(const std::vector<double>&)>& apply,
    int dim, double rel_tol = 1e-13, int max_iterations = 100000) {
  std::vector<double> x(std::size_t(dim), 1.0 / dim);
  PowerResult res;
  for (int it = 1; it <= max_iterations; ++it) {
    std::vector<double> y = apply(x);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double ratio = y[std::size_t(k)] / x[std::size_t(k)];
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    const double norm = l1_norm(y);
    for (double& v : y) v /= norm;
    x = std::move(y);
    res.iterations = it;
    res.value = 0.5 * (lo + hi);
    res.residual = (hi - lo) / std::max(hi, 1e-300);
    if (res.residual <= rel_tol) {
      res.vector = std::move(x);
      return res;
    }
  }
  throw numerical_error(
      "power_iteration: no convergence after " +
          std::to_string(max_iterations) +
          " iterations (relative enclosure " + std::to_string(res.residual) + ")",
      res.residual);
}

inline PowerResult power_iteration(const Matrix& m, double rel_tol = 1e-13,
                                   int max_iterations = 100000) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("power_iteration: matrix must be square");
  return power_iteration(
      [&m](const std::vector<double>& x) { return m.apply(x); }, m.rows(),
      rel_tol, max_iterations);
}

}  // namespace fluct
