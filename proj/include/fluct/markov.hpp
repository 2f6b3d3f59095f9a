#pragma once

// Exact analytics for finite-state Markov chains with strictly positive
// kernels: stationary distribution, reversed chain, entropy production,
// and the SCGF of the log-likelihood-ratio current via a tilted matrix.
//
// Convention (used everywhere): kernel(a, b) = Prob[next = a | prev = b],
// so columns sum to one.

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluct/core.hpp"
#include "fluct/curves.hpp"
#include "fluct/linalg.hpp"

namespace fluct::markov {

struct MarkovChain {
  int n_states = 0;
  Matrix kernel;

  MarkovChain() = default;
  MarkovChain(int n_states, Matrix kernel)
      : n_states(n_states), kernel(std::move(kernel)) {
    validate();
  }

  double p(int a, int b) const { return kernel(a, b); }

  void validate() const {
    if (n_states < 2)
      throw std::invalid_argument("MarkovChain: need at least 2 states");
    if (kernel.rows() != n_states || kernel.cols() != n_states)
      throw std::invalid_argument("MarkovChain: kernel shape mismatch");
    for (int b = 0; b < n_states; ++b) {
      double col = 0.0;
      for (int a = 0; a < n_states; ++a) {
        const double v = kernel(a, b);
        if (!(v > 0.0 && v < 1.0))
          throw std::invalid_argument(
              "MarkovChain: kernel entry (" + std::to_string(a) + "," +
              std::to_string(b) + ") = " + std::to_string(v) +
              " outside (0,1)");
        col += v;
      }
      if (std::fabs(col - 1.0) > 1e-12)
        throw std::invalid_argument(
            "MarkovChain: column " + std::to_string(b) + " sums to " +
            std::to_string(col) + ", expected 1");
    }
  }
};

struct StationaryDistribution {
  std::vector<double> probs;
  double residual = 0.0;  // achieved ||kernel*rho - rho||_inf
};

inline StationaryDistribution stationary(const MarkovChain& chain,
                                         double tol = 1e-13,
                                         int max_iterations = 100000) {
  const int n = chain.n_states;
  std::vector<double> rho(std::size_t(n), 1.0 / n);
  double residual = 1.0;
  for (int it = 0; it < max_iterations; ++it) {
    std::vector<double> next = chain.kernel.apply(rho);
    double norm = 0.0;
    for (double v : next) norm += v;
    for (double& v : next) v /= norm;
    residual = 0.0;
    for (int k = 0; k < n; ++k)
      residual = std::max(residual,
                          std::fabs(next[std::size_t(k)] - rho[std::size_t(k)]));
    rho = std::move(next);
    if (residual <= tol) return {std::move(rho), residual};
  }
  throw numerical_error(
      "stationary: power iteration did not reach tolerance " +
          std::to_string(tol) + " (residual " + std::to_string(residual) + ")",
      residual);
}

// Reversed-chain kernel q(a|b) = p(b|a) rho(a) / rho(b); shares rho.
inline MarkovChain reverse_chain(const MarkovChain& chain) {
  const auto rho = stationary(chain).probs;
  const int n = chain.n_states;
  Matrix q(n, n);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a)
      q(a, b) = chain.p(b, a) * rho[std::size_t(a)] / rho[std::size_t(b)];
  // Renormalize columns to absorb the stationary-solve residual.
  for (int b = 0; b < n; ++b) {
    double col = 0.0;
    for (int a = 0; a < n; ++a) col += q(a, b);
    for (int a = 0; a < n; ++a) q(a, b) /= col;
  }
  return MarkovChain(n, std::move(q));
}

// Mean entropy-production current as the relative entropy density between
// forward and backward transition probabilities, rho(S(p|q)).
inline double entropy_production(const MarkovChain& chain) {
  const auto rho = stationary(chain).probs;
  const MarkovChain rev = reverse_chain(chain);
  double s = 0.0;
  for (int b = 0; b < chain.n_states; ++b) {
    double inner = 0.0;
    for (int a = 0; a < chain.n_states; ++a)
      inner += chain.p(a, b) * (std::log(chain.p(a, b)) - std::log(rev.p(a, b)));
    s += rho[std::size_t(b)] * inner;
  }
  return s;
}

// Direct double-sum form: sum_b rho(b) sum_a p(a|b) [ln p(a|b) - ln p(b|a)].
inline double entropy_production_direct(const MarkovChain& chain) {
  const auto rho = stationary(chain).probs;
  double s = 0.0;
  for (int b = 0; b < chain.n_states; ++b) {
    double inner = 0.0;
    for (int a = 0; a < chain.n_states; ++a)
      inner += chain.p(a, b) * (std::log(chain.p(a, b)) - std::log(chain.p(b, a)));
    s += rho[std::size_t(b)] * inner;
  }
  return s;
}

struct TiltedMatrix {
  double lambda = 0.0;
  Matrix entries;  // entries(a,b) = p(a|b)^(1-lambda) * p(b|a)^lambda
};

inline TiltedMatrix tilted_matrix(const MarkovChain& chain, double lambda) {
  const int n = chain.n_states;
  TiltedMatrix t{lambda, Matrix(n, n)};
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a)
      t.entries(a, b) = std::exp((1.0 - lambda) * std::log(chain.p(a, b)) +
                                 lambda * std::log(chain.p(b, a)));
  return t;
}

// e(lambda) = -ln r(M_lambda); e(0) = e(1) = 0 and e(lambda) = e(1-lambda)
// because M_(1-lambda) is the transpose of M_lambda.
inline double scgf_exact(const MarkovChain& chain, double lambda) {
  const TiltedMatrix t = tilted_matrix(chain, lambda);
  return -std::log(power_iteration(t.entries).value);
}

inline ScgfCurve scgf_curve(const MarkovChain& chain,
                            const std::vector<double>& lambdas) {
  std::vector<double> values;
  values.reserve(lambdas.size());
  for (double l : lambdas) values.push_back(scgf_exact(chain, l));
  return exact_curve(lambdas, std::move(values), "markov");
}

// J_n = ln p(s_n | s_{n-1}) - ln p(s_{n-1} | s_n) along a stationary-started
// trajectory. The long-run mean converges to entropy_production(chain).
inline std::vector<double> sample_current(const MarkovChain& chain,
                                          long long n_steps, RngStream& rng) {
  if (n_steps < 1)
    throw std::invalid_argument("sample_current: n_steps must be >= 1");
  const auto rho = stationary(chain).probs;
  int state = rng.pick(rho);
  std::vector<double> out;
  out.reserve(std::size_t(n_steps));
  std::vector<double> column(std::size_t(chain.n_states));
  for (long long step = 0; step < n_steps; ++step) {
    for (int a = 0; a < chain.n_states; ++a)
      column[std::size_t(a)] = chain.p(a, state);
    const int next = rng.pick(column);
    out.push_back(std::log(chain.p(next, state)) -
                  std::log(chain.p(state, next)));
    state = next;
  }
  return out;
}

inline bool is_detailed_balance(const MarkovChain& chain, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("is_detailed_balance: tol > 0");
  const auto rho = stationary(chain).probs;
  double worst = 0.0;
  for (int b = 0; b < chain.n_states; ++b)
    for (int a = 0; a < chain.n_states; ++a)
      worst = std::max(worst, std::fabs(rho[std::size_t(b)] * chain.p(a, b) -
                                        rho[std::size_t(a)] * chain.p(b, a)));
  return worst <= tol;
}

// --------------------------------------------------------------------------
// Builders

// n-state cycle: p(next|s) = fwd, p(prev|s) = back, p(stay|s) = 1-fwd-back.
inline MarkovChain make_cycle(int n, double fwd, double back) {
  Matrix k(n, n);
  for (int b = 0; b < n; ++b) {
    k((b + 1) % n, b) += fwd;
    k((b + n - 1) % n, b) += back;
    k(b, b) += 1.0 - fwd - back;
  }
  return MarkovChain(n, std::move(k));
}

inline MarkovChain random_chain(int n, RngStream& rng, double min_entry = 0.05) {
  Matrix k(n, n);
  for (int b = 0; b < n; ++b) {
    double col = 0.0;
    for (int a = 0; a < n; ++a) {
      k(a, b) = min_entry + rng.uniform01();
      col += k(a, b);
    }
    for (int a = 0; a < n; ++a) k(a, b) /= col;
  }
  return MarkovChain(n, std::move(k));
}

// Reversible chain from a random symmetric positive weight matrix:
// p(a|b) = X(a,b) / colsum(b) with X symmetric satisfies detailed balance
// with rho(b) proportional to colsum(b).
inline MarkovChain random_reversible_chain(int n, RngStream& rng,
                                           double min_entry = 0.05) {
  Matrix x(n, n);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a <= b; ++a) {
      const double v = min_entry + rng.uniform01();
      x(a, b) = v;
      x(b, a) = v;
    }
  Matrix k(n, n);
  for (int b = 0; b < n; ++b) {
    double col = 0.0;
    for (int a = 0; a < n; ++a) col += x(a, b);
    for (int a = 0; a < n; ++a) k(a, b) = x(a, b) / col;
  }
  return MarkovChain(n, std::move(k));
}

// --------------------------------------------------------------------------
// File interface: {"n_states": n, "kernel": [row-major doubles]}

inline MarkovChain chain_from_json(const nlohmann::json& j) {
  if (!j.contains("n_states") || !j.contains("kernel"))
    throw std::invalid_argument("chain file: need keys n_states and kernel");
  const int n = j.at("n_states").get<int>();
  const auto flat = j.at("kernel").get<std::vector<double>>();
  if (int(flat.size()) != n * n)
    throw std::invalid_argument(
        "chain file: kernel has " + std::to_string(flat.size()) +
        " entries, expected " + std::to_string(n * n));
  Matrix k(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) k(a, b) = flat[std::size_t(a) * n + b];
  return MarkovChain(n, std::move(k));
}

inline MarkovChain load_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw integrity_error("load_chain: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return chain_from_json(j);
}

inline nlohmann::json chain_to_json(const MarkovChain& chain) {
  std::vector<double> flat;
  flat.reserve(std::size_t(chain.n_states) * chain.n_states);
  for (int a = 0; a < chain.n_states; ++a)
    for (int b = 0; b < chain.n_states; ++b) flat.push_back(chain.p(a, b));
  return nlohmann::json{{"n_states", chain.n_states}, {"kernel", flat}};
}

}  // namespace fluct::markov
