#pragma once

// Continuous-time asymmetric simple exclusion process on a ring: exact
// event-driven simulation (unit-rate bond clocks thinned by the p/q coin),
// jump-count estimators, and the exact tilted generator on small particle
// sectors.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluct/core.hpp"
#include "fluct/curves.hpp"
#include "fluct/linalg.hpp"

namespace fluct::asep {

struct AsepParams {
  double p = 0.5;  // right-jump probability at a clock tick
  double q = 0.5;  // left-jump probability
  double field = 0.0;  // E = ln(p/q), recomputed on construction

  static AsepParams from_pq(double p, double q) {
    if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0))
      throw std::invalid_argument("AsepParams: p, q must be strictly in (0,1)");
    AsepParams params;
    params.p = p;
    params.q = q;
    params.field = std::log(p / q);
    return params;
  }

  // Logistic parameterization p = 1/(1 + exp(-E)) = 1 - q, for which
  // p - q = tanh(E/2).
  static AsepParams from_field(double field) {
    const double p = 1.0 / (1.0 + std::exp(-field));
    return from_pq(p, 1.0 - p);
  }

  void validate() const {
    if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0))
      throw std::invalid_argument("AsepParams: p, q must be strictly in (0,1)");
    if (std::fabs(field - std::log(p / q)) > 1e-14)
      throw std::invalid_argument("AsepParams: field inconsistent with ln(p/q)");
  }
};

struct AsepState {
  int ell = 0;
  std::vector<std::uint8_t> occupancy;
  int n_particles = 0;

  static AsepState random(int ell, int n_particles, RngStream& rng) {
    if (ell < 2 || n_particles < 0 || n_particles > ell)
      throw std::invalid_argument("AsepState: need ell >= 2, 0 <= n <= ell");
    AsepState s;
    s.ell = ell;
    s.n_particles = n_particles;
    s.occupancy.assign(std::size_t(ell), 0);
    // Fisher-Yates over site indices: uniform arrangement of n particles.
    std::vector<int> sites(std::size_t(ell), 0);
    for (int i = 0; i < ell; ++i) sites[std::size_t(i)] = i;
    for (int i = ell - 1; i > 0; --i) {
      const int j = int(rng.below(std::uint64_t(i + 1)));
      std::swap(sites[std::size_t(i)], sites[std::size_t(j)]);
    }
    for (int k = 0; k < n_particles; ++k) s.occupancy[std::size_t(sites[std::size_t(k)])] = 1;
    return s;
  }

  void validate() const {
    int count = 0;
    for (std::uint8_t o : occupancy) {
      if (o > 1) throw std::invalid_argument("AsepState: occupancy not in {0,1}");
      count += o;
    }
    if (count != n_particles)
      throw std::invalid_argument("AsepState: particle count mismatch");
  }
};

struct Event {
  double time = 0.0;
  int bond = 0;       // exchange across (bond, bond+1 mod ell)
  int direction = 0;  // +1 particle moved right, -1 moved left
};

struct EventLog {
  std::vector<Event> events;
  double horizon = 0.0;
  int ell = 0;
  int n_particles = 0;
  std::vector<std::uint8_t> initial_occupancy;  // at measurement start
};

// Exact continuous-time sampling: every bond carries an independent
// unit-rate Poisson clock, realized as one Exp(ell) superposition clock
// plus a uniform bond choice; ticks that hit an inactive bond or fail the
// p/q coin are thinned out of the log. Events during burn_in are discarded
// and times are measured from the end of burn-in.
inline EventLog simulate(const AsepParams& params, int ell, int n_particles,
                         double horizon, RngStream& rng, double burn_in = 0.0) {
  params.validate();
  if (ell < 2) throw std::invalid_argument("asep::simulate: ell must be >= 2");
  if (n_particles < 0 || n_particles > ell)
    throw std::invalid_argument("asep::simulate: need 0 <= n_particles <= ell");
  if (!(horizon > 0.0))
    throw std::invalid_argument("asep::simulate: horizon must be positive");

  AsepState state = AsepState::random(ell, n_particles, rng);
  EventLog log;
  log.horizon = horizon;
  log.ell = ell;
  log.n_particles = n_particles;

  if (n_particles == 0 || n_particles == ell) {
    log.initial_occupancy = state.occupancy;  // no active bonds, ever
    return log;
  }

  double t = -burn_in;
  bool recording = burn_in <= 0.0;
  if (recording) log.initial_occupancy = state.occupancy;
  for (;;) {
    t += rng.exponential(double(ell));
    if (!recording && t >= 0.0) {
      recording = true;
      log.initial_occupancy = state.occupancy;
    }
    if (t >= horizon) break;
    const int b = int(rng.below(std::uint64_t(ell)));
    const int next = (b + 1) % ell;
    const std::uint8_t here = state.occupancy[std::size_t(b)];
    const std::uint8_t there = state.occupancy[std::size_t(next)];
    const double u = rng.uniform01();
    int direction = 0;
    if (here == 1 && there == 0) {
      if (u < params.p) direction = +1;
    } else if (here == 0 && there == 1) {
      if (u < params.q) direction = -1;
    }
    if (direction != 0) {
      std::swap(state.occupancy[std::size_t(b)], state.occupancy[std::size_t(next)]);
      if (recording && t >= 0.0) log.events.push_back({t, b, direction});
    }
  }
  return log;
}

// Replays the log from its initial occupancy, checking that every exchange
// is admissible and conservation holds; returns the final state.
inline AsepState replay_events(const EventLog& log) {
  AsepState state;
  state.ell = log.ell;
  state.n_particles = log.n_particles;
  state.occupancy = log.initial_occupancy;
  state.validate();
  double last_time = 0.0;
  for (const Event& e : log.events) {
    if (e.time < last_time || e.time > log.horizon)
      throw integrity_error("replay_events: event times not increasing");
    last_time = e.time;
    const int next = (e.bond + 1) % log.ell;
    const std::uint8_t here = state.occupancy[std::size_t(e.bond)];
    const std::uint8_t there = state.occupancy[std::size_t(next)];
    const bool ok = e.direction == +1 ? (here == 1 && there == 0)
                                      : (here == 0 && there == 1);
    if (!ok) throw integrity_error("replay_events: inadmissible exchange");
    std::swap(state.occupancy[std::size_t(e.bond)], state.occupancy[std::size_t(next)]);
    state.validate();
  }
  return state;
}

struct JumpCounts {
  long long right = 0;
  long long left = 0;
};

inline JumpCounts count_jumps(const EventLog& log) {
  JumpCounts c;
  for (const Event& e : log.events) (e.direction > 0 ? c.right : c.left) += 1;
  return c;
}

// (right - left) / (ell * horizon); converges to (p - q) u (1 - u) in the
// ring-size limit.
inline double mean_current(const EventLog& log) {
  if (!(log.horizon > 0.0))
    throw std::invalid_argument("mean_current: horizon must be positive");
  const JumpCounts c = count_jumps(log);
  return double(c.right - c.left) / (double(log.ell) * log.horizon);
}

// Each exchange contributes +-E, so the rate is E x mean_current exactly
// as estimators.
inline double entropy_production_rate(const EventLog& log,
                                      const AsepParams& params) {
  return params.field * mean_current(log);
}

// Equilibrium jump-rate estimator of the Ohmic conductivity u(1-u):
// total exchanges / (ell * horizon) at p = q = 1/2 (exchanges then occur
// at rate 1/2 * [# active bonds], whose mean is ell u(1-u) + O(1/ell)).
inline double conductivity(const EventLog& log, const AsepParams& params) {
  if (params.field != 0.0 || params.p != 0.5)
    throw std::invalid_argument("conductivity: requires p = q = 1/2 (E = 0)");
  const JumpCounts c = count_jumps(log);
  return double(c.right + c.left) / (double(log.ell) * log.horizon);
}

// Net signed jump counts per consecutive block of length block_time.
inline std::vector<double> block_net_jumps(const EventLog& log,
                                           double block_time) {
  if (!(block_time > 0.0))
    throw std::invalid_argument("block_net_jumps: block_time must be positive");
  const int n_blocks = int(log.horizon / block_time);
  std::vector<double> sums(std::size_t(std::max(n_blocks, 0)), 0.0);
  for (const Event& e : log.events) {
    const int b = int(e.time / block_time);
    if (b >= 0 && b < n_blocks) sums[std::size_t(b)] += double(e.direction);
  }
  return sums;
}

// Total (unsigned) jump counts per block; the block-to-block scatter gives
// an autocorrelation-honest error bar for activity estimators.
inline std::vector<double> block_total_jumps(const EventLog& log,
                                             double block_time) {
  if (!(block_time > 0.0))
    throw std::invalid_argument("block_total_jumps: block_time must be positive");
  const int n_blocks = int(log.horizon / block_time);
  std::vector<double> sums(std::size_t(std::max(n_blocks, 0)), 0.0);
  for (const Event& e : log.events) {
    const int b = int(e.time / block_time);
    if (b >= 0 && b < n_blocks) sums[std::size_t(b)] += 1.0;
  }
  return sums;
}

// Entropy-production window sums W_k = E * (net signed jumps in block k).
inline std::vector<double> block_sums(const EventLog& log,
                                      const AsepParams& params,
                                      double block_time) {
  std::vector<double> sums = block_net_jumps(log, block_time);
  for (double& s : sums) s *= params.field;
  return sums;
}

// Empirical SCGF per unit time of the entropy-production current, with
// jackknife errors; requires horizon >= 100 block_time.
inline ScgfCurve scgf_from_jumps(const EventLog& log, const AsepParams& params,
                                 double block_time,
                                 const std::vector<double>& lambdas) {
  if (log.horizon < 100.0 * block_time)
    throw std::invalid_argument(
        "scgf_from_jumps: horizon must cover at least 100 blocks");
  return empirical_scgf_from_sums(block_sums(log, params, block_time), lambdas,
                                  block_time, "asep");
}

// Same estimator starting from persisted net jump counts per block.
inline ScgfCurve scgf_from_net_jumps(const std::vector<double>& net_jumps,
                                     const AsepParams& params,
                                     double block_time,
                                     const std::vector<double>& lambdas) {
  std::vector<double> sums(net_jumps);
  for (double& s : sums) s *= params.field;
  return empirical_scgf_from_sums(sums, lambdas, block_time, "asep");
}

// --------------------------------------------------------------------------
// Exact tilted generator on the fixed-particle-number sector.
//
// Off-diagonal entries carry the tilt exp(-lambda * +-E) of the jump's
// entropy contribution; the diagonal keeps the untilted escape rates. The
// SCGF is -theta(lambda) with theta the dominant eigenvalue, computed by
// power iteration on the shifted nonnegative matrix.

namespace detail {
inline std::vector<std::uint32_t> sector_states(int ell, int n_particles) {
  std::vector<std::uint32_t> states;
  for (std::uint32_t mask = 0; mask < (1u << ell); ++mask)
    if (__builtin_popcount(mask) == n_particles) states.push_back(mask);
  return states;
}
}  // namespace detail

inline double exact_scgf(const AsepParams& params, int ell, int n_particles,
                         double lambda) {
  params.validate();
  if (ell < 2 || ell > 20)
    throw capacity_error("asep::exact_scgf: ell must be in [2, 20]");
  if (n_particles <= 0 || n_particles >= ell)
    throw std::invalid_argument("asep::exact_scgf: sector must be nontrivial");
  const auto states = detail::sector_states(ell, n_particles);
  const int dim = int(states.size());
  if (dim > 8192)
    throw capacity_error("asep::exact_scgf: sector dimension " +
                         std::to_string(dim) + " exceeds cap 8192");
  std::vector<int> index(1u << ell, -1);
  for (int k = 0; k < dim; ++k) index[states[std::size_t(k)]] = k;

  const double tilt_right = params.p * std::exp(-lambda * params.field);
  const double tilt_left = params.q * std::exp(+lambda * params.field);
  const double shift = double(ell) * std::max(params.p, params.q) + 1.0;

  Matrix gen(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const std::uint32_t mask = states[std::size_t(k)];
    double escape = 0.0;
    for (int b = 0; b < ell; ++b) {
      const int nb = (b + 1) % ell;
      const bool here = (mask >> b) & 1u;
      const bool there = (mask >> nb) & 1u;
      if (here == there) continue;
      const std::uint32_t swapped = mask ^ (1u << b) ^ (1u << nb);
      const int to = index[swapped];
      if (here && !there) {
        gen(to, k) += tilt_right;
        escape += params.p;
      } else {
        gen(to, k) += tilt_left;
        escape += params.q;
      }
    }
    gen(k, k) = shift - escape;
  }
  const double theta = power_iteration(gen).value - shift;
  return -theta;
}

}  // namespace fluct::asep
