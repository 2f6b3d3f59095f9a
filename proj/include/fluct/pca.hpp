#pragma once

// 1D probabilistic cellular automata on a ring: parallel-update simulation,
// the time-reversal entropy current J_{i,n}, finite-window SCGF estimation,
// the exact tilted transfer operator on small rings, and the window
// boundary defect R_{L,N} - sum(J).

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluct/core.hpp"
#include "fluct/curves.hpp"
#include "fluct/linalg.hpp"

namespace fluct::pca {

// Translation-invariant nearest-neighbor single-site update rule: one table
// mapping each (left, center, right) neighborhood to a probability vector
// over the alphabet. All probabilities strictly inside (0,1).
struct PcaRule {
  int alphabet_size = 2;
  std::vector<double> probs;      // index(((l*q + c)*q + r)*q + a)
  std::vector<double> log_probs;

  PcaRule() = default;
  PcaRule(int q, std::vector<double> table)
      : alphabet_size(q), probs(std::move(table)) {
    validate();
    log_probs.reserve(probs.size());
    for (double v : probs) log_probs.push_back(std::log(v));
  }

  std::size_t row(int l, int c, int r) const {
    const std::size_t q = std::size_t(alphabet_size);
    return ((std::size_t(l) * q + std::size_t(c)) * q + std::size_t(r)) * q;
  }
  double prob(int l, int c, int r, int a) const {
    return probs[row(l, c, r) + std::size_t(a)];
  }
  double logp(int l, int c, int r, int a) const {
    return log_probs[row(l, c, r) + std::size_t(a)];
  }

  // Range of |ln p| over the table; enters the defect bound constants.
  double max_abs_log() const {
    double m = 0.0;
    for (double v : probs) m = std::max(m, std::fabs(std::log(v)));
    return m;
  }

  void validate() const {
    const std::size_t q = std::size_t(alphabet_size);
    if (q < 2) throw std::invalid_argument("PcaRule: alphabet size >= 2");
    if (probs.size() != q * q * q * q)
      throw std::invalid_argument("PcaRule: table must have |S|^3 rows");
    for (std::size_t base = 0; base < probs.size(); base += q) {
      double sum = 0.0;
      for (std::size_t a = 0; a < q; ++a) {
        const double v = probs[base + a];
        if (!(v > 0.0 && v < 1.0))
          throw std::invalid_argument(
              "PcaRule: probability " + std::to_string(v) + " outside (0,1)");
        sum += v;
      }
      if (std::fabs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("PcaRule: neighborhood row sums to " +
                                    std::to_string(sum));
    }
  }
};

// --------------------------------------------------------------------------
// Preset rules. Ising alphabet, index 0 <-> -1, index 1 <-> +1.

namespace detail {
template <typename Fn>
PcaRule make_ising_rule(Fn&& p_plus_of) {
  std::vector<double> table;
  table.reserve(16);
  for (int l = 0; l < 2; ++l)
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < 2; ++r) {
        const double pp =
            p_plus_of(ising_value(std::int8_t(l)), ising_value(std::int8_t(c)),
                      ising_value(std::int8_t(r)));
        table.push_back(1.0 - pp);
        table.push_back(pp);
      }
  return PcaRule(2, std::move(table));
}
}  // namespace detail

// Neighbor-independent rule: p(+1 | anything) = p_plus.
inline PcaRule free_rule(double p_plus) {
  return detail::make_ising_rule([=](int, int, int) { return p_plus; });
}

// Heat-bath rule p(a | l,c,r) ~ exp[a (K (l + r) + h)]; detailed-balanced,
// so its space-time measure is time-reversal symmetric.
inline PcaRule glauber_rule(double coupling, double h) {
  return detail::make_ising_rule([=](int l, int, int r) {
    const double x = coupling * (l + r) + h;
    return std::exp(x) / (2.0 * std::cosh(x));
  });
}

// Asymmetric-coupling variant p(a | l,c,r) ~ exp[a (Kl l + Kr r + h)];
// Kl != Kr breaks time-reversal symmetry and drives a nonzero entropy
// current.
inline PcaRule driven_glauber_rule(double coupling_left, double coupling_right,
                                   double h) {
  return detail::make_ising_rule([=](int l, int, int r) {
    const double x = coupling_left * l + coupling_right * r + h;
    return std::exp(x) / (2.0 * std::cosh(x));
  });
}

// Noisy majority vote over (l, c, r).
inline PcaRule majority_rule(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5))
    throw std::invalid_argument("majority_rule: epsilon must be in (0, 0.5)");
  return detail::make_ising_rule([=](int l, int c, int r) {
    return (l + c + r) > 0 ? 1.0 - epsilon : epsilon;
  });
}

// --------------------------------------------------------------------------
// Simulation

// Parallel update: frame n sampled site-independently given frame n-1.
// Deterministic given the stream: one uniform draw per site per step.
inline Trajectory simulate(const PcaRule& rule, int ring_length, int n_frames,
                           const SpinConfig& init, RngStream& rng) {
  if (ring_length < 3)
    throw std::invalid_argument("pca::simulate: ring length must be >= 3");
  if (n_frames < 2)
    throw std::invalid_argument("pca::simulate: need at least 2 frames");
  if (init.size() != ring_length || init.alphabet_size != rule.alphabet_size)
    throw std::invalid_argument("pca::simulate: init does not match rule/ring");

  Trajectory t(ring_length, n_frames, rule.alphabet_size);
  t.set_frame(0, init);
  const int q = rule.alphabet_size;
  for (int n = 1; n < n_frames; ++n) {
    for (int i = 0; i < ring_length; ++i) {
      const int l = t.sym((i + ring_length - 1) % ring_length, n - 1);
      const int c = t.sym(i, n - 1);
      const int r = t.sym((i + 1) % ring_length, n - 1);
      const double u = rng.uniform01();
      double acc = 0.0;
      int a = q - 1;
      for (int k = 0; k < q; ++k) {
        acc += rule.prob(l, c, r, k);
        if (u < acc) {
          a = k;
          break;
        }
      }
      t.sym(i, n) = std::int8_t(a);
    }
  }
  return t;
}

// --------------------------------------------------------------------------
// Currents

struct CurrentField {
  int ring_length = 0;
  int n_steps = 0;  // = n_frames - 1; step n in [1, n_frames-1]
  std::vector<double> values;

  double at(int site, int step) const {  // step is 1-based
    return values[std::size_t(step - 1) * std::size_t(ring_length) +
                  std::size_t(site)];
  }
  double& at(int site, int step) {
    return values[std::size_t(step - 1) * std::size_t(ring_length) +
                  std::size_t(site)];
  }
};

namespace detail {
// ln p_i(target at layer `cond` -> value) with neighborhood taken from the
// conditioning layer.
inline double log_step_prob(const PcaRule& rule, const Trajectory& t, int site,
                            int cond_frame, std::int8_t value) {
  const int L = t.ring_length;
  const int l = t.sym((site + L - 1) % L, cond_frame);
  const int c = t.sym(site, cond_frame);
  const int r = t.sym((site + 1) % L, cond_frame);
  return rule.logp(l, c, r, value);
}
}  // namespace detail

// J_{i,n} = ln p_i(s(i,n) | s(.,n-1)) - ln p_i(s(i,n-1) | s(.,n)).
// The backward term conditions on the later layer with the same spatial
// neighborhood convention, taking the defining formula literally.
inline CurrentField current_field(const PcaRule& rule, const Trajectory& t) {
  if (t.n_frames < 2)
    throw std::invalid_argument("current_field: need at least 2 frames");
  if (t.alphabet_size != rule.alphabet_size)
    throw std::invalid_argument("current_field: alphabet mismatch");
  CurrentField cf;
  cf.ring_length = t.ring_length;
  cf.n_steps = t.n_frames - 1;
  cf.values.resize(std::size_t(cf.n_steps) * std::size_t(cf.ring_length));
  for (int n = 1; n < t.n_frames; ++n)
    for (int i = 0; i < t.ring_length; ++i)
      cf.at(i, n) = detail::log_step_prob(rule, t, i, n - 1, t.sym(i, n)) -
                    detail::log_step_prob(rule, t, i, n, t.sym(i, n - 1));
  return cf;
}

inline double mean_current(const CurrentField& cf) {
  double s = 0.0;
  for (double v : cf.values) s += v;
  return s / double(cf.values.size());
}

// --------------------------------------------------------------------------
// Window sums

struct WindowSamples {
  SpaceTimeWindow window;
  std::vector<double> sums;
  int n_blocks = 0;
};

namespace detail {
// Sites covered by |i| <= half_extent on the signed ring coordinate
// (site 0 is the window center); covers the whole ring once wide enough.
inline std::vector<int> window_sites(int ring_length, int half_extent) {
  std::vector<int> sites;
  if (2 * half_extent + 1 >= ring_length) {
    for (int i = 0; i < ring_length; ++i) sites.push_back(i);
    return sites;
  }
  for (int i = -half_extent; i <= half_extent; ++i)
    sites.push_back((i % ring_length + ring_length) % ring_length);
  return sites;
}

inline WindowSamples block_sums(const CurrentField& cf,
                                const SpaceTimeWindow& window,
                                const std::vector<int>& sites) {
  const int block_frames = 2 * window.half_height_n + 1;
  const int n_frames = cf.n_steps + 1;
  if (block_frames > n_frames)
    throw std::invalid_argument("window_sums: window taller than trajectory");
  WindowSamples ws;
  ws.window = window;
  ws.n_blocks = n_frames / block_frames;
  ws.sums.reserve(std::size_t(ws.n_blocks));
  for (int b = 0; b < ws.n_blocks; ++b) {
    const int first_frame = b * block_frames;
    double sum = 0.0;
    // Interior transitions of the block: steps first+1 .. first+2N-1,
    // i.e. |n| <= N-1 relative to the block center.
    for (int step = first_frame + 1; step <= first_frame + block_frames - 2;
         ++step)
      for (int site : sites) sum += cf.at(site, step);
    ws.sums.push_back(sum);
  }
  return ws;
}
}  // namespace detail

// Non-overlapping blocks of 2N+1 frames; within each block sums J over the
// sites |i| <= L-1 and the interior transitions.
inline WindowSamples window_sums(const CurrentField& cf,
                                 const SpaceTimeWindow& window) {
  window.validate();
  return detail::block_sums(
      cf, window, detail::window_sites(cf.ring_length, window.half_width_l - 1));
}

// Same blocking with the spatial sum over the whole ring (no spatial
// boundary); this is the estimator matched by exact_scgf_ring.
inline WindowSamples ring_window_sums(const CurrentField& cf, int half_height_n) {
  SpaceTimeWindow window(cf.ring_length, half_height_n);
  std::vector<int> sites;
  for (int i = 0; i < cf.ring_length; ++i) sites.push_back(i);
  return detail::block_sums(cf, window, sites);
}

// Empirical finite-window SCGF e_{L,N}(lambda) from block sums, normalized
// per unit time (block height 2N+1), with jackknife errors.
inline ScgfCurve empirical_scgf(const WindowSamples& samples,
                                const std::vector<double>& lambdas) {
  return empirical_scgf_from_sums(samples.sums, lambdas,
                                  double(2 * samples.window.half_height_n + 1),
                                  "pca");
}

// --------------------------------------------------------------------------
// Exact tilted transfer operator on the full ring

// -ln of the spectral radius (per unit time) of
//   T_lambda(s'|s) = prod_i p(s'_i|s)^(1-lambda) * p(s_i|s')^lambda
// over all |S|^L ring configurations. Satisfies output(lambda) =
// output(1-lambda) exactly (transpose spectrum). States spaces larger than
// dense_limit are handled matrix-free (slower, same arithmetic).
inline double exact_scgf_ring(const PcaRule& rule, int ring_length,
                              double lambda, int dense_limit = 2048) {
  if (ring_length < 3)
    throw std::invalid_argument("exact_scgf_ring: ring length must be >= 3");
  const int q = rule.alphabet_size;
  double dim_check = 1.0;
  for (int i = 0; i < ring_length; ++i) dim_check *= q;
  if (dim_check > 65536.0)
    throw capacity_error("exact_scgf_ring: |S|^L = " +
                         std::to_string(dim_check) + " exceeds the 2^16 cap");
  const int dim = int(dim_check);

  std::vector<std::int8_t> sa(std::size_t(ring_length), 0);
  std::vector<std::int8_t> sb(std::size_t(ring_length), 0);
  auto decode = [&](int code, std::vector<std::int8_t>& out) {
    for (int i = 0; i < ring_length; ++i) {
      out[std::size_t(i)] = std::int8_t(code % q);
      code /= q;
    }
  };
  auto log_entry = [&](const std::vector<std::int8_t>& to,
                       const std::vector<std::int8_t>& from) {
    double acc = 0.0;
    for (int i = 0; i < ring_length; ++i) {
      const int il = (i + ring_length - 1) % ring_length;
      const int ir = (i + 1) % ring_length;
      acc += (1.0 - lambda) * rule.logp(from[std::size_t(il)],
                                        from[std::size_t(i)],
                                        from[std::size_t(ir)],
                                        to[std::size_t(i)]) +
             lambda * rule.logp(to[std::size_t(il)], to[std::size_t(i)],
                                to[std::size_t(ir)], from[std::size_t(i)]);
    }
    return acc;
  };

  PowerResult pr;
  if (dim <= dense_limit) {
    Matrix t(dim, dim);
    for (int a = 0; a < dim; ++a) {
      decode(a, sa);
      for (int b = 0; b < dim; ++b) {
        decode(b, sb);
        t(a, b) = std::exp(log_entry(sa, sb));
      }
    }
    pr = power_iteration(t);
  } else {
    pr = power_iteration(
        [&](const std::vector<double>& x) {
          std::vector<double> y(std::size_t(dim), 0.0);
          std::vector<std::int8_t> to(std::size_t(ring_length), 0);
          std::vector<std::int8_t> from(std::size_t(ring_length), 0);
          for (int a = 0; a < dim; ++a) {
            decode(a, to);
            double acc = 0.0;
            for (int b = 0; b < dim; ++b) {
              decode(b, from);
              acc += std::exp(log_entry(to, from)) * x[std::size_t(b)];
            }
            y[std::size_t(a)] = acc;
          }
          return y;
        },
        dim);
  }
  return -std::log(pr.value);
}

// --------------------------------------------------------------------------
// Boundary defect G_{L,N} = R_{L,N} - sum of interior currents

namespace detail {
// Relative space-time energy R = H(pi sigma) - H(sigma) for the time
// reversal restricted to `flip_sites` x [center_time-N, center_time+N],
// summed over exactly the lattice terms whose conditional probability can
// change, minus the interior current sum over `sum_sites`.
inline double window_defect(const PcaRule& rule, const Trajectory& t,
                            const std::vector<int>& flip_sites,
                            const std::vector<int>& affected_sites,
                            const std::vector<int>& sum_sites, int center_time,
                            int half_height_n) {
  const int N = half_height_n;
  if (center_time - N - 1 < 0 || center_time + N + 1 > t.n_frames - 1)
    throw std::invalid_argument(
        "boundary_defect: window (plus one-layer margin) exceeds trajectory");

  std::vector<char> in_flip(std::size_t(t.ring_length), 0);
  for (int s : flip_sites) in_flip[std::size_t(s)] = 1;
  auto flipped_sym = [&](int site, int frame) -> std::int8_t {
    if (in_flip[std::size_t(site)] && std::abs(frame - center_time) <= N)
      return t.sym(site, 2 * center_time - frame);
    return t.sym(site, frame);
  };
  auto log_prob_flipped = [&](int site, int frame) {
    const int L = t.ring_length;
    const int l = flipped_sym((site + L - 1) % L, frame - 1);
    const int c = flipped_sym(site, frame - 1);
    const int r = flipped_sym((site + 1) % L, frame - 1);
    return rule.logp(l, c, r, flipped_sym(site, frame));
  };

  double relative_energy = 0.0;
  for (int n = center_time - N; n <= center_time + N + 1; ++n)
    for (int site : affected_sites)
      relative_energy +=
          detail::log_step_prob(rule, t, site, n - 1, t.sym(site, n)) -
          log_prob_flipped(site, n);

  double interior = 0.0;
  for (int n = center_time - N + 1; n <= center_time + N - 1; ++n)
    for (int site : sum_sites)
      interior += detail::log_step_prob(rule, t, site, n - 1, t.sym(site, n)) -
                  detail::log_step_prob(rule, t, site, n, t.sym(site, n - 1));

  return relative_energy - interior;
}
}  // namespace detail

// Defect for a window strictly interior to the ring (the flip arc plus its
// one-site halo must not wrap). Bounded by c (2N+1) + c' (2L+1) with the
// constants of defect_bound().
inline double boundary_defect(const PcaRule& rule, const Trajectory& t,
                              const SpaceTimeWindow& window, int center_site,
                              int center_time) {
  window.validate();
  const int Lw = window.half_width_l;
  if (2 * Lw + 3 > t.ring_length)
    throw std::invalid_argument(
        "boundary_defect: window touches the ring seam; use "
        "boundary_defect_full_ring for a wrapped window");
  const int L = t.ring_length;
  auto wrap = [L](int i) { return (i % L + L) % L; };
  std::vector<int> flip_sites, affected_sites, sum_sites;
  for (int d = -Lw; d <= Lw; ++d) flip_sites.push_back(wrap(center_site + d));
  for (int d = -Lw - 1; d <= Lw + 1; ++d)
    affected_sites.push_back(wrap(center_site + d));
  for (int d = -(Lw - 1); d <= Lw - 1; ++d)
    sum_sites.push_back(wrap(center_site + d));
  return detail::window_defect(rule, t, flip_sites, affected_sites, sum_sites,
                               center_time, window.half_height_n);
}

// Defect for the periodic full-ring window: no spatial boundary, so only
// the two temporal boundary layers contribute; |defect| <= c' * ring_length.
inline double boundary_defect_full_ring(const PcaRule& rule,
                                        const Trajectory& t, int half_height_n,
                                        int center_time) {
  std::vector<int> all_sites;
  for (int i = 0; i < t.ring_length; ++i) all_sites.push_back(i);
  return detail::window_defect(rule, t, all_sites, all_sites, all_sites,
                               center_time, half_height_n);
}

// Analytic bound on |G_{L,N}| from the rule's log-probability range: at most
// four non-telescoping spatial columns of 2N+2 terms (each a difference of
// two log-probabilities) plus three leftover temporal terms per interior
// column.
inline double defect_bound(const PcaRule& rule, const SpaceTimeWindow& window) {
  const double m = rule.max_abs_log();
  return 12.0 * m * double(2 * window.half_height_n + 1) +
         6.0 * m * double(2 * window.half_width_l + 1);
}

inline double defect_bound_full_ring(const PcaRule& rule, int ring_length) {
  return 6.0 * rule.max_abs_log() * double(ring_length);
}

// --------------------------------------------------------------------------
// Sampling pipeline

// Simulates from a uniform random configuration, discards 10 blocks of
// burn-in, and returns full-ring block sums for n_blocks blocks.
inline WindowSamples collect_ring_samples(const PcaRule& rule, int ring_length,
                                          int half_height_n, int n_blocks,
                                          RngStream& rng) {
  const int block_frames = 2 * half_height_n + 1;
  const int burn_frames = 10 * block_frames;
  const int total = burn_frames + n_blocks * block_frames;
  const SpinConfig init =
      SpinConfig::random(rule.alphabet_size, ring_length, rng);
  const Trajectory full = simulate(rule, ring_length, total, init, rng);
  Trajectory kept(ring_length, n_blocks * block_frames, rule.alphabet_size);
  std::copy(full.data.begin() + std::size_t(burn_frames) * std::size_t(ring_length),
            full.data.end(), kept.data.begin());
  return ring_window_sums(current_field(rule, kept), half_height_n);
}

struct RingSampleStats {
  WindowSamples samples;
  double current_sum = 0.0;    // sum of J over every post-burn-in transition
  double current_terms = 0.0;  // number of summed entries
};

// Streaming equivalent of collect_ring_samples: only two frames are kept in
// memory, so block counts are limited by time, not space. Draw-for-draw
// identical to simulating the full trajectory in one piece.
inline RingSampleStats stream_ring_samples(const PcaRule& rule, int ring_length,
                                           int half_height_n,
                                           long long n_blocks, RngStream& rng) {
  if (ring_length < 3)
    throw std::invalid_argument("stream_ring_samples: ring length must be >= 3");
  const long long block_frames = 2ll * half_height_n + 1;
  const long long burn_frames = 10 * block_frames;
  const long long total = burn_frames + n_blocks * block_frames;
  const int q = rule.alphabet_size;

  std::vector<std::int8_t> prev(std::size_t(ring_length), 0);
  std::vector<std::int8_t> next(std::size_t(ring_length), 0);
  {
    const SpinConfig init = SpinConfig::random(q, ring_length, rng);
    std::copy(init.symbols.begin(), init.symbols.end(), prev.begin());
  }

  RingSampleStats out;
  out.samples.window = SpaceTimeWindow(ring_length, half_height_n);
  out.samples.sums.reserve(std::size_t(n_blocks));
  double block_sum = 0.0;

  std::vector<int> left(std::size_t(ring_length), 0);
  std::vector<int> right(std::size_t(ring_length), 0);
  for (int i = 0; i < ring_length; ++i) {
    left[std::size_t(i)] = (i + ring_length - 1) % ring_length;
    right[std::size_t(i)] = (i + 1) % ring_length;
  }
  const bool ising = q == 2;

  for (long long frame = 1; frame < total; ++frame) {
    if (ising) {
      for (int i = 0; i < ring_length; ++i) {
        const std::size_t code =
            std::size_t(4 * prev[std::size_t(left[std::size_t(i)])] +
                        2 * prev[std::size_t(i)] +
                        prev[std::size_t(right[std::size_t(i)])]);
        next[std::size_t(i)] =
            rng.uniform01() < rule.probs[2 * code] ? 0 : 1;
      }
    } else {
      for (int i = 0; i < ring_length; ++i) {
        const int l = prev[std::size_t(left[std::size_t(i)])];
        const int c = prev[std::size_t(i)];
        const int r = prev[std::size_t(right[std::size_t(i)])];
        const double u = rng.uniform01();
        double acc = 0.0;
        int a = q - 1;
        for (int k = 0; k < q; ++k) {
          acc += rule.prob(l, c, r, k);
          if (u < acc) {
            a = k;
            break;
          }
        }
        next[std::size_t(i)] = std::int8_t(a);
      }
    }
    if (frame >= burn_frames + 1) {
      double step_current = 0.0;
      for (int i = 0; i < ring_length; ++i) {
        const std::size_t row_p =
            rule.row(prev[std::size_t(left[std::size_t(i)])],
                     prev[std::size_t(i)],
                     prev[std::size_t(right[std::size_t(i)])]);
        const std::size_t row_n =
            rule.row(next[std::size_t(left[std::size_t(i)])],
                     next[std::size_t(i)],
                     next[std::size_t(right[std::size_t(i)])]);
        step_current +=
            rule.log_probs[row_p + std::size_t(next[std::size_t(i)])] -
            rule.log_probs[row_n + std::size_t(prev[std::size_t(i)])];
      }
      out.current_sum += step_current;
      out.current_terms += double(ring_length);
      const long long phase = (frame - burn_frames) % block_frames;
      if (phase >= 1 && phase <= block_frames - 2) block_sum += step_current;
      if (phase == block_frames - 1) {
        out.samples.sums.push_back(block_sum);
        block_sum = 0.0;
      }
    }
    std::swap(prev, next);
  }
  out.samples.n_blocks = int(out.samples.sums.size());
  return out;
}

// --------------------------------------------------------------------------
// Rule files: {"alphabet_size": q, "table": {"lcr": [probs...], ...}} with
// one digit-string key per neighborhood.

inline std::string neighborhood_key(int l, int c, int r) {
  return std::to_string(l) + std::to_string(c) + std::to_string(r);
}

inline nlohmann::json rule_to_json(const PcaRule& rule) {
  nlohmann::json table = nlohmann::json::object();
  const int q = rule.alphabet_size;
  for (int l = 0; l < q; ++l)
    for (int c = 0; c < q; ++c)
      for (int r = 0; r < q; ++r) {
        std::vector<double> ps;
        for (int a = 0; a < q; ++a) ps.push_back(rule.prob(l, c, r, a));
        table[neighborhood_key(l, c, r)] = ps;
      }
  return nlohmann::json{{"alphabet_size", rule.alphabet_size},
                        {"table", table}};
}

inline PcaRule rule_from_json(const nlohmann::json& j) {
  if (!j.contains("alphabet_size") || !j.contains("table"))
    throw std::invalid_argument("rule file: need keys alphabet_size and table");
  const int q = j.at("alphabet_size").get<int>();
  if (q < 2 || q > 9)
    throw std::invalid_argument("rule file: alphabet_size must be in [2, 9]");
  const auto& table = j.at("table");
  if (int(table.size()) != q * q * q)
    throw std::invalid_argument(
        "rule file: table must have exactly |S|^3 = " +
        std::to_string(q * q * q) + " neighborhoods, got " +
        std::to_string(table.size()));
  std::vector<double> flat(std::size_t(q) * q * q * q);
  for (int l = 0; l < q; ++l)
    for (int c = 0; c < q; ++c)
      for (int r = 0; r < q; ++r) {
        const std::string key = neighborhood_key(l, c, r);
        if (!table.contains(key))
          throw std::invalid_argument("rule file: missing neighborhood " + key);
        const auto ps = table.at(key).get<std::vector<double>>();
        if (int(ps.size()) != q)
          throw std::invalid_argument("rule file: neighborhood " + key +
                                      " needs " + std::to_string(q) +
                                      " probabilities");
        for (int a = 0; a < q; ++a)
          flat[(((std::size_t(l) * q + c) * q + r) * q) + std::size_t(a)] =
              ps[std::size_t(a)];
      }
  return PcaRule(q, std::move(flat));
}

inline PcaRule load_rule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw integrity_error("load_rule: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return rule_from_json(j);
}

inline void save_rule(const std::string& path, const PcaRule& rule) {
  std::ofstream out(path);
  if (!out) throw integrity_error("save_rule: cannot open " + path);
  out << rule_to_json(rule).dump(2) << "\n";
}

}  // namespace fluct::pca
