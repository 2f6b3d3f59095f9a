#pragma once

// Shared value types for ring-lattice trajectories, the local involutions
// (time reversal, spin flip), and the deterministic multi-stream RNG.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluct {

// ---------------------------------------------------------------------------
// Errors

class numerical_error : public std::runtime_error {
 public:
  numerical_error(const std::string& what, double residual)
      : std::runtime_error(what), residual(residual) {}
  double residual;
};

class capacity_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class unsupported_alphabet_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class insufficient_statistics_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class truncation_error : public std::runtime_error {
 public:
  truncation_error(const std::string& what, double partial_sum)
      : std::runtime_error(what), partial_sum(partial_sum) {}
  double partial_sum;
};

class integrity_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// RngStream: pcg64 (setseq), one independent stream per (seed, stream_index).
// Draws are generated manually (no std::*_distribution) so that sequences are
// bit-identical across standard libraries.

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_index)
      : seed_(seed), stream_(stream_index) {
    const u128 mult = pcg_multiplier();
    inc_ = ((u128(stream_index) << 1u) | 1u);
    state_ = 0u;
    state_ = state_ * mult + inc_;
    state_ += u128(seed);
    state_ = state_ * mult + inc_;
  }

  std::uint64_t next_u64() {
    const u128 old = state_;
    state_ = old * pcg_multiplier() + inc_;
    const std::uint64_t xored =
        static_cast<std::uint64_t>((old >> 64) ^ old);
    const unsigned rot = static_cast<unsigned>(old >> 122);
    return (xored >> rot) | (xored << ((64u - rot) & 63u));
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (-n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  double exponential(double rate) {
    return -std::log1p(-uniform01()) / rate;
  }

  double normal() {
    // Box-Muller; the second variate is discarded to keep the draw
    // sequence a pure function of the call count.
    double u1 = uniform01();
    while (u1 == 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Categorical draw from an (unnormalized is fine) weight vector.
  int pick(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform01() * total;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
      u -= weights[k];
      if (u < 0.0) return static_cast<int>(k);
    }
    return static_cast<int>(weights.size() - 1);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_index() const { return stream_; }

  // Recorded in run metadata so results name their generator.
  static constexpr const char* generator_name = "pcg64-xsl-rr";

 private:
  using u128 = unsigned __int128;
  static constexpr u128 pcg_multiplier() {
    return (u128(0x2360ed051fc65da4ull) << 64) | 0x4385df649fccf645ull;
  }
  u128 state_ = 0;
  u128 inc_ = 0;
  std::uint64_t seed_;
  std::uint64_t stream_;
};

// ---------------------------------------------------------------------------
// Configurations and trajectories.
//
// Spins are stored as symbol indices 0..q-1 into an alphabet of size q.
// For the Ising alphabet (q = 2) the convention is index 0 <-> -1,
// index 1 <-> +1.

inline int ising_value(std::int8_t symbol) { return 2 * int(symbol) - 1; }
inline std::int8_t ising_symbol(int value) {
  if (value != 1 && value != -1)
    throw std::invalid_argument("ising_symbol: value must be +1 or -1");
  return static_cast<std::int8_t>(value == 1 ? 1 : 0);
}

struct SpinConfig {
  int alphabet_size = 2;
  std::vector<std::int8_t> symbols;

  SpinConfig() = default;
  SpinConfig(int alphabet_size, std::vector<std::int8_t> symbols)
      : alphabet_size(alphabet_size), symbols(std::move(symbols)) {
    validate();
  }

  static SpinConfig ising(const std::vector<int>& values) {
    std::vector<std::int8_t> syms;
    syms.reserve(values.size());
    for (int v : values) syms.push_back(ising_symbol(v));
    return SpinConfig(2, std::move(syms));
  }

  static SpinConfig constant(int alphabet_size, int length, std::int8_t symbol) {
    return SpinConfig(alphabet_size,
                      std::vector<std::int8_t>(length, symbol));
  }

  static SpinConfig random(int alphabet_size, int length, RngStream& rng) {
    std::vector<std::int8_t> syms(length);
    for (auto& s : syms)
      s = static_cast<std::int8_t>(rng.below(std::uint64_t(alphabet_size)));
    return SpinConfig(alphabet_size, std::move(syms));
  }

  int size() const { return static_cast<int>(symbols.size()); }

  // Ising spin value at site i; only meaningful for q = 2.
  int spin(int i) const { return ising_value(symbols[std::size_t(i)]); }

  void validate() const {
    if (symbols.empty())
      throw std::invalid_argument("SpinConfig: ring length must be >= 1");
    if (alphabet_size < 2)
      throw std::invalid_argument("SpinConfig: alphabet size must be >= 2");
    for (std::int8_t s : symbols)
      if (s < 0 || s >= alphabet_size)
        throw std::invalid_argument("SpinConfig: symbol outside alphabet");
  }

  bool operator==(const SpinConfig& other) const {
    return alphabet_size == other.alphabet_size && symbols == other.symbols;
  }
};

// Negates the Ising sign exactly on `region`, identity elsewhere.
inline SpinConfig spin_flip(const SpinConfig& c, const std::vector<int>& region) {
  if (c.alphabet_size != 2)
    throw unsupported_alphabet_error(
        "spin_flip: only the Ising alphabet {+1,-1} supports spin flips");
  SpinConfig out = c;
  for (int site : region) {
    if (site < 0 || site >= c.size())
      throw std::invalid_argument("spin_flip: site outside ring");
    out.symbols[std::size_t(site)] ^= 1;
  }
  return out;
}

// Space-time box with spatial half-width L and temporal half-width N,
// i.e. {(i, n) : |i| <= L, |n| <= N} in d = 1.
struct SpaceTimeWindow {
  int half_width_l = 0;
  int half_height_n = 1;

  SpaceTimeWindow() = default;
  SpaceTimeWindow(int l, int n) : half_width_l(l), half_height_n(n) {
    validate();
  }

  void validate() const {
    if (half_width_l < 0)
      throw std::invalid_argument("SpaceTimeWindow: L must be >= 0");
    if (half_height_n < 1)
      throw std::invalid_argument("SpaceTimeWindow: N must be >= 1");
  }

  long long cardinality() const {
    return (2ll * half_width_l + 1) * (2ll * half_height_n + 1);
  }
};

// Time-ordered stack of ring configurations, stored flat (frame-major).
struct Trajectory {
  int ring_length = 0;
  int n_frames = 0;
  int alphabet_size = 2;
  std::vector<std::int8_t> data;  // data[n * ring_length + i]

  Trajectory() = default;
  Trajectory(int ring_length, int n_frames, int alphabet_size)
      : ring_length(ring_length),
        n_frames(n_frames),
        alphabet_size(alphabet_size),
        data(std::size_t(ring_length) * std::size_t(n_frames), 0) {
    if (ring_length < 1 || n_frames < 1)
      throw std::invalid_argument("Trajectory: need ring_length, n_frames >= 1");
  }

  std::int8_t sym(int site, int frame) const {
    return data[std::size_t(frame) * std::size_t(ring_length) + std::size_t(site)];
  }
  std::int8_t& sym(int site, int frame) {
    return data[std::size_t(frame) * std::size_t(ring_length) + std::size_t(site)];
  }
  int spin(int site, int frame) const { return ising_value(sym(site, frame)); }

  SpinConfig frame(int n) const {
    std::vector<std::int8_t> syms(
        data.begin() + std::size_t(n) * std::size_t(ring_length),
        data.begin() + std::size_t(n + 1) * std::size_t(ring_length));
    return SpinConfig(alphabet_size, std::move(syms));
  }

  void set_frame(int n, const SpinConfig& c) {
    if (c.size() != ring_length || c.alphabet_size != alphabet_size)
      throw std::invalid_argument("Trajectory::set_frame: shape mismatch");
    std::copy(c.symbols.begin(), c.symbols.end(),
              data.begin() + std::size_t(n) * std::size_t(ring_length));
  }

  bool operator==(const Trajectory& other) const {
    return ring_length == other.ring_length && n_frames == other.n_frames &&
           alphabet_size == other.alphabet_size && data == other.data;
  }
};

// Frame k of the output is frame T-1-k of the input; ring contents untouched.
inline Trajectory time_reverse(const Trajectory& t) {
  Trajectory out(t.ring_length, t.n_frames, t.alphabet_size);
  for (int n = 0; n < t.n_frames; ++n)
    for (int i = 0; i < t.ring_length; ++i)
      out.sym(i, n) = t.sym(i, t.n_frames - 1 - n);
  return out;
}

// ---------------------------------------------------------------------------
// Binary frame dump: 16-byte header (magic, version, L, T), then row-major
// spins, one byte per site.

inline constexpr std::uint32_t trajectory_magic = 0x4a525446u;  // "FTRJ"
inline constexpr std::uint32_t trajectory_version = 1u;

inline void save_trajectory(const std::string& path, const Trajectory& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw integrity_error("save_trajectory: cannot open " + path);
  const std::uint32_t header[4] = {trajectory_magic, trajectory_version,
                                   std::uint32_t(t.ring_length),
                                   std::uint32_t(t.n_frames)};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(t.data.data()),
            std::streamsize(t.data.size()));
  if (!out) throw integrity_error("save_trajectory: write failed for " + path);
}

inline Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw integrity_error("load_trajectory: cannot open " + path);
  std::uint32_t header[4];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || header[0] != trajectory_magic)
    throw integrity_error("load_trajectory: bad magic in " + path);
  if (header[1] != trajectory_version)
    throw integrity_error("load_trajectory: unsupported version in " + path);
  const int L = int(header[2]), T = int(header[3]);
  if (L < 1 || T < 1)
    throw integrity_error("load_trajectory: bad dimensions in " + path);
  Trajectory t(L, T, 2);
  in.read(reinterpret_cast<char*>(t.data.data()), std::streamsize(t.data.size()));
  if (!in || in.gcount() != std::streamsize(t.data.size()))
    throw integrity_error("load_trajectory: truncated data in " + path);
  std::int8_t max_sym = 1;
  for (std::int8_t s : t.data) {
    if (s < 0) throw integrity_error("load_trajectory: invalid symbol in " + path);
    if (s > max_sym) max_sym = s;
  }
  t.alphabet_size = int(max_sym) + 1;
  return t;
}

}  // namespace fluct
