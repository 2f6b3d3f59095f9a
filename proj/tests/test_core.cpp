#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fluct/core.hpp"

using namespace fluct;

namespace {
Trajectory random_trajectory(int L, int T, RngStream& rng, int q = 2) {
  Trajectory t(L, T, q);
  for (auto& s : t.data) s = std::int8_t(rng.below(std::uint64_t(q)));
  return t;
}
}  // namespace

TEST_CASE("time reversal is the frame-order mirror") {
  Trajectory t(3, 3, 2);
  t.set_frame(0, SpinConfig::ising({+1, +1, +1}));  // A
  t.set_frame(1, SpinConfig::ising({-1, +1, -1}));  // B
  t.set_frame(2, SpinConfig::ising({-1, -1, -1}));  // C
  const Trajectory r = time_reverse(t);
  CHECK(r.frame(0) == t.frame(2));
  CHECK(r.frame(1) == t.frame(1));
  CHECK(r.frame(2) == t.frame(0));
}

TEST_CASE("time reversal fixes constant trajectories and is an involution") {
  RngStream rng(11, 0);
  Trajectory constant(5, 4, 2);
  for (auto& s : constant.data) s = 1;
  CHECK(time_reverse(constant) == constant);

  for (int rep = 0; rep < 20; ++rep) {
    const Trajectory t = random_trajectory(4 + int(rng.below(5)),
                                           2 + int(rng.below(7)), rng);
    CHECK(time_reverse(time_reverse(t)) == t);
  }
}

TEST_CASE("spin flip negates on the region and only there") {
  const SpinConfig all_up = SpinConfig::ising({+1, +1, +1, +1});
  const SpinConfig flipped = spin_flip(all_up, {0, 1, 2, 3});
  for (int i = 0; i < 4; ++i) CHECK(flipped.spin(i) == -1);

  RngStream rng(7, 3);
  for (int rep = 0; rep < 20; ++rep) {
    const SpinConfig c = SpinConfig::random(2, 6, rng);
    CHECK(spin_flip(c, {}) == c);
    const std::vector<int> region = {1, 4};
    const SpinConfig f = spin_flip(c, region);
    for (int i = 0; i < 6; ++i) {
      if (i == 1 || i == 4)
        CHECK(f.spin(i) == -c.spin(i));
      else
        CHECK(f.spin(i) == c.spin(i));
    }
    CHECK(spin_flip(f, region) == c);
  }
}

TEST_CASE("spin flip rejects non-Ising alphabets") {
  SpinConfig potts(3, {0, 1, 2, 1});
  CHECK_THROWS_AS(spin_flip(potts, {0}), unsupported_alphabet_error);
}

TEST_CASE("space-time window geometry") {
  const SpaceTimeWindow w(3, 5);
  CHECK(w.cardinality() == 7 * 11);
  CHECK_THROWS_AS(SpaceTimeWindow(-1, 2), std::invalid_argument);
  CHECK_THROWS_AS(SpaceTimeWindow(2, 0), std::invalid_argument);
}

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a(123456789u, 4), b(123456789u, 4), c(123456789u, 5);
  bool all_equal = true;
  bool any_equal_cross = false;
  for (int k = 0; k < 1000; ++k) {
    const auto va = a.next_u64();
    const auto vb = b.next_u64();
    const auto vc = c.next_u64();
    all_equal = all_equal && (va == vb);
    any_equal_cross = any_equal_cross || (va == vc);
  }
  CHECK(all_equal);
  CHECK_FALSE(any_equal_cross);

  RngStream d(9, 0);
  for (int k = 0; k < 10000; ++k) {
    const double u = d.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  for (int k = 0; k < 1000; ++k) REQUIRE(d.below(7) < 7);
}

TEST_CASE("rng categorical pick respects weights") {
  RngStream rng(2024, 1);
  const std::vector<double> w = {0.2, 0.5, 0.3};
  std::vector<int> counts(3, 0);
  const int n = 200000;
  for (int k = 0; k < n; ++k) counts[std::size_t(rng.pick(w))] += 1;
  for (int s = 0; s < 3; ++s) {
    const double p = w[std::size_t(s)];
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::fabs(double(counts[std::size_t(s)]) / n - p) < 4 * sigma);
  }
}

TEST_CASE("trajectory binary dump round-trips") {
  RngStream rng(5, 0);
  const Trajectory t = random_trajectory(6, 9, rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "fluct_traj_test.bin").string();
  save_trajectory(path, t);
  const Trajectory back = load_trajectory(path);
  CHECK(back == t);

  // 16-byte header then one byte per site
  CHECK(std::filesystem::file_size(path) == 16 + 6 * 9);

  SECTION("truncated data is rejected") {
    std::filesystem::resize_file(path, 16 + 10);
    CHECK_THROWS_AS(load_trajectory(path), integrity_error);
  }
  SECTION("bad magic is rejected") {
    std::ofstream out(path, std::ios::binary);
    out << "not a trajectory file";
    out.close();
    CHECK_THROWS_AS(load_trajectory(path), integrity_error);
  }
  std::filesystem::remove(path);
}

TEST_CASE("config and trajectory validation") {
  CHECK_THROWS_AS(SpinConfig(2, {0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(SpinConfig(2, {}), std::invalid_argument);
  CHECK_THROWS_AS(Trajectory(0, 3, 2), std::invalid_argument);
  CHECK_THROWS_AS(ising_symbol(2), std::invalid_argument);
  CHECK(ising_value(ising_symbol(-1)) == -1);
  CHECK(ising_value(ising_symbol(+1)) == +1);
}
