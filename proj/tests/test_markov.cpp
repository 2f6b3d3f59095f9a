#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fluct/markov.hpp"

using namespace fluct;
using namespace fluct::markov;

namespace {

// Brute-force stationary oracle: the kernel applied 10^6 times to the
// uniform start, independent of the residual-stopped implementation.
std::vector<double> power_oracle(const MarkovChain& chain, long long folds) {
  std::vector<double> x(std::size_t(chain.n_states),
                        1.0 / double(chain.n_states));
  for (long long k = 0; k < folds; ++k) {
    x = chain.kernel.apply(x);
    double norm = 0.0;
    for (double v : x) norm += v;
    for (double& v : x) v /= norm;
  }
  return x;
}

const double kCycleEp = 0.5 * std::log(3.5);  // (0.7-0.2) ln(0.7/0.2)
const double kCycleScgfHalf = -std::log(0.1 + 2.0 * std::sqrt(0.14));

}  // namespace

TEST_CASE("stationary distribution: closed forms and brute-force oracle") {
  SECTION("symmetric two-state chain is uniform") {
    Matrix k(2, 2);
    k(0, 0) = 0.7;
    k(1, 0) = 0.3;
    k(0, 1) = 0.3;
    k(1, 1) = 0.7;
    const auto rho = stationary(MarkovChain(2, std::move(k))).probs;
    CHECK_THAT(rho[0], Catch::Matchers::WithinAbs(0.5, 1e-12));
    CHECK_THAT(rho[1], Catch::Matchers::WithinAbs(0.5, 1e-12));
  }
  SECTION("doubly stochastic cycle is uniform") {
    const auto rho = stationary(make_cycle(3, 0.7, 0.2)).probs;
    for (double r : rho) CHECK_THAT(r, Catch::Matchers::WithinAbs(1.0 / 3, 1e-12));
  }
  SECTION("random 4-state kernel matches the power oracle") {
    RngStream rng(31, 0);
    const MarkovChain chain = random_chain(4, rng);
    const auto rho = stationary(chain).probs;
    const auto oracle = power_oracle(chain, 1000000);
    for (int s = 0; s < 4; ++s)
      CHECK_THAT(rho[std::size_t(s)],
                 Catch::Matchers::WithinAbs(oracle[std::size_t(s)], 1e-8));
  }
  SECTION("fixed-point residual meets the contract") {
    RngStream rng(32, 0);
    const MarkovChain chain = random_chain(6, rng);
    const auto sd = stationary(chain);
    const auto image = chain.kernel.apply(sd.probs);
    for (int s = 0; s < 6; ++s)
      CHECK(std::fabs(image[std::size_t(s)] - sd.probs[std::size_t(s)]) <= 1e-10);
  }
}

TEST_CASE("reversed chain") {
  RngStream rng(41, 0);
  SECTION("detailed balance gives q = p") {
    const MarkovChain chain = random_reversible_chain(5, rng);
    const MarkovChain rev = reverse_chain(chain);
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b)
        CHECK_THAT(rev.p(a, b), Catch::Matchers::WithinAbs(chain.p(a, b), 1e-12));
  }
  SECTION("uniform stationary measure transposes the kernel") {
    const MarkovChain chain = make_cycle(3, 0.7, 0.2);
    const MarkovChain rev = reverse_chain(chain);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        CHECK_THAT(rev.p(a, b), Catch::Matchers::WithinAbs(chain.p(b, a), 1e-12));
  }
  SECTION("reversal is an involution and preserves rho") {
    const MarkovChain chain = random_chain(4, rng);
    const MarkovChain twice = reverse_chain(reverse_chain(chain));
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        CHECK_THAT(twice.p(a, b), Catch::Matchers::WithinAbs(chain.p(a, b), 1e-12));
    const auto rho = stationary(chain).probs;
    const auto rho_rev = stationary(reverse_chain(chain)).probs;
    for (int s = 0; s < 4; ++s)
      CHECK_THAT(rho_rev[std::size_t(s)],
                 Catch::Matchers::WithinAbs(rho[std::size_t(s)], 1e-9));
  }
}

TEST_CASE("entropy production") {
  SECTION("two-state chains are reversible") {
    RngStream rng(51, 0);
    for (int rep = 0; rep < 5; ++rep) {
      const MarkovChain chain = random_chain(2, rng);
      CHECK(std::fabs(entropy_production(chain)) <= 1e-12);
      CHECK(is_detailed_balance(chain, 1e-10));
    }
  }
  SECTION("three-state cycle closed form") {
    const MarkovChain chain = make_cycle(3, 0.7, 0.2);
    CHECK_THAT(entropy_production(chain),
               Catch::Matchers::WithinAbs(kCycleEp, 1e-12));
    CHECK_FALSE(is_detailed_balance(chain, 1e-10));
  }
  SECTION("the two defining forms agree") {
    RngStream rng(52, 0);
    for (int n : {3, 5, 8}) {
      const MarkovChain chain = random_chain(n, rng);
      CHECK(std::fabs(entropy_production(chain) -
                      entropy_production_direct(chain)) <= 1e-12);
    }
  }
  SECTION("forward and reversed chains produce equally") {
    RngStream rng(53, 0);
    const MarkovChain chain = random_chain(4, rng);
    CHECK_THAT(entropy_production(reverse_chain(chain)),
               Catch::Matchers::WithinAbs(entropy_production(chain), 1e-10));
  }
  SECTION("nonnegative, zero iff detailed balance") {
    RngStream rng(54, 0);
    for (int rep = 0; rep < 10; ++rep) {
      const MarkovChain chain = random_chain(3 + int(rng.below(4)), rng);
      const double ep = entropy_production(chain);
      CHECK(ep >= 0.0);
      CHECK(is_detailed_balance(chain, 1e-10) == (ep <= 1e-10));
      const MarkovChain rev = random_reversible_chain(3 + int(rng.below(4)), rng);
      CHECK(std::fabs(entropy_production(rev)) <= 1e-12);
      CHECK(is_detailed_balance(rev, 1e-10));
    }
  }
}

TEST_CASE("tilted matrix structure") {
  RngStream rng(61, 0);
  const MarkovChain chain = random_chain(4, rng);
  const double lambda = 0.37;
  const auto t = tilted_matrix(chain, lambda);
  const auto t0 = tilted_matrix(chain, 0.0);
  const auto tc = tilted_matrix(chain, 1.0 - lambda);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      CHECK_THAT(t0.entries(a, b), Catch::Matchers::WithinAbs(chain.p(a, b), 1e-15));
      CHECK_THAT(tc.entries(a, b), Catch::Matchers::WithinAbs(t.entries(b, a), 1e-15));
    }
}

TEST_CASE("exact scgf") {
  const MarkovChain cycle = make_cycle(3, 0.7, 0.2);
  SECTION("zero at the endpoints") {
    CHECK(std::fabs(scgf_exact(cycle, 0.0)) <= 1e-12);
    CHECK(std::fabs(scgf_exact(cycle, 1.0)) <= 1e-12);
  }
  SECTION("cycle at lambda = 1/2: circulant eigenvalue") {
    CHECK_THAT(scgf_exact(cycle, 0.5),
               Catch::Matchers::WithinAbs(kCycleScgfHalf, 1e-12));
  }
  SECTION("lambda <-> 1 - lambda symmetry on random chains") {
    RngStream rng(62, 0);
    for (int rep = 0; rep < 5; ++rep) {
      const MarkovChain chain = random_chain(3 + int(rng.below(6)), rng);
      for (double lambda = -1.0; lambda <= 2.0 + 1e-9; lambda += 0.25)
        CHECK(std::fabs(scgf_exact(chain, lambda) -
                        scgf_exact(chain, 1.0 - lambda)) <= 1e-10);
    }
  }
  SECTION("detailed balance flattens the curve") {
    RngStream rng(63, 0);
    const MarkovChain chain = random_reversible_chain(5, rng);
    for (double lambda = -1.0; lambda <= 2.0 + 1e-9; lambda += 0.25)
      CHECK(std::fabs(scgf_exact(chain, lambda)) <= 1e-10);
  }
  SECTION("slope at zero equals the entropy production") {
    RngStream rng(64, 0);
    const MarkovChain chain = random_chain(4, rng);
    const double h = 1e-5;
    const double slope =
        (scgf_exact(chain, h) - scgf_exact(chain, -h)) / (2.0 * h);
    const double ep = entropy_production(chain);
    CHECK(std::fabs(slope - ep) <= 1e-6 * std::max(std::fabs(ep), 1.0));
  }
  SECTION("curve helper is concave with value 0 at lambda = 0") {
    const auto curve = scgf_curve(cycle, symmetric_grid(0.5, 1.5, 0.05));
    CHECK(std::fabs(curve.value_at(0.0)) <= 1e-12);
    CHECK(concavity_defect(curve) <= 1e-10);
  }
}

TEST_CASE("sampled current") {
  SECTION("detailed balance telescopes to a boundary term") {
    RngStream rng(71, 0);
    const MarkovChain chain = random_reversible_chain(4, rng);
    const auto rho = stationary(chain).probs;
    RngStream sim(72, 0);
    // Replicate the internal trajectory to know the endpoints.
    RngStream sim_copy(72, 0);
    const auto js = sample_current(chain, 2000, sim);
    // Re-draw the same trajectory.
    int state = sim_copy.pick(rho);
    const int first = state;
    std::vector<double> column(4);
    for (int n = 0; n < 2000; ++n) {
      for (int a = 0; a < 4; ++a) column[std::size_t(a)] = chain.p(a, state);
      state = sim_copy.pick(column);
    }
    double total = 0.0;
    for (double j : js) total += j;
    CHECK_THAT(total, Catch::Matchers::WithinAbs(
                          std::log(rho[std::size_t(state)]) -
                              std::log(rho[std::size_t(first)]),
                          1e-9));
  }
  SECTION("cycle mean converges to the entropy production") {
    const MarkovChain chain = make_cycle(3, 0.7, 0.2);
    RngStream rng(73, 0);
    const long long n = 1000000;
    const auto js = sample_current(chain, n, rng);
    // block means absorb the short-range correlation of J along the chain
    const long long block = 200;
    std::vector<double> block_means;
    double acc = 0.0;
    for (long long k = 0; k < n; ++k) {
      acc += js[std::size_t(k)];
      if ((k + 1) % block == 0) {
        block_means.push_back(acc / double(block));
        acc = 0.0;
      }
    }
    const auto me = mean_std_error(block_means);
    CHECK(std::fabs(me.mean - kCycleEp) <= 3.0 * me.std_error);
  }
  SECTION("single-step draw is reproducible") {
    const MarkovChain chain = make_cycle(3, 0.7, 0.2);
    RngStream a(99, 7), b(99, 7);
    CHECK(sample_current(chain, 1, a) == sample_current(chain, 1, b));
  }
}

TEST_CASE("chain validation and file interface") {
  SECTION("column sums are checked and named") {
    Matrix k(2, 2);
    k(0, 0) = 0.6;
    k(1, 0) = 0.3;  // column 0 sums to 0.9
    k(0, 1) = 0.5;
    k(1, 1) = 0.5;
    try {
      MarkovChain bad(2, std::move(k));
      FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("column 0") != std::string::npos);
    }
  }
  SECTION("entries must be strictly inside (0,1)") {
    Matrix k(2, 2);
    k(0, 0) = 1.0;
    k(1, 0) = 0.0;
    k(0, 1) = 0.5;
    k(1, 1) = 0.5;
    CHECK_THROWS_AS(MarkovChain(2, std::move(k)), std::invalid_argument);
  }
  SECTION("json round trip") {
    RngStream rng(81, 0);
    const MarkovChain chain = random_chain(3, rng);
    const auto j = chain_to_json(chain);
    const MarkovChain back = chain_from_json(j);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) CHECK(back.p(a, b) == chain.p(a, b));
  }
  SECTION("file load") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "fluct_chain_test.json")
            .string();
    {
      std::ofstream out(path);
      out << chain_to_json(make_cycle(3, 0.7, 0.2)).dump();
    }
    const MarkovChain chain = load_chain(path);
    CHECK(chain.n_states == 3);
    CHECK_THAT(entropy_production(chain),
               Catch::Matchers::WithinAbs(kCycleEp, 1e-12));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_chain(path), integrity_error);
  }
  SECTION("kernel size mismatch is rejected") {
    nlohmann::json j{{"n_states", 3}, {"kernel", {0.5, 0.5, 0.5, 0.5}}};
    CHECK_THROWS_AS(chain_from_json(j), std::invalid_argument);
  }
}
