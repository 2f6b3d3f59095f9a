#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "fluct/gibbs1d.hpp"
#include "fluct/ldp.hpp"
#include "fluct/markov.hpp"

using namespace fluct;
using namespace fluct::ldp;

TEST_CASE("symmetry report") {
  SECTION("exact markov curves pass at the tight tolerance") {
    const auto chain = markov::make_cycle(3, 0.7, 0.2);
    const auto curve = markov::scgf_curve(chain, symmetric_grid(0.5, 1.5, 0.1));
    const auto rep = symmetry_report(curve, 0.5);
    CHECK(rep.pass);
    CHECK(rep.max_abs_defect <= 1e-10);
  }
  SECTION("manifestly symmetric synthetic curve") {
    const auto grid = symmetric_grid(0.5, 1.0, 0.05);
    std::vector<double> vals;
    for (double l : grid) vals.push_back(l * (1.0 - l));
    const auto rep = symmetry_report(exact_curve(grid, vals, "syn"), 0.5);
    CHECK(rep.pass);
    CHECK(rep.max_abs_defect <= 1e-15);
  }
  SECTION("asymmetric curve fails with the algebraic defect") {
    const auto grid = symmetric_grid(0.5, 1.0, 0.25);
    std::vector<double> vals;
    for (double l : grid) vals.push_back(l * l);
    const auto rep = symmetry_report(exact_curve(grid, vals, "syn"), 0.5);
    CHECK_FALSE(rep.pass);
    // defect at lambda is lambda^2 - (1-lambda)^2 = 2 lambda - 1
    for (std::size_t k = 0; k < rep.grid.size(); ++k)
      CHECK_THAT(rep.defect[k],
                 Catch::Matchers::WithinAbs(2.0 * rep.grid[k] - 1.0, 1e-12));
  }
  SECTION("unpaired grids are rejected") {
    const auto curve = exact_curve({0.0, 0.3, 1.0}, {0.0, 0.1, 0.0}, "syn");
    CHECK_THROWS_AS(symmetry_report(curve, 0.5), std::invalid_argument);
  }
}

TEST_CASE("rate symmetry") {
  SECTION("legendre pair of a centered curve passes at scale 1") {
    gibbs1d::IsingSpec spec{1.0, 0.3, 0.5};
    const auto curve =
        gibbs1d::tilted_pressure_curve(spec, symmetric_grid(0.5, 2.0, 0.002));
    const auto rf = legendre_transform(curve, default_w_grid(curve, 151));
    const auto rep = rate_symmetry(rf, 1.0);
    CHECK(rep.pass);
    // the w = 0 pair has no linear term to cancel; its residual is exactly 0
    for (std::size_t k = 0; k < rep.ws.size(); ++k)
      if (rep.ws[k] == 0.0) CHECK(rep.residual[k] == 0.0);
  }
  SECTION("asymmetric curve fails") {
    const auto grid = symmetric_grid(0.0, 2.0, 0.01);
    std::vector<double> vals;
    for (double l : grid) vals.push_back(0.9 * l - 0.8 * l * l);
    const auto curve = exact_curve(grid, vals, "syn");
    std::vector<double> ws;
    for (double w = -0.5; w <= 0.5 + 1e-12; w += 0.05) ws.push_back(w);
    const auto rf = legendre_transform(curve, ws);
    CHECK_FALSE(rate_symmetry(rf, 1.0).pass);
  }
  SECTION("asymmetric w grids are rejected") {
    RateFunction rf;
    rf.ws = {-0.2, 0.0, 0.3};
    rf.values = {0.1, 0.0, 0.1};
    rf.boundary_dominated = {false, false, false};
    CHECK_THROWS_AS(rate_symmetry(rf, 1.0), std::invalid_argument);
  }
}

TEST_CASE("histogram ratio") {
  RngStream rng(21, 0);
  SECTION("symmetric samples fit slope zero") {
    std::vector<double> w;
    for (int k = 0; k < 60000; ++k) w.push_back(1.3 * rng.normal());
    const auto hr = histogram_ratio(w, 15);
    CHECK(std::fabs(hr.fit.slope) <= 3.0 * hr.fit.slope_std_error);
  }
  SECTION("gaussian samples fit slope 2m/v") {
    const double m = 0.6, sd = 1.1;
    std::vector<double> w;
    for (int k = 0; k < 200000; ++k) w.push_back(m + sd * rng.normal());
    const auto hr = histogram_ratio(w, 25);
    const double expected = 2.0 * m / (sd * sd);
    CHECK(std::fabs(hr.fit.slope - expected) <=
          3.0 * hr.fit.slope_std_error + 0.02 * expected);
  }
  SECTION("starved bins raise statistical insufficiency") {
    std::vector<double> w = {1.0, 1.1, 0.9, 1.2, -1.0, 0.95, 1.05, 1.0};
    CHECK_THROWS_AS(histogram_ratio(w, 9), insufficient_statistics_error);
    CHECK_THROWS_AS(histogram_ratio(std::vector<double>(50, 0.0), 9),
                    insufficient_statistics_error);
  }
  SECTION("parameter validation") {
    CHECK_THROWS_AS(histogram_ratio({1.0, -1.0}, 4), std::invalid_argument);
    CHECK_THROWS_AS(histogram_ratio({}, 9), std::invalid_argument);
  }
}

TEST_CASE("histogram slope and the legendre route agree on the GC scale") {
  // Same sample set, two routes to the symmetry scale: the fitted slope of
  // ln P(w)/P(-w), and the scale that minimizes the rate-function symmetry
  // residual of the empirical SCGF's Legendre transform.
  const auto cycle = markov::make_cycle(3, 0.7, 0.2);
  const int block_len = 10, blocks = 40000;
  RngStream rng(23, 0);
  const auto js = markov::sample_current(cycle, block_len * blocks, rng);
  std::vector<double> sums(blocks, 0.0);
  for (int b = 0; b < blocks; ++b)
    for (int k = 0; k < block_len; ++k)
      sums[std::size_t(b)] += js[std::size_t(b * block_len + k)];

  const auto hr = histogram_ratio(sums, 21);

  const auto curve = empirical_scgf_from_sums(
      sums, symmetric_grid(0.5, 0.5, 0.05), double(block_len), "markov");
  std::vector<double> ws;
  for (double w = -1.0; w <= 1.0 + 1e-12; w += 0.1) ws.push_back(w);
  const auto rf = legendre_transform(curve, ws);
  double best_scale = 0.0, best_residual = 1e300;
  for (double scale = 0.0; scale <= 2.0 + 1e-12; scale += 0.01) {
    double worst = 0.0;
    for (std::size_t k = 0; k < rf.size(); ++k) {
      const std::size_t m = rf.size() - 1 - k;
      if (rf.boundary_dominated[k] || rf.boundary_dominated[m]) continue;
      worst = std::max(worst, std::fabs(rf.values[m] - rf.values[k] +
                                        scale * rf.ws[m]));
    }
    if (worst < best_residual) {
      best_residual = worst;
      best_scale = scale;
    }
  }
  // block sums are per-step means times block_len; the GC scale for the
  // un-normalized sums is 1
  CHECK(std::fabs(hr.fit.slope - best_scale) <=
        3.0 * hr.fit.slope_std_error + 0.1);
  CHECK(std::fabs(best_scale - 1.0) <= 0.15);

  SECTION("the weighted fit variant is flagged and consistent") {
    const auto wfit = histogram_ratio(sums, 21, 20, true);
    CHECK(wfit.weighted);
    CHECK(std::fabs(wfit.fit.slope - hr.fit.slope) <=
          3.0 * (wfit.fit.slope_std_error + hr.fit.slope_std_error));
  }
}

TEST_CASE("green-kubo response comparator") {
  SECTION("product-measure family is exact") {
    const double beta = 1.0;
    ResponseFamily family;
    family.beta = beta;
    family.mean_current_at_field = [beta](double e) {
      return gibbs1d::magnetization({beta, 0.0, 0.0}, e);
    };
    family.correlation_term = [](long long x) { return x == 0 ? 1.0 : 0.0; };
    const auto out = green_kubo_response(family, 1e-4);
    CHECK_THAT(out.response, Catch::Matchers::WithinAbs(beta, 1e-6));
    CHECK_THAT(out.correlation_sum, Catch::Matchers::WithinAbs(beta, 1e-12));
    CHECK(out.consistent);
    CHECK(std::fabs(out.ratio - 1.0) <= 1e-6);
  }
  SECTION("coupled family needs the geometric tail") {
    const double beta = 1.0, coupling = 0.3;
    const double t = std::tanh(beta * coupling);
    ResponseFamily family;
    family.beta = beta;
    family.mean_current_at_field = [=](double e) {
      return gibbs1d::magnetization({beta, coupling, 0.0}, e);
    };
    family.correlation_term = [=](long long x) {
      return std::pow(t, double(x));
    };
    const auto tight = green_kubo_response(family, 1e-4, 1e-12);
    const double expected = beta * (1.0 + t) / (1.0 - t);
    CHECK_THAT(tight.response, Catch::Matchers::WithinAbs(expected, 1e-6));
    CHECK_THAT(tight.correlation_sum, Catch::Matchers::WithinAbs(expected, 1e-9));
    CHECK(tight.consistent);

    // default 1e-3 truncation is looser but still flagged consistent
    const auto loose = green_kubo_response(family, 1e-4);
    CHECK(loose.consistent);
    CHECK(loose.terms_used < tight.terms_used);
  }
  SECTION("non-decaying tails raise truncation errors") {
    ResponseFamily family;
    family.beta = 1.0;
    family.mean_current_at_field = [](double e) { return e; };
    family.correlation_term = [](long long) { return 1.0; };
    CHECK_THROWS_AS(green_kubo_response(family, 1e-4, 1e-6, 100),
                    truncation_error);
  }
}

TEST_CASE("estimators are overflow-free and permutation invariant") {
  RngStream rng(22, 0);
  std::vector<double> sums;
  for (int k = 0; k < 500; ++k) sums.push_back(600.0 + 200.0 * rng.normal());
  SECTION("log-sum-exp absorbs |lambda W| up to 700") {
    const auto pt = scgf_point(sums, 1.0, 10.0);  // exponents ~ -700
    CHECK(std::isfinite(pt.value));
    CHECK(std::isfinite(pt.std_error));
    const auto pt2 = scgf_point(sums, -1.0, 10.0);  // exponents ~ +700
    CHECK(std::isfinite(pt2.value));
  }
  SECTION("sample order does not change the estimate") {
    const auto base = scgf_point(sums, 0.01, 10.0);
    std::vector<double> shuffled = sums;
    for (std::size_t k = shuffled.size(); k > 1; --k)
      std::swap(shuffled[k - 1], shuffled[rng.below(k)]);
    const auto perm = scgf_point(shuffled, 0.01, 10.0);
    CHECK(perm.value == base.value);
    CHECK(perm.std_error == base.std_error);
    CHECK(perm.ess == base.ess);

    const auto m1 = mean_std_error(sums);
    const auto m2 = mean_std_error(shuffled);
    CHECK(m1.mean == m2.mean);
    CHECK(m1.std_error == m2.std_error);
  }
}
