#pragma once

// Configuration-driven experiment runner binding all modules: parse a run
// manifest, execute replicas on independent RNG streams, persist sufficient
// statistics, and emit symmetry/response reports plus optional SVG plots.
//
// Determinism contract: (config, seed) fixes every persisted byte except
// the timestamp, which lives only in results.json metadata. Analysis never
// consumes the RNG, so `replay` rebuilds report.json byte-identically from
// the persisted samples.

#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluct/asep.hpp"
#include "fluct/core.hpp"
#include "fluct/curves.hpp"
#include "fluct/gibbs1d.hpp"
#include "fluct/io.hpp"
#include "fluct/ldp.hpp"
#include "fluct/markov.hpp"
#include "fluct/pca.hpp"
#include "fluct/svg.hpp"

namespace fluct::cli {

using nlohmann::json;

inline constexpr const char* version = "0.1.0";

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> replicas;
  std::optional<std::string> format;
  std::optional<double> lambda_half_width;
  std::optional<double> lambda_step;
};

// --------------------------------------------------------------------------
// Config parsing (strict: unknown keys are rejected, everything validated
// before any simulation starts).

namespace detail {

inline void require_keys_subset(const json& j,
                                const std::vector<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument("config: unknown key '" + it.key() + "'");
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config: key '" + key + "' has the wrong type");
  }
}

template <typename T>
T get_required(const json& j, const std::string& key) {
  if (!j.contains(key))
    throw std::invalid_argument("config: missing required key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config: key '" + key + "' has the wrong type");
  }
}

}  // namespace detail

struct ExperimentConfig {
  json effective;  // flat config after CLI overrides
  std::string model;
  std::uint64_t seed = 0;
  int replicas = 1;
  int workers = 1;
  std::string output;
  std::string format = "csv";
  bool plots = false;
  double lambda_half_width = 1.5;
  double lambda_step = 0.01;

  double lambda_center() const {
    if (model == "ising") return effective.at("field").get<double>();
    return 0.5;
  }
  std::vector<double> lambda_grid() const {
    return symmetric_grid(lambda_center(), lambda_half_width, lambda_step);
  }
  std::string hash() const {
    json canon = effective;
    canon.erase("output");
    return hex64(fnv1a64(canon.dump()));
  }
};

// Typed model-parameter accessors.

inline markov::MarkovChain markov_chain(const ExperimentConfig& cfg) {
  const json& j = cfg.effective;
  if (j.contains("kernel_file"))
    return markov::load_chain(j.at("kernel_file").get<std::string>());
  if (!j.contains("kernel") || !j.contains("n_states"))
    throw std::invalid_argument(
        "config: markov needs kernel+n_states or kernel_file");
  return markov::chain_from_json(
      json{{"n_states", j.at("n_states")}, {"kernel", j.at("kernel")}});
}

inline gibbs1d::IsingSpec ising_spec(const ExperimentConfig& cfg) {
  gibbs1d::IsingSpec spec;
  spec.beta = detail::get_or<double>(cfg.effective, "beta", 1.0);
  spec.coupling = detail::get_or<double>(cfg.effective, "coupling", 0.0);
  spec.field = detail::get_required<double>(cfg.effective, "field");
  spec.validate();
  return spec;
}

inline pca::PcaRule pca_rule(const ExperimentConfig& cfg) {
  const json& j = cfg.effective;
  if (j.contains("rule_file"))
    return pca::load_rule(j.at("rule_file").get<std::string>());
  const std::string name = detail::get_required<std::string>(j, "rule");
  if (name == "free")
    return pca::free_rule(detail::get_required<double>(j, "p"));
  if (name == "glauber")
    return pca::glauber_rule(detail::get_required<double>(j, "K"),
                             detail::get_required<double>(j, "h"));
  if (name == "driven_glauber")
    return pca::driven_glauber_rule(detail::get_required<double>(j, "K_left"),
                                    detail::get_required<double>(j, "K_right"),
                                    detail::get_required<double>(j, "h"));
  if (name == "majority")
    return pca::majority_rule(detail::get_required<double>(j, "epsilon"));
  throw std::invalid_argument("config: unknown pca rule '" + name + "'");
}

inline asep::AsepParams asep_params(const ExperimentConfig& cfg) {
  const json& j = cfg.effective;
  if (j.contains("p") || j.contains("q"))
    return asep::AsepParams::from_pq(detail::get_required<double>(j, "p"),
                                     detail::get_required<double>(j, "q"));
  return asep::AsepParams::from_field(detail::get_required<double>(j, "field"));
}

inline int asep_particles(const ExperimentConfig& cfg) {
  const json& j = cfg.effective;
  const int ell = detail::get_required<int>(j, "ell");
  if (j.contains("particles")) return detail::get_required<int>(j, "particles");
  const double density = detail::get_required<double>(j, "density");
  if (!(density >= 0.0 && density <= 1.0))
    throw std::invalid_argument("config: density must be in [0, 1]");
  return int(std::lround(density * ell));
}

inline ExperimentConfig parse_config(json j, const Overrides& ov) {
  if (!j.is_object()) throw std::invalid_argument("config: not a JSON object");
  if (ov.seed) j["seed"] = *ov.seed;
  if (ov.out) j["output"] = *ov.out;
  if (ov.replicas) j["replicas"] = *ov.replicas;
  if (ov.format) j["format"] = *ov.format;
  if (ov.lambda_half_width) j["lambda_half_width"] = *ov.lambda_half_width;
  if (ov.lambda_step) j["lambda_step"] = *ov.lambda_step;

  ExperimentConfig cfg;
  cfg.model = detail::get_required<std::string>(j, "model");

  std::vector<std::string> allowed = {
      "model",  "seed",   "replicas",          "workers",
      "output", "format", "lambda_half_width", "lambda_step",
      "plots"};
  if (cfg.model == "markov") {
    for (const char* k : {"kernel", "kernel_file", "n_states", "sample_steps",
                          "sample_block_len", "w_points"})
      allowed.push_back(k);
  } else if (cfg.model == "ising") {
    for (const char* k : {"beta", "coupling", "field", "gk_delta", "w_points"})
      allowed.push_back(k);
  } else if (cfg.model == "pca") {
    for (const char* k :
         {"rule", "rule_file", "p", "K", "h", "K_left", "K_right", "epsilon",
          "ring", "window_n", "n_blocks", "save_trajectory"})
      allowed.push_back(k);
  } else if (cfg.model == "asep") {
    for (const char* k : {"ell", "particles", "density", "field", "p", "q",
                          "horizon", "block_time", "burn_in", "save_events"})
      allowed.push_back(k);
  } else {
    throw std::invalid_argument("config: model must be one of markov, ising, "
                                "pca, asep; got '" + cfg.model + "'");
  }
  detail::require_keys_subset(j, allowed);

  cfg.seed = detail::get_required<std::uint64_t>(j, "seed");
  cfg.replicas = detail::get_or<int>(j, "replicas", 1);
  cfg.workers = detail::get_or<int>(j, "workers", 1);
  cfg.output = detail::get_or<std::string>(j, "output", "");
  cfg.format = detail::get_or<std::string>(j, "format", "csv");
  cfg.plots = detail::get_or<bool>(j, "plots", false);
  if (cfg.replicas < 1) throw std::invalid_argument("config: replicas >= 1");
  if (cfg.workers < 1) throw std::invalid_argument("config: workers >= 1");
  if (cfg.format != "csv" && cfg.format != "json")
    throw std::invalid_argument("config: format must be csv or json");
  if (cfg.output.empty())
    throw std::invalid_argument("config: output directory not set (key "
                                "'output' or --out)");

  double default_half_width = 1.5;
  if (cfg.model == "ising") {
    const double field = detail::get_required<double>(j, "field");
    default_half_width = std::max(field + 1.0, 2.0 - field);
    default_half_width = std::max(default_half_width, 0.5);
  } else if (cfg.model == "pca" || cfg.model == "asep") {
    default_half_width = 0.5;  // empirical estimators live on [0, 1]
  }
  cfg.lambda_half_width =
      detail::get_or<double>(j, "lambda_half_width", default_half_width);
  cfg.lambda_step = detail::get_or<double>(j, "lambda_step", 0.01);
  if (!(cfg.lambda_step > 0.0) || cfg.lambda_half_width < cfg.lambda_step)
    throw std::invalid_argument("config: need 0 < lambda_step <= "
                                "lambda_half_width");

  j["lambda_half_width"] = cfg.lambda_half_width;
  j["lambda_step"] = cfg.lambda_step;
  j["replicas"] = cfg.replicas;
  j["workers"] = cfg.workers;
  j["format"] = cfg.format;
  j["plots"] = cfg.plots;
  cfg.effective = std::move(j);

  // Validate model parameters eagerly so a bad config fails before any
  // simulation starts.
  if (cfg.model == "markov") {
    (void)markov_chain(cfg);
    if (detail::get_or<long long>(cfg.effective, "sample_steps", 0) < 0)
      throw std::invalid_argument("config: sample_steps must be >= 0");
  } else if (cfg.model == "ising") {
    ising_spec(cfg).validate();
  } else if (cfg.model == "pca") {
    (void)pca_rule(cfg);
    const int ring = detail::get_required<int>(cfg.effective, "ring");
    const int window_n = detail::get_required<int>(cfg.effective, "window_n");
    const int n_blocks = detail::get_required<int>(cfg.effective, "n_blocks");
    if (ring < 3) throw std::invalid_argument("config: ring must be >= 3");
    if (window_n < 1) throw std::invalid_argument("config: window_n >= 1");
    if (n_blocks * cfg.replicas < 100)
      throw std::invalid_argument(
          "config: need n_blocks * replicas >= 100 for the SCGF estimator");
  } else if (cfg.model == "asep") {
    (void)asep_params(cfg);
    const int ell = detail::get_required<int>(cfg.effective, "ell");
    if (ell < 2) throw std::invalid_argument("config: ell must be >= 2");
    const int n = asep_particles(cfg);
    if (n < 0 || n > ell)
      throw std::invalid_argument("config: particles must be in [0, ell]");
    const double horizon = detail::get_required<double>(cfg.effective, "horizon");
    const double block_time =
        detail::get_or<double>(cfg.effective, "block_time", horizon / 1000.0);
    if (!(horizon > 0.0) || !(block_time > 0.0))
      throw std::invalid_argument("config: horizon and block_time must be > 0");
  }
  return cfg;
}

// --------------------------------------------------------------------------
// Result assembly

struct QuantityRow {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;
  std::string method;      // "exact" or "simulated"
  std::string provenance;  // which operation produced it
};

struct Verdict {
  std::string name;
  bool pass = false;
  json details;
};

struct RunOutput {
  int exit_code = 0;
  std::string outdir;
  json results;
  json report;
};

namespace detail {

inline json quantities_json(const std::vector<QuantityRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    if (r.method == "simulated" && !(r.std_error > 0.0))
      throw std::logic_error("quantity '" + r.name +
                             "' is simulated but has zero std_error");
    out.push_back(json{{"quantity", r.name},
                       {"value", r.value},
                       {"std_error", r.method == "exact" ? 0.0 : r.std_error},
                       {"method", r.method},
                       {"provenance", r.provenance}});
  }
  return out;
}

inline json verdicts_json(const std::vector<Verdict>& verdicts) {
  json out = json::array();
  for (const auto& v : verdicts)
    out.push_back(json{{"name", v.name}, {"pass", v.pass}, {"details", v.details}});
  return out;
}

inline void write_curve_csv(const std::string& path, const ScgfCurve& c) {
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < c.size(); ++k)
    rows.push_back({c.lambdas[k], c.values[k], c.std_errors[k],
                    std::isfinite(c.ess[k]) ? c.ess[k] : -1.0,
                    c.clipped[k] ? 1.0 : 0.0});
  write_csv(path, {"lambda", "value", "std_error", "ess", "clipped"}, rows);
}

inline void write_rate_csv(const std::string& path, const RateFunction& rf) {
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < rf.size(); ++k)
    rows.push_back(
        {rf.ws[k], rf.values[k], rf.boundary_dominated[k] ? 1.0 : 0.0});
  write_csv(path, {"w", "value", "boundary_dominated"}, rows);
}

inline json symmetry_details(const ldp::SymmetryReport& rep) {
  return json{{"center", rep.center},
              {"max_abs_defect", rep.max_abs_defect},
              {"pairs", rep.grid.size()},
              {"skipped", rep.n_skipped}};
}

inline void plot_curve(const std::string& path, const ScgfCurve& curve,
                       double center, const std::string& title) {
  SvgSeries main{"e(lambda)", curve.lambdas, curve.values, "#1f77b4"};
  SvgSeries mirror{"e(2c - lambda)", {}, {}, "#d62728"};
  for (std::size_t k = 0; k < curve.size(); ++k) {
    mirror.xs.push_back(2.0 * center - curve.lambdas[k]);
    mirror.ys.push_back(curve.values[k]);
  }
  write_curve_svg(path, title, "lambda", {main, mirror});
}

inline void plot_rate(const std::string& path, const RateFunction& rf,
                      double scale, const std::string& title) {
  SvgSeries main{"i(w)", rf.ws, rf.values, "#1f77b4"};
  SvgSeries mirror{"i(-w) - scale*w", {}, {}, "#d62728"};
  for (std::size_t k = 0; k < rf.size(); ++k) {
    const std::size_t m = rf.size() - 1 - k;
    mirror.xs.push_back(rf.ws[k]);
    mirror.ys.push_back(rf.values[m] - scale * rf.ws[k]);
  }
  write_curve_svg(path, title, "w", {main, mirror});
}

// Runs fn(replica_index) for every replica, at most `workers` concurrently,
// and returns results merged in replica-index order regardless of
// completion order.
template <typename T, typename Fn>
std::vector<T> run_replicas(int replicas, int workers, Fn&& fn) {
  std::vector<T> results;
  results.resize(std::size_t(replicas));
  int next = 0;
  while (next < replicas) {
    const int batch = std::min(workers, replicas - next);
    std::vector<std::future<T>> futures;
    futures.reserve(std::size_t(batch));
    for (int k = 0; k < batch; ++k)
      futures.push_back(std::async(std::launch::async, fn, next + k));
    for (int k = 0; k < batch; ++k)
      results[std::size_t(next + k)] = futures[std::size_t(k)].get();
    next += batch;
  }
  return results;
}

}  // namespace detail

// --------------------------------------------------------------------------
// Per-model sufficient statistics (what `run` persists and `replay` reads).

struct ReplicaStats {
  int replica = 0;
  std::vector<double> sums;    // window/block sums (asep: net signed jumps)
  std::vector<double> totals;  // asep only: unsigned jump counts per block
  json scalars;                // model-specific counters
};

struct AnalysisInput {
  ExperimentConfig cfg;
  std::vector<ReplicaStats> replicas;
};

struct AnalysisOutput {
  std::vector<QuantityRow> quantities;
  std::vector<Verdict> verdicts;
  std::optional<ScgfCurve> curve;
  std::optional<RateFunction> rate;
  double rate_scale = 1.0;
};

namespace detail {

inline AnalysisOutput analyze_markov(const AnalysisInput& in) {
  AnalysisOutput out;
  const auto chain = markov_chain(in.cfg);
  const double ep = markov::entropy_production(chain);
  const double ep_direct = markov::entropy_production_direct(chain);
  out.quantities.push_back(
      {"entropy_production", ep, 0.0, "exact", "relative entropy rho(S(p|q))"});

  const auto grid = in.cfg.lambda_grid();
  out.curve = markov::scgf_curve(chain, grid);
  const auto sym = ldp::symmetry_report(*out.curve, 0.5);
  out.verdicts.push_back({"gc_symmetry", sym.pass, symmetry_details(sym)});

  const auto ws = default_w_grid(
      *out.curve, std::size_t(get_or<int>(in.cfg.effective, "w_points", 301)));
  out.rate = legendre_transform(*out.curve, ws);
  out.rate_scale = 1.0;
  const auto rsym = ldp::rate_symmetry(*out.rate, 1.0);
  out.verdicts.push_back(
      {"rate_symmetry", rsym.pass,
       json{{"max_abs_residual", rsym.max_abs_residual},
            {"tolerance", rsym.tolerance}}});

  out.verdicts.push_back(
      {"ep_nonnegative", ep >= -1e-15, json{{"value", ep}}});
  out.verdicts.push_back({"ep_forms_agree", std::fabs(ep - ep_direct) <= 1e-12,
                          json{{"difference", ep - ep_direct}}});

  if (!in.replicas.empty()) {
    std::vector<double> block_means;
    for (const auto& r : in.replicas)
      for (double s : r.sums) block_means.push_back(s);
    const auto me = mean_std_error(block_means);
    out.quantities.push_back({"sampled_current_mean", me.mean, me.std_error,
                              "simulated", "block means of J along one chain"});
  }
  return out;
}

inline AnalysisOutput analyze_ising(const AnalysisInput& in) {
  AnalysisOutput out;
  const auto spec = ising_spec(in.cfg);
  out.quantities.push_back({"pressure", gibbs1d::pressure(spec, spec.field),
                            0.0, "exact", "transfer-matrix log eigenvalue"});
  const double red = gibbs1d::relative_entropy_density(spec);
  out.quantities.push_back({"relative_entropy_density", red, 0.0, "exact",
                            "2 beta E m(beta,K,E)"});

  const auto grid = in.cfg.lambda_grid();
  out.curve = gibbs1d::tilted_pressure_curve(spec, grid);
  const auto sym = ldp::symmetry_report(*out.curve, spec.field);
  out.verdicts.push_back({"gc_symmetry", sym.pass, symmetry_details(sym)});

  const auto ws = default_w_grid(
      *out.curve, std::size_t(get_or<int>(in.cfg.effective, "w_points", 301)));
  out.rate = legendre_transform(*out.curve, ws);
  out.rate_scale = 2.0 * spec.field;
  const auto rsym = ldp::rate_symmetry(*out.rate, out.rate_scale);
  out.verdicts.push_back(
      {"rate_symmetry", rsym.pass,
       json{{"max_abs_residual", rsym.max_abs_residual},
            {"tolerance", rsym.tolerance}}});

  const bool sign_ok = spec.field == 0.0 ? std::fabs(red) <= 1e-15 : red > 0.0;
  out.verdicts.push_back({"ep_density_sign", sign_ok, json{{"value", red}}});

  if (spec.field == 0.0) {
    const double delta = get_or<double>(in.cfg.effective, "gk_delta", 1e-4);
    const auto gk = gibbs1d::green_kubo_check(spec, delta);
    out.quantities.push_back({"green_kubo_response", gk.response, 0.0, "exact",
                              "central difference of m at E=0"});
    out.quantities.push_back({"green_kubo_correlation_sum", gk.correlation_sum,
                              0.0, "exact", "beta sum of two-point functions"});
    out.verdicts.push_back(
        {"green_kubo_consistent",
         std::fabs(gk.response - gk.correlation_sum) <=
             10.0 * delta * delta + 1e-10,
         json{{"response", gk.response},
              {"correlation_sum", gk.correlation_sum}}});
  }
  return out;
}

inline AnalysisOutput analyze_pca(const AnalysisInput& in) {
  AnalysisOutput out;
  const auto rule = pca_rule(in.cfg);
  const int ring = get_required<int>(in.cfg.effective, "ring");
  const int window_n = get_required<int>(in.cfg.effective, "window_n");

  std::vector<double> sums;
  double current_sum = 0.0, current_terms = 0.0;
  for (const auto& r : in.replicas) {
    sums.insert(sums.end(), r.sums.begin(), r.sums.end());
    current_sum += r.scalars.at("current_sum").get<double>();
    current_terms += r.scalars.at("current_terms").get<double>();
  }

  pca::WindowSamples samples;
  samples.window = SpaceTimeWindow(ring, window_n);
  samples.sums = sums;
  samples.n_blocks = int(sums.size());
  out.curve = pca::empirical_scgf(samples, in.cfg.lambda_grid());
  const auto sym = ldp::symmetry_report(*out.curve, 0.5);
  out.verdicts.push_back({"gc_symmetry", sym.pass, symmetry_details(sym)});

  std::vector<double> per_block_mean;
  const double interior = double(2 * window_n - 1) * ring;
  for (double s : sums) per_block_mean.push_back(s / interior);
  const auto me = mean_std_error(per_block_mean);
  out.quantities.push_back({"mean_current", current_sum / current_terms,
                            me.std_error, "simulated",
                            "average J per site per step"});

  double dim = 1.0;
  for (int i = 0; i < ring; ++i) dim *= rule.alphabet_size;
  if (dim <= 2048.0) {
    bool all_ok = true;
    json detail = json::array();
    for (std::size_t k = 0; k < out.curve->size(); ++k) {
      if (out.curve->clipped[k]) continue;
      const double lambda = out.curve->lambdas[k];
      const double exact = pca::exact_scgf_ring(rule, ring, lambda);
      const double diff = out.curve->values[k] - exact;
      const bool ok = std::fabs(diff) <=
                      3.0 * out.curve->std_errors[k] + 1e-9;
      all_ok = all_ok && ok;
      detail.push_back(json{{"lambda", lambda},
                            {"exact", exact},
                            {"empirical", out.curve->values[k]},
                            {"sigma", out.curve->std_errors[k]}});
    }
    out.verdicts.push_back({"oracle_agreement", all_ok, detail});
    out.quantities.push_back(
        {"exact_scgf_mid", pca::exact_scgf_ring(rule, ring, 0.5), 0.0, "exact",
         "tilted ring operator at lambda = 1/2"});
  }
  return out;
}

inline AnalysisOutput analyze_asep(const AnalysisInput& in) {
  AnalysisOutput out;
  const auto params = asep_params(in.cfg);
  const int ell = get_required<int>(in.cfg.effective, "ell");
  const int particles = asep_particles(in.cfg);
  const double horizon = get_required<double>(in.cfg.effective, "horizon");
  const double block_time =
      get_or<double>(in.cfg.effective, "block_time", horizon / 1000.0);

  std::vector<double> net_jumps;  // per block, persisted as raw counts
  double right = 0.0, left = 0.0, total_time = 0.0;
  for (const auto& r : in.replicas) {
    net_jumps.insert(net_jumps.end(), r.sums.begin(), r.sums.end());
    right += r.scalars.at("right_jumps").get<double>();
    left += r.scalars.at("left_jumps").get<double>();
    total_time += r.scalars.at("horizon").get<double>();
  }

  // Per-block current samples give the statistical error of the mean.
  std::vector<double> block_current;
  for (double s : net_jumps)
    block_current.push_back(s / (double(ell) * block_time));
  const auto me = mean_std_error(block_current);
  const double mean_cur = (right - left) / (double(ell) * total_time);
  out.quantities.push_back({"mean_current", mean_cur, me.std_error,
                            "simulated", "(right - left) / (ell horizon)"});
  const double ep_rate = params.field * mean_cur;
  if (params.field != 0.0) {
    out.quantities.push_back({"entropy_production_rate", ep_rate,
                              std::fabs(params.field) * me.std_error,
                              "simulated", "E x mean_current"});
    out.verdicts.push_back(
        {"ep_identity", ep_rate == params.field * mean_cur,
         json{{"ep_rate", ep_rate},
              {"field_times_current", params.field * mean_cur}}});
  }

  if (params.field == 0.0) {
    const double cond = (right + left) / (double(ell) * total_time);
    // Jump events are positively correlated in time (an exchanged pair
    // stays active), so the error comes from block-to-block scatter rather
    // than a Poisson count.
    std::vector<double> block_activity;
    for (const auto& r : in.replicas)
      for (double t : r.totals)
        block_activity.push_back(t / (double(ell) * block_time));
    const double cond_se = block_activity.size() >= 2
                               ? mean_std_error(block_activity).std_error
                               : std::sqrt(std::max(right + left, 1.0)) /
                                     (double(ell) * total_time);
    out.quantities.push_back({"conductivity", cond, cond_se, "simulated",
                              "equilibrium jump-rate estimator"});
    out.verdicts.push_back({"equilibrium_current_zero",
                            std::fabs(mean_cur) <= 3.0 * me.std_error + 1e-12,
                            json{{"mean_current", mean_cur},
                                 {"sigma", me.std_error}}});
  }

  if (params.field != 0.0) {
    out.curve = asep::scgf_from_net_jumps(net_jumps, params, block_time,
                                          in.cfg.lambda_grid());
    const auto sym = ldp::symmetry_report(*out.curve, 0.5);
    out.verdicts.push_back({"gc_symmetry", sym.pass, symmetry_details(sym)});

    if (ell <= 12 && particles > 0 && particles < ell) {
      bool all_ok = true;
      json detail = json::array();
      for (std::size_t k = 0; k < out.curve->size(); ++k) {
        if (out.curve->clipped[k]) continue;
        const double lambda = out.curve->lambdas[k];
        const double exact = asep::exact_scgf(params, ell, particles, lambda);
        const bool ok = std::fabs(out.curve->values[k] - exact) <=
                        3.0 * out.curve->std_errors[k] + 1e-9;
        all_ok = all_ok && ok;
        detail.push_back(json{{"lambda", lambda},
                              {"exact", exact},
                              {"empirical", out.curve->values[k]},
                              {"sigma", out.curve->std_errors[k]}});
      }
      out.verdicts.push_back({"oracle_agreement", all_ok, detail});
    }
  }
  return out;
}

inline AnalysisOutput analyze(const AnalysisInput& in) {
  if (in.cfg.model == "markov") return analyze_markov(in);
  if (in.cfg.model == "ising") return analyze_ising(in);
  if (in.cfg.model == "pca") return analyze_pca(in);
  return analyze_asep(in);
}

// ------------------------------------------------------------------------
// Simulation stage: produce the per-replica sufficient statistics.

inline std::vector<ReplicaStats> simulate_replicas(const ExperimentConfig& cfg,
                                                   const std::string& outdir) {
  std::vector<ReplicaStats> stats;
  if (cfg.model == "markov") {
    const long long steps = get_or<long long>(cfg.effective, "sample_steps", 0);
    if (steps <= 0) return stats;
    const long long block =
        get_or<long long>(cfg.effective, "sample_block_len", 1000);
    const auto chain = markov_chain(cfg);
    stats = run_replicas<ReplicaStats>(
        cfg.replicas, cfg.workers, [&](int k) {
          RngStream rng(cfg.seed, std::uint64_t(k));
          const auto js = markov::sample_current(chain, steps, rng);
          ReplicaStats rs;
          rs.replica = k;
          double acc = 0.0;
          long long count = 0;
          for (double j : js) {
            acc += j;
            if (++count == block) {
              rs.sums.push_back(acc / double(block));
              acc = 0.0;
              count = 0;
            }
          }
          rs.scalars = json{{"steps", steps}};
          return rs;
        });
  } else if (cfg.model == "pca") {
    const auto rule = pca_rule(cfg);
    const int ring = get_required<int>(cfg.effective, "ring");
    const int window_n = get_required<int>(cfg.effective, "window_n");
    const int n_blocks = get_required<int>(cfg.effective, "n_blocks");
    const bool save_traj = get_or<bool>(cfg.effective, "save_trajectory", false);
    stats = run_replicas<ReplicaStats>(
        cfg.replicas, cfg.workers, [&](int k) {
          RngStream rng(cfg.seed, std::uint64_t(k));
          ReplicaStats rs;
          rs.replica = k;
          if (save_traj) {
            // keep the explicit trajectory only when it is being persisted;
            // draw-for-draw identical to the streaming path
            const int block_frames = 2 * window_n + 1;
            const int burn = 10 * block_frames;
            const int total = burn + n_blocks * block_frames;
            const SpinConfig init =
                SpinConfig::random(rule.alphabet_size, ring, rng);
            const Trajectory full = pca::simulate(rule, ring, total, init, rng);
            Trajectory kept(ring, n_blocks * block_frames, rule.alphabet_size);
            std::copy(full.data.begin() + std::size_t(burn) * std::size_t(ring),
                      full.data.end(), kept.data.begin());
            save_trajectory(
                outdir + "/trajectory_r" + std::to_string(k) + ".bin", kept);
            const auto cf = pca::current_field(rule, kept);
            rs.sums = pca::ring_window_sums(cf, window_n).sums;
            double cs = 0.0;
            for (double v : cf.values) cs += v;
            rs.scalars = json{{"current_sum", cs},
                              {"current_terms", double(cf.values.size())}};
            return rs;
          }
          const auto stream =
              pca::stream_ring_samples(rule, ring, window_n, n_blocks, rng);
          rs.sums = stream.samples.sums;
          rs.scalars = json{{"current_sum", stream.current_sum},
                            {"current_terms", stream.current_terms}};
          return rs;
        });
  } else if (cfg.model == "asep") {
    const auto params = asep_params(cfg);
    const int ell = get_required<int>(cfg.effective, "ell");
    const int particles = asep_particles(cfg);
    const double horizon = get_required<double>(cfg.effective, "horizon");
    const double block_time =
        get_or<double>(cfg.effective, "block_time", horizon / 1000.0);
    const double burn_in = get_or<double>(cfg.effective, "burn_in",
                                          10.0 * double(ell) * double(ell));
    const bool save_events = get_or<bool>(cfg.effective, "save_events", false);
    stats = run_replicas<ReplicaStats>(
        cfg.replicas, cfg.workers, [&](int k) {
          RngStream rng(cfg.seed, std::uint64_t(k));
          const auto log =
              asep::simulate(params, ell, particles, horizon, rng, burn_in);
          if (save_events) {
            std::vector<std::vector<double>> rows;
            for (const auto& e : log.events)
              rows.push_back({e.time, double(e.bond), double(e.direction)});
            write_csv(outdir + "/events_r" + std::to_string(k) + ".csv",
                      {"time", "bond", "direction"}, rows);
          }
          const auto counts = asep::count_jumps(log);
          ReplicaStats rs;
          rs.replica = k;
          rs.sums = asep::block_net_jumps(log, block_time);
          rs.totals = asep::block_total_jumps(log, block_time);
          rs.scalars = json{{"right_jumps", double(counts.right)},
                            {"left_jumps", double(counts.left)},
                            {"horizon", log.horizon},
                            {"events", double(log.events.size())}};
          return rs;
        });
  }
  return stats;
}

}  // namespace detail

// --------------------------------------------------------------------------
// run / replay

namespace detail {

inline json persisted_manifest(const std::string& outdir,
                               const std::vector<ReplicaStats>& stats) {
  json manifest = json::object();
  for (const auto& rs : stats) {
    const std::string name = "samples_r" + std::to_string(rs.replica) + ".csv";
    std::vector<std::vector<double>> rows;
    const bool with_totals = !rs.totals.empty();
    for (std::size_t b = 0; b < rs.sums.size(); ++b) {
      if (with_totals)
        rows.push_back({double(b), rs.sums[b], rs.totals[b]});
      else
        rows.push_back({double(b), rs.sums[b]});
    }
    write_csv(outdir + "/" + name,
              with_totals
                  ? std::vector<std::string>{"block", "net_jumps", "total_jumps"}
                  : std::vector<std::string>{"block", "w_sum"},
              rows);
    manifest[name] = json{{"rows", rs.sums.size()}, {"scalars", rs.scalars}};
  }
  return manifest;
}

inline std::vector<ReplicaStats> load_replica_stats(const std::string& outdir,
                                                    const json& manifest) {
  std::vector<ReplicaStats> stats;
  for (auto it = manifest.begin(); it != manifest.end(); ++it) {
    const std::string path = outdir + "/" + it.key();
    if (!std::filesystem::exists(path))
      throw integrity_error("replay: missing persisted file " + it.key());
    const CsvTable table = read_csv(path);
    const std::size_t expected = it.value().at("rows").get<std::size_t>();
    if (table.rows.size() != expected)
      throw integrity_error("replay: " + it.key() + " has " +
                            std::to_string(table.rows.size()) +
                            " rows, expected " + std::to_string(expected));
    ReplicaStats rs;
    rs.replica = int(stats.size());
    const bool with_totals = table.header.size() == 3;
    for (const auto& row : table.rows) {
      rs.sums.push_back(row.at(1));
      if (with_totals) rs.totals.push_back(row.at(2));
    }
    rs.scalars = it.value().at("scalars");
    stats.push_back(std::move(rs));
  }
  return stats;
}

inline RunOutput finish(const ExperimentConfig& cfg, const std::string& outdir,
                        const AnalysisOutput& analysis, json sim_manifest,
                        bool write_results) {
  RunOutput out;
  out.outdir = outdir;

  json verdicts = verdicts_json(analysis.verdicts);
  out.report = json{{"config_hash", cfg.hash()},
                    {"model", cfg.model},
                    {"verdicts", verdicts}};
  write_text_file(outdir + "/report.json", out.report.dump(2) + "\n");

  {
    std::ostringstream q;
    q << "quantity,value,std_error,method,provenance\n";
    for (const auto& row : analysis.quantities)
      q << row.name << "," << format_double(row.value) << ","
        << format_double(row.method == "exact" ? 0.0 : row.std_error) << ","
        << row.method << "," << row.provenance << "\n";
    write_text_file(outdir + "/quantities.csv", q.str());
  }

  if (analysis.curve) {
    write_curve_csv(outdir + "/scgf.csv", *analysis.curve);
    if (cfg.format == "json") {
      json c = json{{"lambdas", analysis.curve->lambdas},
                    {"values", analysis.curve->values},
                    {"std_errors", analysis.curve->std_errors}};
      write_text_file(outdir + "/scgf.json", c.dump(2) + "\n");
    }
    if (cfg.plots)
      plot_curve(outdir + "/scgf.svg", *analysis.curve, cfg.lambda_center(),
                 cfg.model + " tilted cumulant function");
  }
  if (analysis.rate) {
    write_rate_csv(outdir + "/rate.csv", *analysis.rate);
    if (cfg.plots)
      plot_rate(outdir + "/rate.svg", *analysis.rate, analysis.rate_scale,
                cfg.model + " rate function");
  }

  if (write_results) {
    out.results = json{{"config_hash", cfg.hash()},
                       {"seed", cfg.seed},
                       {"model", cfg.model},
                       {"quantities", quantities_json(analysis.quantities)},
                       {"verdicts", verdicts},
                       {"persisted", std::move(sim_manifest)},
                       {"metadata",
                        json{{"generator", RngStream::generator_name},
                             {"version", version},
                             {"replicas", cfg.replicas},
                             {"workers", cfg.workers},
                             {"created_unix", double(std::time(nullptr))}}}};
    write_text_file(outdir + "/results.json", out.results.dump(2) + "\n");
  }

  bool all_pass = true;
  for (const auto& v : analysis.verdicts) all_pass = all_pass && v.pass;
  out.exit_code = all_pass ? 0 : 2;
  return out;
}

}  // namespace detail

inline RunOutput run(const json& config, const Overrides& ov = {}) {
  const ExperimentConfig cfg = parse_config(config, ov);
  const std::string outdir = cfg.output;
  std::filesystem::create_directories(outdir);
  write_text_file(outdir + "/config.json", cfg.effective.dump(2) + "\n");

  const auto stats = detail::simulate_replicas(cfg, outdir);
  json manifest = detail::persisted_manifest(outdir, stats);
  const auto analysis = detail::analyze(AnalysisInput{cfg, stats});
  return detail::finish(cfg, outdir, analysis, std::move(manifest), true);
}

inline RunOutput run_file(const std::string& config_path,
                          const Overrides& ov = {}) {
  std::ifstream in(config_path);
  if (!in)
    throw std::invalid_argument("run: cannot open config " + config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("run: config is not valid JSON: " +
                                std::string(e.what()));
  }
  return run(j, ov);
}

inline RunOutput replay(const std::string& results_dir,
                        const Overrides& ov = {}) {
  const std::string cfg_path = results_dir + "/config.json";
  const std::string results_path = results_dir + "/results.json";
  if (!std::filesystem::exists(cfg_path))
    throw integrity_error("replay: missing " + cfg_path);
  if (!std::filesystem::exists(results_path))
    throw integrity_error("replay: missing " + results_path);

  json stored_cfg = json::parse(read_text_file(cfg_path));
  json stored_results = json::parse(read_text_file(results_path));

  Overrides effective = ov;
  effective.out = results_dir;
  const ExperimentConfig cfg = parse_config(stored_cfg, effective);

  const auto stats =
      detail::load_replica_stats(results_dir, stored_results.at("persisted"));
  const auto analysis = detail::analyze(AnalysisInput{cfg, stats});
  return detail::finish(cfg, results_dir, analysis,
                        stored_results.at("persisted"), false);
}

}  // namespace fluct::cli
