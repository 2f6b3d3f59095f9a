#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "fluct/cli.hpp"

using namespace fluct;
using namespace fluct::cli;
using nlohmann::json;

namespace {

Overrides with_out(const std::string& out) {
  Overrides ov;
  ov.out = out;
  return ov;
}

Overrides with_lambda_step(double step) {
  Overrides ov;
  ov.lambda_step = step;
  return ov;
}

std::filesystem::path fresh_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("fluct_cli_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

json cycle_kernel_config() {
  return json{{"model", "markov"},
              {"seed", 2026},
              {"n_states", 3},
              {"kernel", {0.1, 0.2, 0.7, 0.7, 0.1, 0.2, 0.2, 0.7, 0.1}},
              {"lambda_half_width", 1.5},
              {"lambda_step", 0.05}};
}

json asep_eq_config() {
  return json{{"model", "asep"},   {"seed", 7},         {"ell", 24},
              {"particles", 12},   {"field", 0.0},      {"horizon", 1500.0},
              {"block_time", 10.0}, {"burn_in", 100.0}, {"replicas", 2}};
}

std::string slurp(const std::filesystem::path& p) {
  return read_text_file(p.string());
}

}  // namespace

TEST_CASE("markov cycle run produces the exact report") {
  const auto dir = fresh_dir("markov");
  auto result = run(cycle_kernel_config(), with_out(dir.string()));
  CHECK(result.exit_code == 0);

  const json results = json::parse(slurp(dir / "results.json"));
  bool found = false;
  for (const auto& q : results.at("quantities"))
    if (q.at("quantity") == "entropy_production") {
      found = true;
      CHECK_THAT(q.at("value").get<double>(),
                 Catch::Matchers::WithinAbs(0.5 * std::log(3.5), 1e-12));
      CHECK(q.at("std_error").get<double>() == 0.0);
      CHECK(q.at("method") == "exact");
    }
  CHECK(found);
  for (const auto& v : results.at("verdicts")) CHECK(v.at("pass") == true);
  CHECK(std::filesystem::exists(dir / "scgf.csv"));
  CHECK(std::filesystem::exists(dir / "rate.csv"));
  CHECK(std::filesystem::exists(dir / "report.json"));
}

TEST_CASE("equilibrium asep run passes the zero-current verdict") {
  const auto dir = fresh_dir("asep_eq");
  auto result = run(asep_eq_config(), with_out(dir.string()));
  CHECK(result.exit_code == 0);
  const json report = json::parse(slurp(dir / "report.json"));
  bool saw = false;
  for (const auto& v : report.at("verdicts"))
    if (v.at("name") == "equilibrium_current_zero") {
      saw = true;
      CHECK(v.at("pass") == true);
    }
  CHECK(saw);
  // conductivity row present with a nonzero error bar
  const json results = json::parse(slurp(dir / "results.json"));
  for (const auto& q : results.at("quantities"))
    if (q.at("quantity") == "conductivity")
      CHECK(q.at("std_error").get<double>() > 0.0);
}

TEST_CASE("bad configs exit through invalid_argument with a named key") {
  SECTION("column sums are validated and named") {
    json cfg = cycle_kernel_config();
    cfg["kernel"] = {0.1, 0.2, 0.7, 0.7, 0.1, 0.2, 0.1, 0.7, 0.1};  // col 0: 0.9
    const auto dir = fresh_dir("badkernel");
    try {
      run(cfg, with_out(dir.string()));
      FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("column") != std::string::npos);
    }
  }
  SECTION("unknown keys are rejected by the strict parser") {
    json cfg = cycle_kernel_config();
    cfg["typo_key"] = 1;
    CHECK_THROWS_AS(run(cfg, with_out("/tmp/fluct_never")),
                    std::invalid_argument);
  }
  SECTION("missing required keys are reported") {
    json cfg = cycle_kernel_config();
    cfg.erase("seed");
    try {
      run(cfg, with_out("/tmp/fluct_never"));
      FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("seed") != std::string::npos);
    }
  }
}

TEST_CASE("end-to-end determinism and replay") {
  const auto dir1 = fresh_dir("det1");
  const auto dir2 = fresh_dir("det2");
  json cfg = json{{"model", "asep"},    {"seed", 99},        {"ell", 16},
                  {"particles", 8},     {"field", 0.5},      {"horizon", 2500.0},
                  {"block_time", 12.5}, {"burn_in", 128.0},  {"replicas", 2},
                  {"lambda_half_width", 0.5}, {"lambda_step", 0.1},
                  {"workers", 2}};

  const auto r1 = run(cfg, with_out(dir1.string()));
  const auto r2 = run(cfg, with_out(dir2.string()));
  REQUIRE(std::filesystem::exists(dir1 / "report.json"));

  SECTION("identical runs produce identical artifacts") {
    CHECK(slurp(dir1 / "report.json") == slurp(dir2 / "report.json"));
    CHECK(slurp(dir1 / "scgf.csv") == slurp(dir2 / "scgf.csv"));
    CHECK(slurp(dir1 / "samples_r0.csv") == slurp(dir2 / "samples_r0.csv"));
    CHECK(slurp(dir1 / "samples_r1.csv") == slurp(dir2 / "samples_r1.csv"));
    CHECK(r1.report == r2.report);
  }

  SECTION("replay reproduces the report byte for byte") {
    const std::string before = slurp(dir1 / "report.json");
    const auto rp = replay(dir1.string());
    CHECK(slurp(dir1 / "report.json") == before);
    CHECK(rp.exit_code == r1.exit_code);
  }

  SECTION("replay with a lambda override reuses samples for a new curve") {
    const std::string samples_before = slurp(dir1 / "samples_r0.csv");
    const std::string curve_before = slurp(dir1 / "scgf.csv");
    const json report_before = json::parse(slurp(dir1 / "report.json"));
    replay(dir1.string(), with_lambda_step(0.05));
    CHECK(slurp(dir1 / "samples_r0.csv") == samples_before);
    CHECK(slurp(dir1 / "scgf.csv") != curve_before);
    const json report_after = json::parse(slurp(dir1 / "report.json"));
    CHECK(report_after.at("config_hash") != report_before.at("config_hash"));
  }

  SECTION("truncated samples are an integrity error") {
    const std::string path = (dir1 / "samples_r0.csv").string();
    const std::string full = read_text_file(path);
    write_text_file(path, full.substr(0, full.size() / 2));
    CHECK_THROWS_AS(replay(dir1.string()), integrity_error);
  }

  SECTION("missing samples are an integrity error") {
    std::filesystem::remove(dir1 / "samples_r1.csv");
    CHECK_THROWS_AS(replay(dir1.string()), integrity_error);
  }
}

TEST_CASE("pca run writes samples and oracle verdicts") {
  const auto dir = fresh_dir("pca");
  json cfg = json{{"model", "pca"},
                  {"seed", 31},
                  {"rule", "driven_glauber"},
                  {"K_left", 0.5},
                  {"K_right", 0.0},
                  {"h", 0.2},
                  {"ring", 4},
                  {"window_n", 8},
                  {"n_blocks", 150},
                  {"replicas", 2},
                  {"lambda_half_width", 0.5},
                  {"lambda_step", 0.25},
                  {"save_trajectory", true},
                  {"plots", true}};
  const auto result = run(cfg, with_out(dir.string()));
  const json report = json::parse(slurp(dir / "report.json"));
  bool has_oracle = false;
  for (const auto& v : report.at("verdicts"))
    if (v.at("name") == "oracle_agreement") has_oracle = true;
  CHECK(has_oracle);
  CHECK(std::filesystem::exists(dir / "samples_r0.csv"));
  CHECK(std::filesystem::exists(dir / "samples_r1.csv"));
  CHECK(std::filesystem::exists(dir / "scgf.svg"));
  CHECK(std::filesystem::exists(dir / "quantities.csv"));
  CHECK(result.exit_code != 1);

  // persisted trajectories load back with the configured shape
  const Trajectory t = load_trajectory((dir / "trajectory_r0.bin").string());
  CHECK(t.ring_length == 4);
  CHECK(t.n_frames == 150 * 17);

  // the trajectory route and the streaming route must agree sample for
  // sample: rerun without persistence and compare the samples files
  const auto dir2 = fresh_dir("pca_stream");
  cfg["save_trajectory"] = false;
  run(cfg, with_out(dir2.string()));
  CHECK(slurp(dir / "samples_r0.csv") == slurp(dir2 / "samples_r0.csv"));
  CHECK(slurp(dir / "samples_r1.csv") == slurp(dir2 / "samples_r1.csv"));
}

TEST_CASE("asep run can persist its event log") {
  const auto dir = fresh_dir("asep_events");
  json cfg = asep_eq_config();
  cfg["save_events"] = true;
  cfg["replicas"] = 1;
  run(cfg, with_out(dir.string()));
  REQUIRE(std::filesystem::exists(dir / "events_r0.csv"));
  const CsvTable events = read_csv((dir / "events_r0.csv").string());
  REQUIRE(events.header ==
          std::vector<std::string>({"time", "bond", "direction"}));
  double last = 0.0;
  for (const auto& row : events.rows) {
    CHECK(row[0] >= last);
    last = row[0];
    CHECK((row[2] == 1.0 || row[2] == -1.0));
    CHECK(row[1] >= 0.0);
    CHECK(row[1] < 24.0);
  }
}

TEST_CASE("ising run is exact and self-consistent") {
  const auto dir = fresh_dir("ising");
  json cfg = json{{"model", "ising"}, {"seed", 1},     {"beta", 1.0},
                  {"coupling", 0.3},  {"field", 0.5},  {"lambda_step", 0.01}};
  const auto result = run(cfg, with_out(dir.string()));
  CHECK(result.exit_code == 0);
  const json report = json::parse(slurp(dir / "report.json"));
  for (const auto& v : report.at("verdicts")) CHECK(v.at("pass") == true);

  // replay of a purely exact model rewrites the identical report
  const std::string before = slurp(dir / "report.json");
  replay(dir.string());
  CHECK(slurp(dir / "report.json") == before);
}
