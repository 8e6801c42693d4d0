#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "hjlab/csv.hpp"
#include "hjlab/errors.hpp"
#include "hjlab/experiment.hpp"

using namespace hjlab;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("hjlab_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const std::filesystem::path& p) { return json::parse(slurp(p)); }

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(json{{"experiment", "direct-sim"},
                                               {"eps", {0.02}},
                                               {"grid", {{"nodes", 512}}},
                                               {"tolerances", {{"drift", 1e-4}}}});
  CHECK(c.experiment == "direct-sim");
  CHECK(c.eps == std::vector<double>{0.02});
  CHECK(c.grid.nodes == 512);
  CHECK(c.grid.half_width == 2.0);
  CHECK(c.tolerance("drift", 1.0) == 1e-4);
  CHECK(c.tolerance("other", 1.0) == 1.0);

  CHECK_THROWS_AS(parse_config(json{{"experiment", "direct-sim"}, {"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"eps", {0.1}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"experiment", "x"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"experiment", "direct-sim"}, {"eps", "a"}}), ConfigError);
  CHECK(parse_config(json::object(), std::string("esd")).experiment == "esd");
}

TEST_CASE("config round trip") {
  for (const auto& name : experiment_names()) {
    const ExperimentConfig c = default_config(name);
    CHECK_NOTHROW(validate(c));
    const ExperimentConfig d = parse_config(to_json(c));
    CHECK(to_json(d) == to_json(c));
  }
}

TEST_CASE("config validation") {
  ExperimentConfig c = default_config("direct-sim");
  c.eps.clear();
  CHECK_THROWS_WITH_AS(validate(c), "eps list must be nonempty", ConfigError);
  c = default_config("direct-sim");
  c.eps = {0.01, -0.02};
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config("direct-sim");
  c.tolerances["drift"] = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config("direct-sim");
  c.preset = "nope";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = default_config("direct-sim");
  c.datum.center = Trait(5.0);
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("empty eps list exits with code 2") {
  ExperimentConfig c = default_config("cell-orbit");
  c.eps.clear();
  c.out = scratch("empty_eps");
  const ExperimentOutcome o = run_experiment(c);
  CHECK(o.exit_code == 2);
  CHECK(o.error == "eps list must be nonempty");
}

TEST_CASE("solver failure exits with code 3 and leaves a failed manifest") {
  ExperimentConfig c = default_config("cell-orbit");
  c.orbit.max_iterations = 2;
  c.out = scratch("solver_failure");
  const ExperimentOutcome o = run_experiment(c);
  CHECK(o.exit_code == 3);
  const json m = read_json(c.out / "manifest.json");
  CHECK(m["status"] == "failed");
  CHECK(m["error"]["kind"] == "solver");
  CHECK(m["error"].contains("last_residual"));
}

TEST_CASE("cell-orbit run writes manifest, summary and artifacts") {
  ExperimentConfig c = default_config("cell-orbit");
  c.out = scratch("cell_orbit");
  const ExperimentOutcome o = run_experiment(c);
  REQUIRE(o.exit_code == 0);
  CHECK(o.all_passed());
  const json m = read_json(c.out / "manifest.json");
  for (const char* k : {"config", "started_at", "finished_at", "status", "checks"})
    CHECK(m.contains(k));
  CHECK(m["status"] == "complete");
  for (const auto& chk : m["checks"])
    for (const char* k : {"name", "pass", "value", "tolerance"}) CHECK(chk.contains(k));
  const json s = read_json(c.out / "summary.json");
  CHECK(s["pass"] == true);
  CHECK(s["metrics"]["mean"].get<double>() == doctest::Approx(7.5).epsilon(1e-9));
  const CsvTable orbit = read_csv(c.out / "orbit.csv");
  CHECK(orbit.header == std::vector<std::string>{"s", "I"});
  CHECK(std::filesystem::exists(c.out / "validation.json"));
}

TEST_CASE("runs are bit-identical") {
  ExperimentConfig c = parse_config(json{{"experiment", "direct-sim"},
                                         {"T", 0.2},
                                         {"eps", {0.04}},
                                         {"grid", {{"nodes", 256}}}});
  c.out = scratch("det_a");
  REQUIRE(run_experiment(c).exit_code == 0);
  const auto a = slurp(c.out / "history.csv");
  c.out = scratch("det_b");
  REQUIRE(run_experiment(c).exit_code == 0);
  CHECK(a == slurp(c.out / "history.csv"));
  CHECK_FALSE(a.empty());
}

TEST_CASE("effective-surface sampling is seeded") {
  ExperimentConfig c = default_config("effective-surface");
  c.surface_nodes = 9;
  c.out = scratch("surface");
  const ExperimentOutcome o = run_experiment(c);
  REQUIRE(o.exit_code == 0);
  CHECK(o.all_passed());
  CHECK(o.metrics["anchors"] == 200);
}

TEST_CASE("compare") {
  CsvTable direct{{"t", "I_eps", "xbar0"}, {}};
  CsvTable limit{{"t", "xbar0", "I_bar"}, {}};
  for (int k = 0; k <= 400; ++k) {
    const double t = 0.005 * k;
    direct.rows.push_back({t, 2.0 + 0.1 * std::sin(6.283185307179586 * t / 0.01), 1.0 - 0.1 * t});
    limit.rows.push_back({t, 1.0 - 0.1 * t + 0.01, 2.0});
  }
  SUBCASE("self comparison is zero") {
    const ComparisonReport r = compare(direct, direct, 0.01, 0.5, 0.1);
    CHECK(r.trait_sup_distance == 0.0);
    CHECK(r.average_deviation == 0.0);
    CHECK(r.orbit_residual == 0.0);
    CHECK(r.samples == 401);
  }
  SUBCASE("against a limit trajectory") {
    const ComparisonReport r = compare(direct, limit, 0.01, 0.5, 0.1);
    CHECK(r.trait_sup_distance == doctest::Approx(0.01));
    CHECK(r.average_deviation < 1e-3);
  }
  SUBCASE("mismatches") {
    CsvTable two{{"t", "xbar0", "xbar1", "I_bar"}, {{0.0, 0.0, 0.0, 1.0}, {1.0, 0.0, 0.0, 1.0}}};
    CHECK_THROWS_AS(compare(direct, two, 0.01, 0.5, 0.1), ConfigError);
    CsvTable late{{"t", "xbar0", "I_bar"}, {{5.0, 0.0, 1.0}, {6.0, 0.0, 1.0}}};
    CHECK_THROWS_AS(compare(direct, late, 0.01, 0.5, 0.1), ConfigError);
  }
}
