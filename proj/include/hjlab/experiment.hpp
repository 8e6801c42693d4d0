#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hjlab/cell.hpp"
#include "hjlab/csv.hpp"
#include "hjlab/direct.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/hjlimit.hpp"
#include "hjlab/model.hpp"

namespace hjlab {

struct ExperimentConfig {
  std::string experiment;
  std::string preset = "figure1";
  std::map<std::string, double> params;
  TraitGrid grid;
  InitialDatum datum{Trait(1.0), 1.0, 1.0};
  std::vector<double> eps{0.01};
  double T = 2.0;
  double direct_T = 5.0;  // direct horizon used by the esd cross-check; 0 skips it
  double cadence = 0.0;  // direct record cadence; 0 picks eps / 16
  OrbitOptions orbit;
  std::size_t hj_orbit_samples = 256;
  int hj_order = 2;
  double hj_cadence = 0.01;
  double window = 10.0;  // running-average window in units of eps
  double t0 = 0.5;       // start of comparison windows
  double fft_t0 = 0.5;   // start of the spectrum window, past the initial transient
  std::size_t surface_nodes = 41;
  std::map<std::string, double> tolerances;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 picks hardware concurrency

  double tolerance(const std::string& name, double fallback) const;
};

std::vector<std::string> experiment_names();

/// Defaults for a named experiment.
ExperimentConfig default_config(const std::string& experiment);

/// Overlays a JSON document on the defaults of its experiment. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::optional<std::string>& experiment_override = {});
nlohmann::json to_json(const ExperimentConfig& c);
/// Throws ConfigError when the configuration is inconsistent.
void validate(const ExperimentConfig& c);

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
};

struct ExperimentOutcome {
  int exit_code = 0;
  std::vector<Check> checks;
  nlohmann::json metrics = nlohmann::json::object();
  std::string error;

  bool all_passed() const;
};

/// Writes manifest.json (status "incomplete") before computing, per-experiment artifacts,
/// summary.json, and the final manifest. Exit codes: 0 ran, 2 invalid config, 3 solver or
/// model failure.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

struct ComparisonReport {
  double trait_sup_distance = 0.0;  // sup_t |xbar_direct - xbar_limit|
  double average_deviation = 0.0;   // sup_{t >= t0} |I_w - I_pred| / I_pred
  double orbit_residual = 0.0;      // sup_{t >= t0} |ln I_eps - ln I_orbit| when available
  std::size_t samples = 0;
};

/// Compares a direct history or trace CSV (t, I_eps, xbar*, optional I_orbit) with a limit
/// trajectory CSV (t, xbar*, I_bar) on the overlap of their time ranges. A second direct
/// artifact may stand in for the limit. Throws ConfigError on mismatch.
ComparisonReport compare(const CsvTable& direct, const CsvTable& limit, double eps, double t0,
                         double window);

}  // namespace hjlab
