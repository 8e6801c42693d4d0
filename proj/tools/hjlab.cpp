#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hjlab/csv.hpp"
#include "hjlab/errors.hpp"
#include "hjlab/experiment.hpp"
#include "hjlab/model.hpp"

namespace {

std::vector<double> parse_eps_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw hjlab::ConfigError("bad eps value '" + item + "'");
    }
    if (used != item.size()) throw hjlab::ConfigError("bad eps value '" + item + "'");
    out.push_back(v);
  }
  return out;
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw hjlab::ConfigError("cannot read config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw hjlab::ConfigError(path + ": " + e.what());
  }
}

int run_main(const std::string& config_path, const std::string& experiment, const std::string& out,
             const std::optional<std::string>& eps, const std::optional<std::uint64_t>& seed) {
  nlohmann::json j = config_path.empty() ? nlohmann::json::object() : load_json(config_path);
  std::optional<std::string> name;
  if (!experiment.empty()) name = experiment;
  hjlab::ExperimentConfig cfg = hjlab::parse_config(j, name);
  if (!out.empty()) cfg.out = out;
  if (eps) cfg.eps = parse_eps_list(*eps);
  if (seed) cfg.seed = *seed;
  const hjlab::ExperimentOutcome res = hjlab::run_experiment(cfg);
  for (const auto& c : res.checks)
    std::cout << (c.pass ? "pass " : "FAIL ") << c.name << " value=" << c.value
              << " tolerance=" << c.tolerance << '\n';
  if (res.exit_code != 0) std::cerr << "hjlab: " << res.error << '\n';
  else std::cout << "artifacts in " << cfg.out.string() << '\n';
  return res.exit_code;
}

int compare_main(const std::string& direct, const std::string& limit, double eps, double t0,
                 double window, const std::string& out) {
  const auto rep =
      hjlab::compare(hjlab::read_csv(direct), hjlab::read_csv(limit), eps, t0, window * eps);
  const nlohmann::json j = {{"trait_sup_distance", rep.trait_sup_distance},
                            {"average_deviation", rep.average_deviation},
                            {"orbit_residual", rep.orbit_residual},
                            {"samples", rep.samples}};
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream f(out);
    if (!f) throw hjlab::ConfigError("cannot write " + out);
    f << j.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homogenised Hamilton-Jacobi experiments for fluctuating environments"};
  app.require_subcommand(0, 1);

  std::string config_path, experiment, out;
  std::optional<std::string> eps;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--experiment", experiment, "experiment name (overrides the config)");
  app.add_option("--out", out, "output directory");
  app.add_option("--eps", eps, "comma-separated eps list, e.g. 0.04,0.02,0.01");
  app.add_option("--seed", seed, "seed for sampled validation");

  auto* cmp = app.add_subcommand("compare", "compare a direct history with a limit trajectory");
  std::string direct_csv, limit_csv, cmp_out;
  double cmp_eps = 0.01, cmp_t0 = 0.5, cmp_window = 10.0;
  cmp->add_option("--direct", direct_csv, "direct history or trace CSV")->required();
  cmp->add_option("--limit", limit_csv, "limit trajectory CSV")->required();
  cmp->add_option("--eps", cmp_eps, "eps of the direct run");
  cmp->add_option("--t0", cmp_t0, "start of the averaged comparison");
  cmp->add_option("--window", cmp_window, "running-average window in units of eps");
  cmp->add_option("--out", cmp_out, "write the report here instead of stdout");

  auto* presets = app.add_subcommand("list", "list experiments and model presets");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*presets) {
      std::cout << "experiments:";
      for (const auto& n : hjlab::experiment_names()) std::cout << ' ' << n;
      std::cout << "\npresets:";
      for (const auto& n : hjlab::preset_names()) std::cout << ' ' << n;
      std::cout << '\n';
      return 0;
    }
    if (*cmp) return compare_main(direct_csv, limit_csv, cmp_eps, cmp_t0, cmp_window, cmp_out);
    return run_main(config_path, experiment, out, eps, seed);
  } catch (const hjlab::ConfigError& e) {
    std::cerr << "hjlab: " << e.what() << '\n';
    return 2;
  } catch (const hjlab::Error& e) {
    std::cerr << "hjlab: " << e.what() << '\n';
    return 3;
  }
}
