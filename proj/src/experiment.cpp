#include "hjlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <future>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "hjlab/csv.hpp"
#include "hjlab/errors.hpp"
#include "hjlab/esd.hpp"

namespace hjlab {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

const std::vector<std::string> kExperiments{
    "cell-orbit", "effective-surface", "direct-sim", "eps-sweep", "hj-limit", "canonical",
    "counterexample", "esd", "separable", "fluctuation", "figure1"};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json trait_json(const Trait& x) { return std::vector<double>(x.begin(), x.end()); }

Trait trait_from(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || j.size() > 2)
    throw ConfigError(std::string(what) + " must be an array of one or two numbers");
  return j.size() == 1 ? Trait(j[0].get<double>()) : Trait(j[0].get<double>(), j[1].get<double>());
}

std::string eps_tag(double eps) {
  std::ostringstream s;
  s << eps;
  return s.str();
}

double lerp_at(std::span<const double> ts, std::span<const double> vs, double t) {
  if (t <= ts.front()) return vs.front();
  if (t >= ts.back()) return vs.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - ts.begin());
  const double w = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
  return (1.0 - w) * vs[j - 1] + w * vs[j];
}

Trait trait_at(const HjResult& hj, double t) {
  const auto& tr = hj.trajectory;
  std::vector<double> ts;
  ts.reserve(tr.size());
  for (const auto& r : tr) ts.push_back(r.t);
  Trait out = Trait::zeros(hj.grid.dim);
  for (std::size_t d = 0; d < hj.grid.dim; ++d) {
    std::vector<double> vs;
    vs.reserve(tr.size());
    for (const auto& r : tr) vs.push_back(r.xbar[d]);
    out[d] = lerp_at(ts, vs, t);
  }
  return out;
}

// Largest drop of a series below its running maximum.
double max_dip(std::span<const double> v) {
  double top = -std::numeric_limits<double>::infinity(), dip = 0.0;
  for (double x : v) {
    top = std::max(top, x);
    dip = std::max(dip, top - x);
  }
  return dip;
}

// Indices whose centred window of width w lies inside [t_first, t_last].
std::pair<std::size_t, std::size_t> full_window_range(std::span<const double> ts, double w) {
  const double lo = ts.front() + 0.5 * w - 1e-9, hi = ts.back() - 0.5 * w + 1e-9;
  std::size_t a = 0, b = ts.size();
  while (a < ts.size() && ts[a] < lo) ++a;
  while (b > a && ts[b - 1] > hi) --b;
  return {a, b};
}

struct Context {
  const ExperimentConfig& cfg;
  ExperimentOutcome& out;
  std::filesystem::path dir;

  void check(const std::string& name, bool pass, double value, double tol) {
    out.checks.push_back({name, pass, value, tol});
  }
  void check_le(const std::string& name, double value, double tol) {
    check(name, value <= tol, value, tol);
  }
};

ModelPtr build_model(const ExperimentConfig& cfg) {
  return std::make_shared<const GrowthModel>(make_preset(cfg.preset, cfg.params));
}

OrbitOptions hj_orbit_options(const ExperimentConfig& cfg) {
  OrbitOptions o = cfg.orbit;
  o.samples = cfg.hj_orbit_samples;
  o.secant = true;
  return o;
}

void assumptions(Context& cx, const GrowthModel& model) {
  const ValidationReport rep =
      validate_assumptions(model, cx.cfg.datum, model.validation_half_width());
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name}, {"pass", c.passed}, {"margin", c.margin}, {"detail", c.detail}});
  write_json(cx.dir / "validation.json",
             {{"family", std::string(to_string(rep.family))},
              {"checks", checks},
              {"constants", rep.constants},
              {"trait_bound", rep.trait_bound}});
  cx.check("assumptions", rep.all_passed(), static_cast<double>(rep.checks.size()), 0.0);
}

HjResult run_limit(const ExperimentConfig& cfg, const EffectiveFitness& ef, double T) {
  HjOptions o;
  o.T = T;
  o.order = cfg.hj_order;
  o.cadence = cfg.hj_cadence;
  return hj_run(ef, cfg.datum, cfg.grid, o);
}

// --- experiments ---------------------------------------------------------------------------

void cell_orbit(Context& cx) {
  const auto model = build_model(cx.cfg);
  assumptions(cx, *model);
  const PeriodicOrbit o = solve_orbit(*model, cx.cfg.datum.center, cx.cfg.orbit);
  write_orbit_csv(cx.dir / "orbit.csv", o);
  cx.check_le("period_residual", o.residual, cx.cfg.tolerance("period_residual", 1e-10));
  const double lo = *std::min_element(o.values.begin(), o.values.end());
  cx.check("orbit_positive", lo > 0.0 || o.degenerate, lo, 0.0);
  if (model->constants().I_M)
    cx.check_le("orbit_below_I_M", o.max() - *model->constants().I_M, 1e-8);
  cx.out.metrics = {{"mean", o.mean}, {"seed", o.seed}, {"iterations", o.iterations},
                    {"max", o.max()}, {"min", lo}};
}

void effective_surface(Context& cx) {
  const auto model = build_model(cx.cfg);
  assumptions(cx, *model);
  OrbitOptions oo = cx.cfg.orbit;
  oo.secant = true;
  EffectiveFitness ef(model, oo);
  const double hw = model->validation_half_width();
  const std::size_t m = std::max<std::size_t>(cx.cfg.surface_nodes, 3);
  std::vector<Trait> xs, ys;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = -hw + 2.0 * hw * static_cast<double>(i) / static_cast<double>(m - 1);
    if (model->dim() == 1) {
      xs.emplace_back(a);
    } else {
      for (std::size_t j = 0; j < m; ++j)
        xs.emplace_back(a, -hw + 2.0 * hw * static_cast<double>(j) / static_cast<double>(m - 1));
    }
    const Trait y = model->dim() == 1 ? Trait(a) : Trait(a, 0.0);
    if (in_X(*model, y).where == Viability::Inside) ys.push_back(y);
  }
  write_surface_csv(cx.dir / "surface.csv", ef, xs, ys);

  // R(x, x) at random viable traits
  std::mt19937_64 rng(cx.cfg.seed);
  std::uniform_real_distribution<double> unif(-hw, hw);
  double worst = 0.0;
  std::size_t tested = 0, attempts = 0;
  const std::size_t want = static_cast<std::size_t>(cx.cfg.tolerance("random_anchors", 200));
  while (tested < want && attempts < 100 * want) {
    ++attempts;
    const Trait x = model->dim() == 1 ? Trait(unif(rng)) : Trait(unif(rng), unif(rng));
    if (in_X(*model, x).where != Viability::Inside) continue;
    worst = std::max(worst, std::abs(ef.value(x, x)));
    ++tested;
  }
  cx.check_le("self_fitness", worst, cx.cfg.tolerance("self_fitness", 1e-8));
  cx.out.metrics = {{"anchors", tested}, {"solves", ef.solves()}, {"residents", ys.size()}};
}

void direct_sim(Context& cx) {
  const auto model = build_model(cx.cfg);
  assumptions(cx, *model);
  DirectOptions o;
  o.T = cx.cfg.T;
  o.cadence = cx.cfg.cadence;
  o.snapshot_times = {0.0, 0.5 * cx.cfg.T, cx.cfg.T};
  const double eps = cx.cfg.eps.front();
  const SimState st = run(*model, cx.cfg.datum, cx.cfg.grid, eps, o);
  write_history_csv(cx.dir / "history.csv", st);
  write_snapshot_csv(cx.dir / "snapshots.csv", st);
  const auto I = history_column(st, &HistoryRow::I);
  const double lo = *std::min_element(I.begin(), I.end());
  const double hi = *std::max_element(I.begin(), I.end());
  cx.check("resource_positive", lo > 0.0, lo, 0.0);
  if (model->constants().I_M)
    cx.check_le("resource_bound", hi, *model->constants().I_M + cx.cfg.tolerance("resource_C", 10.0) * eps);
  double mu_min = std::numeric_limits<double>::infinity();
  for (const auto& r : st.history) mu_min = std::min(mu_min, model->zero_resource_margin(r.xbar));
  cx.check("xbar_viable", mu_min > 0.0, mu_min, 0.0);
  cx.out.metrics = {{"steps", st.steps}, {"I_T", I.back()}, {"I_min", lo}, {"I_max", hi},
                    {"xbar_T", trait_json(st.history.back().xbar)}};
}

struct SweepEntry {
  double eps = 0.0;
  double r = 0.0;
  double trait_sup = 0.0;
  double avg_dev = 0.0;
  std::size_t steps = 0;
};

// Direct run plus homogenised comparison; writes history and trace CSVs tagged by eps.
SweepEntry direct_vs_limit(const ExperimentConfig& cfg, const ModelPtr& model, const HjResult& hj,
                           double eps, const std::filesystem::path& dir, const std::string& tag,
                           double t_cmp, SimState* keep = nullptr) {
  DirectOptions o;
  o.T = cfg.T;
  o.cadence = cfg.cadence;
  const SimState st = run(*model, cfg.datum, cfg.grid, eps, o);
  EffectiveFitness ef(model, [&] {
    OrbitOptions oo = cfg.orbit;
    oo.secant = true;
    return oo;
  }());
  write_history_csv(dir / ("history" + tag + ".csv"), st);

  const auto ts = history_times(st);
  const auto I = history_column(st, &HistoryRow::I);
  const double w = cfg.window * eps;
  const auto avg = running_average(ts, I, w);
  const auto [a, b] = full_window_range(ts, w);

  SweepEntry e;
  e.eps = eps;
  e.steps = st.steps;
  const std::size_t dim = cfg.grid.dim;
  std::vector<std::string> header{"t", "I_eps", "I_avg", "I_orbit", "I_pred"};
  for (std::size_t d = 0; d < dim; ++d) header.push_back("xbar_eps" + std::to_string(d));
  for (std::size_t d = 0; d < dim; ++d) header.push_back("xbar_hj" + std::to_string(d));
  CsvWriter trace(dir / ("trace" + tag + ".csv"), header);
  std::vector<double> row;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& h = st.history[i];
    const double I_orbit = ef.orbit(h.xbar)->at(h.t / eps);
    const Trait xl = trait_at(hj, h.t);
    const double I_pred = *ef.resident_resource(xl);
    if (h.t >= cfg.t0 - 1e-12) e.r = std::max(e.r, std::abs(std::log(h.I) - std::log(I_orbit)));
    e.trait_sup = std::max(e.trait_sup, distance(h.xbar, xl));
    if (h.t >= t_cmp - 1e-12 && i >= a && i < b)
      e.avg_dev = std::max(e.avg_dev, std::abs(avg[i] - I_pred) / I_pred);
    row.assign({h.t, h.I, avg[i], I_orbit, I_pred});
    for (std::size_t d = 0; d < dim; ++d) row.push_back(h.xbar[d]);
    for (std::size_t d = 0; d < dim; ++d) row.push_back(xl[d]);
    trace.row(std::span<const double>(row));
  }
  if (keep) *keep = st;
  return e;
}

unsigned worker_count(const ExperimentConfig& cfg) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return cfg.threads ? cfg.threads : hw;
}

void eps_sweep(Context& cx) {
  const auto& cfg = cx.cfg;
  const auto model = build_model(cfg);
  assumptions(cx, *model);
  EffectiveFitness hef(model, hj_orbit_options(cfg));
  const HjResult hj = run_limit(cfg, hef, cfg.T);
  write_trajectory_csv(cx.dir / "trajectory.csv", hj);

  std::vector<double> eps = cfg.eps;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  std::vector<SweepEntry> rows(eps.size());
  const unsigned workers = worker_count(cfg);
  for (std::size_t start = 0; start < eps.size(); start += workers) {
    std::vector<std::future<SweepEntry>> jobs;
    for (std::size_t i = start; i < std::min(eps.size(), start + workers); ++i)
      jobs.push_back(std::async(std::launch::async, [&, i] {
        return direct_vs_limit(cfg, model, hj, eps[i], cx.dir, "_eps" + eps_tag(eps[i]), cfg.t0);
      }));
    for (std::size_t i = start; i < start + jobs.size(); ++i) rows[i] = jobs[i - start].get();
  }

  CsvWriter table(cx.dir / "eps_sweep.csv", {"eps", "r", "trait_sup", "avg_dev", "steps"});
  json entries = json::array();
  for (const auto& e : rows) {
    table.row({e.eps, e.r, e.trait_sup, e.avg_dev, static_cast<double>(e.steps)});
    entries.push_back({{"eps", e.eps}, {"r", e.r}, {"trait_sup", e.trait_sup}, {"avg_dev", e.avg_dev}});
  }
  if (rows.size() >= 2) {
    bool r_dec = true, x_dec = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      r_dec = r_dec && rows[i].r < rows[i - 1].r;
      x_dec = x_dec && rows[i].trait_sup < rows[i - 1].trait_sup;
    }
    cx.check("r_strictly_decreasing", r_dec, rows.back().r, rows.front().r);
    const double ratio = rows.back().r / rows.front().r;
    // sqrt(eps) scaling within a factor of two, capped at no growth
    const double sq = std::sqrt(rows.back().eps / rows.front().eps);
    cx.check("r_ratio_sqrt_eps", ratio >= 0.5 * sq && ratio <= std::min(1.0, 2.0 * sq), ratio, sq);
    cx.check("trait_distance_decreasing", x_dec, rows.back().trait_sup, rows.front().trait_sup);
  }
  cx.check_le("trait_distance", rows.back().trait_sup, cfg.tolerance("trait_distance", 0.1));
  cx.out.metrics = {{"sweep", entries}, {"hj_drift", hj.max_drift}};
}

void hj_limit(Context& cx, bool canonical_file) {
  const auto& cfg = cx.cfg;
  const auto model = build_model(cfg);
  assumptions(cx, *model);
  EffectiveFitness ef(model, hj_orbit_options(cfg));
  const HjResult hj = run_limit(cfg, ef, cfg.T);
  write_trajectory_csv(cx.dir / (canonical_file ? "canonical.csv" : "trajectory.csv"), hj);
  const double h = cfg.grid.spacing();
  cx.check_le("constraint_drift", hj.max_drift, cfg.tolerance("drift", 1e-3));
  cx.check_le("tracker_gap", hj.max_tracker_gap, cfg.tolerance("tracker_gap_h", 5.0) * h);
  double mu_min = std::numeric_limits<double>::infinity();
  for (const auto& r : hj.trajectory) mu_min = std::min(mu_min, model->zero_resource_margin(r.xbar));
  cx.check("xbar_viable", mu_min > 0.0, mu_min, 0.0);
  if (canonical_file && cfg.grid.dim == 1) {
    // in one dimension the fittest trait moves monotonically toward the ESD
    std::vector<double> dist;
    for (const auto& r : hj.trajectory) dist.push_back(-std::abs(r.xbar[0]));
    cx.check_le("approach_monotone", max_dip(dist), h);
  }
  cx.out.metrics = {{"steps", hj.steps}, {"xbar_T", trait_json(hj.xbar)},
                    {"max_tracker_gap", hj.max_tracker_gap}, {"drift", hj.max_drift},
                    {"orbit_solves", ef.solves()}};
}

void counterexample(Context& cx) {
  const auto& cfg = cx.cfg;
  HjResult res;
  const double radius = cfg.datum.center.norm();
  const CounterexampleReport rep =
      run_counterexample(rotation_fields(), radius, cfg.grid, cfg.T, cfg.hj_order, &res);
  write_counterexample_json(cx.dir / "counterexample.json", rep);
  write_trajectory_csv(cx.dir / "trajectory.csv", res);
  cx.check_le("sup_error", rep.sup_error, cfg.tolerance("sup_error_h", 5.0) * rep.h);
  cx.check_le("return_distance", rep.return_distance, cfg.tolerance("return_h", 2.0) * rep.h);
  cx.check_le("constraint_drift", rep.drift, cfg.tolerance("drift", 1e-3));

  const auto ef = counterexample_fitness(rotation_fields());
  const EsdResult esd = esd_fixed_point(*ef, cfg.datum.center, cfg.grid);
  cx.check("esd_not_converged", esd.status != EsdStatus::Converged, esd.step_residual, 0.0);
  cx.out.metrics = {{"h", rep.h}, {"sup_error", rep.sup_error}, {"period", rep.period_estimate},
                    {"steps", rep.steps}, {"esd_status", std::string(to_string(esd.status))}};
}

void esd(Context& cx) {
  const auto& cfg = cx.cfg;
  const auto model = build_model(cfg);
  assumptions(cx, *model);
  EffectiveFitness ef(model, cfg.orbit);
  const EsdResult r = esd_fixed_point(ef, cfg.datum.center, cfg.grid);
  write_esd_json(cx.dir / "esd.json", r);
  const double h = cfg.grid.spacing();
  cx.check("esd_converged", r.status == EsdStatus::Converged, r.step_residual, 1e-8);
  cx.check_le("self_fitness", r.self_fitness, 1e-8);
  cx.check_le("max_fitness", r.max_fitness, 1e-6);
  json metrics = {{"xbar_inf", trait_json(r.xbar_inf)}, {"rho_inf", r.rho_inf},
                  {"iterations", r.iterations}};

  if (cfg.T > 0.0) {
    EffectiveFitness hef(model, hj_orbit_options(cfg));
    const HjResult hj = run_limit(cfg, hef, cfg.T);
    write_trajectory_csv(cx.dir / "trajectory.csv", hj);
    cx.check_le("hj_endpoint", distance(hj.xbar, r.xbar_inf), 2.0 * h);
    metrics["hj_xbar_T"] = trait_json(hj.xbar);
  }
  const double dT = cfg.direct_T;
  if (dT > 0.0 && std::isfinite(r.rho_inf)) {
    ExperimentConfig dcfg = cfg;
    dcfg.T = dT;
    DirectOptions o;
    o.T = dT;
    const double eps = cfg.eps.front();
    const SimState st = run(*model, cfg.datum, cfg.grid, eps, o);
    write_history_csv(cx.dir / "history.csv", st);
    const auto ts = history_times(st);
    const auto I = history_column(st, &HistoryRow::I);
    const double w = cfg.window * eps;
    const auto avg = running_average(ts, I, w);
    const auto [a, b] = full_window_range(ts, w);
    const double late = avg[b - 1];
    const double mass = late / model->uptake(st.history[b - 1].xbar);
    cx.check_le("rho_vs_direct", std::abs(mass - r.rho_inf) / r.rho_inf, 0.05);
    metrics["direct_rho_late"] = mass;
  }
  cx.out.metrics = metrics;
}

void separable(Context& cx) {
  const auto& cfg = cx.cfg;
  const auto model = build_model(cfg);
  assumptions(cx, *model);
  const SeparableLimit lim = separable_limit(*model, cfg.grid, cfg.orbit);
  const double eps = cfg.eps.front();
  DirectOptions o;
  o.T = cfg.T;
  o.cadence = cfg.cadence;
  const SimState st = run(*model, cfg.datum, cfg.grid, eps, o);
  write_history_csv(cx.dir / "history.csv", st);
  const auto F = separable_F(st, *model);
  const double h = cfg.grid.spacing();
  cx.check_le("F_monotone", max_dip(F), cfg.tolerance("F_dip_eps", 5.0) * eps);
  cx.check_le("F_limit", std::abs(F.back() - lim.F_star), cfg.tolerance("F_limit_h", 2.0) * h);
  double bmax = lim.F_star;
  cx.check_le("F_bounded", *std::max_element(F.begin(), F.end()) - bmax, 1e-12);
  const json j = {{"x_star", trait_json(lim.x_star)}, {"F_star", lim.F_star},
                  {"rho_star", lim.rho_star}, {"F_T", F.back()},
                  {"F_gap", F.back() - lim.F_star}, {"F_max_dip", max_dip(F)},
                  {"xbar_T", trait_json(st.history.back().xbar)}};
  write_json(cx.dir / "separable.json", j);
  cx.out.metrics = j;
}

void fluctuation(Context& cx) {
  const auto& cfg = cx.cfg;
  const auto model = build_model(cfg);
  assumptions(cx, *model);
  const FluctuationReport r = fluctuation_compare(*model, cfg.grid, cfg.orbit);
  write_fluctuation_json(cx.dir / "fluctuation.json", r);
  cx.check_le("identity_1", r.identity_residuals[0], 1e-8);
  cx.check_le("identity_2", r.identity_residuals[1], 1e-8);
  cx.check("cauchy_schwarz", r.cs_gap >= -1e-10, r.cs_gap, 0.0);
  const double a = cfg.params.count("a") ? cfg.params.at("a") : 0.8;
  if (a != 0.0) {
    cx.check("fluctuation_benefit", r.rho_star > r.rho_av, r.gap, 0.0);
    OrbitOptions fine = cfg.orbit;
    fine.samples *= 2;
    const FluctuationReport r2 = fluctuation_compare(*model, cfg.grid, fine);
    cx.check_le("gap_stable", std::abs(r2.gap - r.gap) / std::abs(r.gap), 5e-4);
  } else {
    cx.check_le("constant_D1_equal", std::abs(r.gap), 1e-6);
  }
  cx.out.metrics = {{"rho_star", r.rho_star}, {"rho_av", r.rho_av}, {"gap", r.gap},
                    {"identity_residuals", r.identity_residuals}};
}

void figure1(Context& cx) {
  const auto& cfg = cx.cfg;
  const auto model = build_model(cfg);
  assumptions(cx, *model);
  EffectiveFitness hef(model, hj_orbit_options(cfg));
  const HjResult hj = run_limit(cfg, hef, cfg.T);
  write_trajectory_csv(cx.dir / "trajectory.csv", hj);

  const double eps = cfg.eps.front();
  SimState st;
  const SweepEntry e = direct_vs_limit(cfg, model, hj, eps, cx.dir, "", cfg.t0, &st);
  const auto ts = history_times(st);
  const auto I = history_column(st, &HistoryRow::I);
  const Spectrum sp = dominant_frequency(ts, I, cfg.fft_t0);
  cx.check("oscillation_peak", std::abs(sp.frequency - 1.0 / eps) <= sp.bin_width * (1.0 + 1e-9),
           sp.frequency, sp.bin_width);
  const double w = cfg.window * eps;
  const auto avg = running_average(ts, I, w);
  const auto [a, b] = full_window_range(ts, w);
  const double dip = max_dip(std::span<const double>(avg).subspan(a, b - a));
  cx.check_le("envelope_monotone", dip, cfg.tolerance("envelope_dip", 1e-3));
  cx.check_le("homogenized_agreement", e.avg_dev, cfg.tolerance("agreement", 0.05));
  cx.out.metrics = {{"frequency", sp.frequency}, {"period_estimate", 1.0 / sp.frequency},
                    {"bin_width", sp.bin_width}, {"envelope_max_dip", dip},
                    {"avg_deviation", e.avg_dev}, {"orbit_residual", e.r},
                    {"trait_sup", e.trait_sup}, {"steps", e.steps}};
}

}  // namespace

// --- configuration -------------------------------------------------------------------------

double ExperimentConfig::tolerance(const std::string& name, double fallback) const {
  const auto it = tolerances.find(name);
  return it == tolerances.end() ? fallback : it->second;
}

bool ExperimentOutcome::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::vector<std::string> experiment_names() { return kExperiments; }

ExperimentConfig default_config(const std::string& name) {
  if (std::find(kExperiments.begin(), kExperiments.end(), name) == kExperiments.end())
    throw ConfigError("unknown experiment '" + name + "'");
  ExperimentConfig c;
  c.experiment = name;
  c.grid = TraitGrid{1, 1024, 2.0};
  if (name == "cell-orbit") {
    c.datum.center = Trait(0.0);
  } else if (name == "eps-sweep") {
    c.eps = {0.04, 0.02, 0.01};
    c.grid = TraitGrid{1, 1536, 3.0};
  } else if (name == "counterexample") {
    c.preset = "none";
    c.grid = TraitGrid{2, 128, 1.5};
    c.datum = InitialDatum{Trait(1.0, 0.0), 1.0, 1.0};
    c.T = 2.0 * std::acos(-1.0);
  } else if (name == "esd") {
    c.T = 20.0;
    c.hj_cadence = 0.05;
  } else if (name == "separable") {
    c.preset = "separable";
    c.T = 5.0;
    c.datum = InitialDatum{Trait(0.0), 1.0, 1.0};
  } else if (name == "fluctuation") {
    c.preset = "fluctuation-example";
  } else if (name == "figure1") {
    c.t0 = 0.2;
  }
  return c;
}

ExperimentConfig parse_config(const json& j, const std::optional<std::string>& override_name) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  static const std::set<std::string> known{"experiment", "model", "grid", "datum", "eps", "T",
                                           "cadence", "orbit", "hj", "window", "t0", "fft_t0",
                                           "surface_nodes", "tolerances", "out", "seed", "threads",
                                           "direct_T"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("unknown configuration key '" + k + "'");

  std::string name = override_name.value_or(j.value("experiment", std::string()));
  if (name.empty()) throw ConfigError("no experiment named (use --experiment or \"experiment\")");
  ExperimentConfig c = default_config(name);
  try {
    if (j.contains("model")) {
      const auto& m = j["model"];
      c.preset = m.value("preset", c.preset);
      if (m.contains("params")) {
        c.params.clear();
        for (const auto& [k, v] : m["params"].items()) c.params[k] = v.get<double>();
      }
    }
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      c.grid.dim = g.value("dim", c.grid.dim);
      c.grid.nodes = g.value("nodes", c.grid.nodes);
      c.grid.half_width = g.value("half_width", c.grid.half_width);
    }
    if (j.contains("datum")) {
      const auto& d = j["datum"];
      if (d.contains("center")) c.datum.center = trait_from(d["center"], "datum.center");
      c.datum.curvature = d.value("curvature", c.datum.curvature);
      c.datum.mass = d.value("mass", c.datum.mass);
    }
    if (j.contains("eps")) c.eps = j["eps"].get<std::vector<double>>();
    c.T = j.value("T", c.T);
    c.cadence = j.value("cadence", c.cadence);
    c.direct_T = j.value("direct_T", c.direct_T);
    if (j.contains("orbit")) {
      const auto& o = j["orbit"];
      c.orbit.samples = o.value("samples", c.orbit.samples);
      c.orbit.damping = o.value("damping", c.orbit.damping);
      c.orbit.max_iterations = o.value("max_iterations", c.orbit.max_iterations);
      c.orbit.tolerance = o.value("tolerance", c.orbit.tolerance);
    }
    if (j.contains("hj")) {
      const auto& h = j["hj"];
      c.hj_orbit_samples = h.value("orbit_samples", c.hj_orbit_samples);
      c.hj_order = h.value("order", c.hj_order);
      c.hj_cadence = h.value("cadence", c.hj_cadence);
    }
    c.window = j.value("window", c.window);
    c.t0 = j.value("t0", c.t0);
    c.fft_t0 = j.value("fft_t0", c.fft_t0);
    c.surface_nodes = j.value("surface_nodes", c.surface_nodes);
    if (j.contains("tolerances"))
      for (const auto& [k, v] : j["tolerances"].items()) c.tolerances[k] = v.get<double>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {{"experiment", c.experiment},
          {"model", {{"preset", c.preset}, {"params", c.params}}},
          {"grid", {{"dim", c.grid.dim}, {"nodes", c.grid.nodes}, {"half_width", c.grid.half_width}}},
          {"datum",
           {{"center", trait_json(c.datum.center)},
            {"curvature", c.datum.curvature},
            {"mass", c.datum.mass}}},
          {"eps", c.eps},
          {"T", c.T},
          {"direct_T", c.direct_T},
          {"cadence", c.cadence},
          {"orbit",
           {{"samples", c.orbit.samples},
            {"damping", c.orbit.damping},
            {"max_iterations", c.orbit.max_iterations},
            {"tolerance", c.orbit.tolerance}}},
          {"hj", {{"orbit_samples", c.hj_orbit_samples}, {"order", c.hj_order}, {"cadence", c.hj_cadence}}},
          {"window", c.window},
          {"t0", c.t0},
          {"fft_t0", c.fft_t0},
          {"surface_nodes", c.surface_nodes},
          {"tolerances", c.tolerances},
          {"out", c.out.string()},
          {"seed", c.seed},
          {"threads", c.threads}};
}

void validate(const ExperimentConfig& c) {
  if (std::find(kExperiments.begin(), kExperiments.end(), c.experiment) == kExperiments.end())
    throw ConfigError("unknown experiment '" + c.experiment + "'");
  if (c.eps.empty()) throw ConfigError("eps list must be nonempty");
  for (double e : c.eps)
    if (!(e > 0.0)) throw ConfigError("eps values must be positive");
  for (const auto& [k, v] : c.tolerances)
    if (!(v > 0.0)) throw ConfigError("tolerance '" + k + "' must be positive");
  if (!(c.T > 0.0)) throw ConfigError("horizon T must be positive");
  if (!(c.window > 0.0)) throw ConfigError("window must be positive");
  if (c.hj_order != 1 && c.hj_order != 2) throw ConfigError("hj.order must be 1 or 2");
  if (c.orbit.samples < 2 || c.orbit.samples % 2 || c.hj_orbit_samples < 2 ||
      c.hj_orbit_samples % 2)
    throw ConfigError("orbit samples must be even and >= 2");
  c.grid.validate();
  if (!c.grid.contains(c.datum.center)) throw ConfigError("datum center lies outside the grid");
  if (c.datum.center.dim() != c.grid.dim)
    throw ConfigError("datum center dimension does not match the grid");
  if (c.experiment != "counterexample") {
    const GrowthModel m = make_preset(c.preset, c.params);
    if (m.dim() != c.grid.dim) throw ConfigError("model dimension does not match the grid");
  }
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  ExperimentOutcome out;
  const auto t_start = std::chrono::steady_clock::now();
  json manifest = {{"config", to_json(cfg)},
                   {"started_at", utc_now()},
                   {"finished_at", nullptr},
                   {"status", "incomplete"},
                   {"checks", json::array()},
                   {"versions", {{"hjlab", kVersion}, {"compiler", __VERSION__}}}};
  try {
    validate(cfg);
    std::filesystem::create_directories(cfg.out);
  } catch (const Error& e) {
    out.exit_code = 2;
    out.error = e.what();
    return out;
  } catch (const std::filesystem::filesystem_error& e) {
    out.exit_code = 2;
    out.error = e.what();
    return out;
  }
  const auto manifest_path = cfg.out / "manifest.json";
  write_json(manifest_path, manifest);

  Context cx{cfg, out, cfg.out};
  json error = nullptr;
  try {
    const std::string& n = cfg.experiment;
    if (n == "cell-orbit") cell_orbit(cx);
    else if (n == "effective-surface") effective_surface(cx);
    else if (n == "direct-sim") direct_sim(cx);
    else if (n == "eps-sweep") eps_sweep(cx);
    else if (n == "hj-limit") hj_limit(cx, false);
    else if (n == "canonical") hj_limit(cx, true);
    else if (n == "counterexample") counterexample(cx);
    else if (n == "esd") esd(cx);
    else if (n == "separable") separable(cx);
    else if (n == "fluctuation") fluctuation(cx);
    else if (n == "figure1") figure1(cx);
  } catch (const ConfigError& e) {
    out.exit_code = 2;
    out.error = e.what();
    error = {{"kind", e.kind()}, {"message", e.what()}};
  } catch (const Error& e) {
    out.exit_code = 3;
    out.error = e.what();
    error = {{"kind", e.kind()}, {"message", e.what()}};
    if (const auto* se = dynamic_cast<const SolverError*>(&e)) error["last_residual"] = se->last_residual();
  }

  json checks = json::array();
  for (const auto& c : out.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"tolerance", c.tolerance}});
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  manifest["finished_at"] = utc_now();
  manifest["status"] = out.exit_code == 0 ? "complete" : "failed";
  manifest["checks"] = checks;
  manifest["wall_time_s"] = wall;
  if (!error.is_null()) manifest["error"] = error;
  write_json(manifest_path, manifest);
  write_json(cfg.out / "summary.json", {{"experiment", cfg.experiment},
                                         {"status", manifest["status"]},
                                         {"pass", out.exit_code == 0 && out.all_passed()},
                                         {"checks", checks},
                                         {"metrics", out.metrics},
                                         {"error", error}});
  return out;
}

// --- comparison ----------------------------------------------------------------------------

ComparisonReport compare(const CsvTable& direct, const CsvTable& limit, double eps, double t0,
                         double window) {
  auto has = [](const CsvTable& t, const std::string& c) {
    return std::find(t.header.begin(), t.header.end(), c) != t.header.end();
  };
  // trait columns: xbar<d> in histories and trajectories, xbar_eps<d> / xbar_hj<d> in traces
  auto prefix = [&](const CsvTable& t, const char* trace_prefix) -> std::string {
    if (has(t, "xbar0")) return "xbar";
    if (has(t, std::string(trace_prefix) + "0")) return trace_prefix;
    return "xbar";
  };
  // a second direct artifact as reference: compare like with like
  const bool ref_direct = has(limit, "I_eps");
  const std::string pd = prefix(direct, "xbar_eps");
  const std::string pl = prefix(limit, ref_direct ? "xbar_eps" : "xbar_hj");
  auto dims = [&](const CsvTable& t, const std::string& p) {
    std::size_t d = 0;
    while (has(t, p + std::to_string(d))) ++d;
    return d;
  };
  if (!has(direct, "t") || !has(direct, "I_eps")) throw ConfigError("direct history needs t and I_eps");
  if (!has(limit, "t")) throw ConfigError("limit trajectory needs t");
  const std::size_t dim = dims(direct, pd);
  if (dim == 0 || dim != dims(limit, pl)) throw ConfigError("trait dimensions of the inputs differ");
  if (!(eps > 0.0) || !(window > 0.0)) throw ConfigError("eps and window must be positive");

  const auto td = direct.values("t");
  const auto tl = limit.values("t");
  if (td.size() < 2 || tl.size() < 2) throw ConfigError("empty series");
  const double lo = std::max(td.front(), tl.front()), hi = std::min(td.back(), tl.back());
  if (!(hi > lo)) throw ConfigError("time ranges of the inputs do not overlap");

  const auto I = direct.values("I_eps");
  const auto avg = running_average(td, I, window);
  std::vector<double> pred, ref;
  if (ref_direct) {
    ref = limit.values("I_eps");
    pred = running_average(tl, ref, window);
  } else if (has(limit, "I_bar")) {
    pred = limit.values("I_bar");
  }
  const auto [a, b] = full_window_range(td, window);

  std::vector<std::vector<double>> xd, xl;
  for (std::size_t d = 0; d < dim; ++d) {
    xd.push_back(direct.values(pd + std::to_string(d)));
    xl.push_back(limit.values(pl + std::to_string(d)));
  }
  std::vector<double> orbit;
  if (!ref_direct && has(direct, "I_orbit")) orbit = direct.values("I_orbit");

  ComparisonReport rep;
  for (std::size_t i = 0; i < td.size(); ++i) {
    const double t = td[i];
    if (t < lo - 1e-12 || t > hi + 1e-12) continue;
    ++rep.samples;
    double d2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = xd[d][i] - lerp_at(tl, xl[d], t);
      d2 += diff * diff;
    }
    rep.trait_sup_distance = std::max(rep.trait_sup_distance, std::sqrt(d2));
    if (t < t0 - 1e-12) continue;
    if (!pred.empty() && i >= a && i < b) {
      const double p = lerp_at(tl, pred, t);
      rep.average_deviation = std::max(rep.average_deviation, std::abs(avg[i] - p) / std::abs(p));
    }
    const double I_ref = !ref.empty() ? lerp_at(tl, ref, t) : !orbit.empty() ? orbit[i] : 0.0;
    if (I_ref > 0.0)
      rep.orbit_residual = std::max(rep.orbit_residual, std::abs(std::log(I[i]) - std::log(I_ref)));
  }
  return rep;
}

}  // namespace hjlab
