#include "hjlab/direct.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <sstream>

#include "hjlab/csv.hpp"
#include "hjlab/errors.hpp"

namespace hjlab {

SourceTable::SourceTable(const GrowthModel& model, const TraitGrid& grid) : model_(model) {
  if (grid.dim != model.dim()) throw ConfigError("grid dimension does not match the model");
  nodes_.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) nodes_.push_back(grid.point(k));
  log_psi_.resize(nodes_.size());
  for (std::size_t k = 0; k < nodes_.size(); ++k) log_psi_[k] = std::log(model.uptake(nodes_[k]));
  if (model.separated()) {
    for (const auto& term : model.terms()) {
      std::vector<double> f(nodes_.size());
      for (std::size_t k = 0; k < nodes_.size(); ++k) f[k] = term.trait(nodes_[k]);
      factors_.push_back(std::move(f));
    }
  }
}

void SourceTable::fill(double s, double I, std::span<double> out) const {
  if (I < 0.0) throw DomainError("negative resource level");
  if (factors_.empty()) {
    for (std::size_t k = 0; k < nodes_.size(); ++k) out[k] = model_.rate(nodes_[k], s, I);
    return;
  }
  const double phase = s - std::floor(s);
  const auto& terms = model_.terms();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double h = terms[i].env(phase, I);
    if (!std::isfinite(h))
      throw ModelError("non-finite environment factor at s = " + std::to_string(phase) +
                       ", I = " + std::to_string(I));
    const auto& f = factors_[i];
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += f[k] * h;
  }
}

double resource(std::span<const double> u, std::span<const double> log_psi, const TraitGrid& grid,
                double eps) {
  return std::exp(log_integral(u, log_psi, grid, eps));
}

SimState make_state(const GrowthModel& model, const InitialDatum& datum, const TraitGrid& grid,
                    double eps) {
  grid.validate();
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  SimState st;
  st.grid = grid;
  st.eps = eps;
  st.u = initial_field(datum, grid, eps, model);
  return st;
}

namespace {

struct Workspace {
  Field src, rhs, u1, u2;
  explicit Workspace(std::size_t n) : src(n), rhs(n), u1(n), u2(n) {}
};

// rhs of the Hopf-Cole equation at phase time tau, returns the slope bound
double operator_at(std::span<const double> v, double tau, const SimState& st,
                   const SourceTable& source, Workspace& w) {
  const double I = resource(v, source.log_psi(), st.grid, st.eps);
  source.fill(tau / st.eps, I, w.src);
  return hamiltonian_rhs(v, w.src, st.grid, st.eps, w.rhs);
}

void check_dt(double dt, double slope, const SimState& st) {
  const double limit = stable_time_step(slope, st.grid, st.eps, 0.5);
  if (dt > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "time step " << dt << " exceeds the monotone limit " << limit << " at t = " << st.t;
    throw ConfigError(msg.str());
  }
}

void check_finite(std::span<const double> v, double t) {
  for (double x : v)
    if (!std::isfinite(x)) throw SolverError("blow-up: non-finite u at t = " + std::to_string(t), 0.0);
}

}  // namespace

void step(SimState& st, const SourceTable& source, double dt) {
  const std::size_t n = st.u.size();
  thread_local Workspace w(0);
  if (w.src.size() != n) w = Workspace(n);

  double slope = operator_at(st.u, st.t, st, source, w);
  check_dt(dt, slope, st);
  for (std::size_t k = 0; k < n; ++k) w.u1[k] = st.u[k] + dt * w.rhs[k];

  slope = operator_at(w.u1, st.t + dt, st, source, w);
  check_dt(dt, slope, st);
  for (std::size_t k = 0; k < n; ++k) w.u2[k] = 0.75 * st.u[k] + 0.25 * (w.u1[k] + dt * w.rhs[k]);

  slope = operator_at(w.u2, st.t + 0.5 * dt, st, source, w);
  check_dt(dt, slope, st);
  for (std::size_t k = 0; k < n; ++k)
    st.u[k] = st.u[k] / 3.0 + 2.0 / 3.0 * (w.u2[k] + dt * w.rhs[k]);

  st.t += dt;
  st.last_dt = dt;
  ++st.steps;
  check_finite(st.u, st.t);
}

namespace {

HistoryRow observe(const SimState& st, const GrowthModel& model, const SourceTable& source,
                   const DirectOptions& opts) {
  HistoryRow row;
  row.t = st.t;
  row.I = resource(st.u, source.log_psi(), st.grid, st.eps);
  const GridMax gm = locate_max(st.u, st.grid);
  row.xbar = gm.position;
  row.rho = row.I / model.uptake(gm.position);
  row.max_u = gm.value;
  const auto range = second_difference_range(st.u, st.grid, opts.concavity_band);
  row.d2u_min = range[0];
  row.d2u_max = range[1];
  if (model.separable()) row.F = separable_F(st.u, st.grid, st.eps, model);

  double edge = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < st.u.size(); ++k)
    if (st.grid.on_boundary(k)) edge = std::max(edge, st.u[k]);
  if (edge > gm.node_value - opts.boundary_gap * st.eps) {
    std::ostringstream msg;
    msg << "domain too small: boundary value " << edge << " within " << opts.boundary_gap
        << " eps of max u = " << gm.node_value << " at t = " << st.t;
    throw DomainError(msg.str());
  }
  return row;
}

}  // namespace

SimState run(const GrowthModel& model, const InitialDatum& datum, const TraitGrid& grid,
             double eps, const DirectOptions& opts) {
  if (!(opts.T > 0.0)) throw ConfigError("horizon T must be positive");
  if (opts.substeps_per_eps < 1) throw ConfigError("substeps per eps must be positive");
  if (!(opts.cfl > 0.0 && opts.cfl <= 0.5)) throw ConfigError("cfl must lie in (0, 0.5]");
  SimState st = make_state(model, datum, grid, eps);
  const SourceTable source(model, grid);

  const double dt0 = eps / opts.substeps_per_eps;
  const double cadence = opts.cadence > 0.0 ? opts.cadence : eps / 16.0;
  const long per_record = std::max(1L, std::lround(cadence / dt0));
  const double record_dt = static_cast<double>(per_record) * dt0;
  const long records = static_cast<long>(std::ceil(opts.T / record_dt - 1e-9));

  std::vector<double> pending = opts.snapshot_times;
  std::sort(pending.begin(), pending.end());
  auto take_snapshots = [&]() {
    while (!pending.empty() && pending.front() <= st.t + 0.5 * record_dt) {
      st.snapshots.push_back({st.t, st.u});
      pending.erase(pending.begin());
    }
  };

  st.history.reserve(static_cast<std::size_t>(records) + 1);
  st.history.push_back(observe(st, model, source, opts));
  take_snapshots();
  for (long r = 1; r <= records; ++r) {
    const double limit = stable_time_step(max_slope(st.u, grid), grid, eps, opts.cfl);
    const long k = std::max(1L, static_cast<long>(std::ceil(dt0 / limit)));
    const double dt = dt0 / static_cast<double>(k);
    for (long j = 0; j < per_record * k; ++j) step(st, source, dt);
    st.t = static_cast<double>(r) * record_dt;
    st.history.push_back(observe(st, model, source, opts));
    take_snapshots();
  }
  return st;
}

std::vector<double> running_average(std::span<const double> times, std::span<const double> values,
                                    double window) {
  const std::size_t n = times.size();
  if (n != values.size()) throw ConfigError("running average: times and values differ in length");
  if (n == 0) return {};
  if (n > 1 && window < times[1] - times[0])
    throw ConfigError("running average window is smaller than the sampling cadence");
  // cumulative trapezoid
  std::vector<double> c(n, 0.0);
  for (std::size_t j = 1; j < n; ++j)
    c[j] = c[j - 1] + 0.5 * (values[j] + values[j - 1]) * (times[j] - times[j - 1]);
  const double half = 0.5 * window;
  const double slack = 1e-9 * std::max(1.0, window);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto lo = std::lower_bound(times.begin(), times.end(), times[i] - half - slack);
    const auto hi = std::upper_bound(times.begin(), times.end(), times[i] + half + slack);
    const std::size_t j0 = static_cast<std::size_t>(lo - times.begin());
    const std::size_t j1 = static_cast<std::size_t>(hi - times.begin()) - 1;
    out[i] = j1 > j0 ? (c[j1] - c[j0]) / (times[j1] - times[j0]) : values[i];
  }
  return out;
}

double separable_F(std::span<const double> u, const TraitGrid& grid, double eps,
                   const GrowthModel& model) {
  const SeparableParts* parts = model.separable();
  if (!parts) throw DomainError("F_eps is defined for separable models only");
  std::vector<double> log_psi(u.size()), b(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const Trait x = grid.point(k);
    log_psi[k] = std::log(model.uptake(x));
    b[k] = parts->b(x);
  }
  return weighted_mean(u, log_psi, b, eps);
}

std::vector<double> separable_F(const SimState& state, const GrowthModel& model) {
  if (!model.separable()) throw DomainError("F_eps is defined for separable models only");
  std::vector<double> out;
  out.reserve(state.history.size());
  for (const auto& row : state.history) {
    if (!row.F) throw DomainError("history carries no F_eps column");
    out.push_back(*row.F);
  }
  return out;
}

Spectrum dominant_frequency(std::span<const double> times, std::span<const double> values,
                            double t0) {
  const auto first = std::lower_bound(times.begin(), times.end(), t0 - 1e-12);
  const std::size_t start = static_cast<std::size_t>(first - times.begin());
  const std::size_t n = times.size() - start;
  if (n < 4) throw ConfigError("spectrum needs at least four samples");
  const double dt = (times.back() - times[start]) / static_cast<double>(n - 1);

  // Least-squares line removed and a Hann taper applied, so the slow envelope does not
  // leak into the low bins.
  std::vector<double> in(values.begin() + static_cast<std::ptrdiff_t>(start), values.end());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = static_cast<double>(j);
    sx += x;
    sy += in[j];
    sxx += x * x;
    sxy += x * in[j];
  }
  const double nn = static_cast<double>(n);
  const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / nn;
  const double pi = std::acos(-1.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = static_cast<double>(j);
    in[j] = (in[j] - icpt - slope * x) * 0.5 * (1.0 - std::cos(2.0 * pi * x / (nn - 1.0)));
  }
  std::vector<std::complex<double>> out(n / 2 + 1);

  static std::mutex planner;
  fftw_plan plan;
  {
    std::lock_guard lock(planner);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner);
    fftw_destroy_plan(plan);
  }

  Spectrum sp;
  sp.bin_width = 1.0 / (static_cast<double>(n) * dt);
  for (std::size_t k = 1; k < out.size(); ++k) {
    const double a = std::abs(out[k]);
    if (a > sp.amplitude) {
      sp.amplitude = a;
      sp.bin = k;
    }
  }
  sp.frequency = static_cast<double>(sp.bin) * sp.bin_width;
  return sp;
}

double orbit_residual(const SimState& state, const EffectiveFitness& ef, double t0, double t1) {
  double worst = 0.0;
  for (const auto& row : state.history) {
    if (row.t < t0 - 1e-12 || row.t > t1 + 1e-12) continue;
    const auto orbit = ef.orbit(row.xbar);
    const double predicted = orbit->at(row.t / state.eps);
    worst = std::max(worst, std::abs(std::log(row.I) - std::log(predicted)));
  }
  return worst;
}

std::vector<double> history_column(const SimState& state, double HistoryRow::*field) {
  std::vector<double> out;
  out.reserve(state.history.size());
  for (const auto& row : state.history) out.push_back(row.*field);
  return out;
}

std::vector<double> history_times(const SimState& state) {
  return history_column(state, &HistoryRow::t);
}

void write_history_csv(const std::filesystem::path& path, const SimState& state) {
  const std::size_t dim = state.grid.dim;
  const bool with_F = !state.history.empty() && state.history.front().F.has_value();
  std::vector<std::string> header{"t", "I_eps"};
  for (std::size_t d = 0; d < dim; ++d) header.push_back("xbar" + std::to_string(d));
  for (const char* c : {"rho", "max_u", "d2u_min", "d2u_max"}) header.emplace_back(c);
  if (with_F) header.emplace_back("F_eps");
  CsvWriter out(path, header);
  std::vector<double> row;
  for (const auto& h : state.history) {
    row.assign({h.t, h.I});
    for (std::size_t d = 0; d < dim; ++d) row.push_back(h.xbar[d]);
    row.insert(row.end(), {h.rho, h.max_u, h.d2u_min, h.d2u_max});
    if (with_F) row.push_back(h.F.value_or(std::nan("")));
    out.row(std::span<const double>(row));
  }
}

void write_snapshot_csv(const std::filesystem::path& path, const SimState& state) {
  const std::size_t dim = state.grid.dim;
  CsvWriter out(path, dim == 1 ? std::vector<std::string>{"t", "x", "u"}
                               : std::vector<std::string>{"t", "x0", "x1", "u"});
  for (const auto& snap : state.snapshots) {
    for (std::size_t k = 0; k < snap.u.size(); ++k) {
      const Trait x = state.grid.point(k);
      if (dim == 1) out.row({snap.t, x[0], snap.u[k]});
      else out.row({snap.t, x[0], x[1], snap.u[k]});
    }
  }
}

}  // namespace hjlab
