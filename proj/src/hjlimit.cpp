#include "hjlab/hjlimit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hjlab/csv.hpp"
#include "hjlab/errors.hpp"

namespace hjlab {

Trait canonical_step(const Fitness& ef, const Trait& xbar, const SymMatrix& M, double dt,
                     const CanonicalMode& mode) {
  auto velocity = [&](const Trait& x) {
    SymMatrix m = M;
    if (mode.kind == CanonicalMode::Kind::Ansatz) {
      if (!mode.F) throw ConfigError("ansatz mode needs F");
      m = SymMatrix::scaled_identity(x.dim(), -2.0 * mode.F(x));
    }
    return m.solve_negated(ef.gradient(x, x));
  };
  const Trait k1 = velocity(xbar);
  const Trait k2 = velocity(xbar + (0.5 * dt) * k1);
  const Trait k3 = velocity(xbar + (0.5 * dt) * k2);
  const Trait k4 = velocity(xbar + dt * k3);
  return xbar + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

HjResult hj_run(const Fitness& ef, const InitialDatum& datum, const TraitGrid& grid,
                const HjOptions& opts) {
  grid.validate();
  if (grid.dim != ef.dim()) throw ConfigError("grid dimension does not match the fitness");
  if (!(opts.T > 0.0)) throw ConfigError("horizon T must be positive");
  if (!(opts.cadence > 0.0)) throw ConfigError("cadence must be positive");
  if (!(opts.cfl > 0.0 && opts.cfl <= 0.5)) throw ConfigError("cfl must lie in (0, 0.5]");
  if (!(datum.curvature > 0.0)) throw ConfigError("initial curvature must be positive");
  if (!grid.contains(datum.center)) throw ConfigError("x0 lies outside the grid");

  const std::size_t n = grid.size();
  std::vector<Trait> nodes(n);
  for (std::size_t k = 0; k < n; ++k) nodes[k] = grid.point(k);

  HjResult res;
  res.grid = grid;
  res.u.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    res.u[k] = -datum.curvature * (nodes[k] - datum.center).norm_sq();

  if (opts.order != 1 && opts.order != 2) throw ConfigError("hj order must be 1 or 2");
  Field src(n), rhs(n), stage(n);
  auto operator_at = [&](std::span<const double> v, const Trait& resident, Field& out) {
    const auto land = ef.landscape(resident);
    for (std::size_t k = 0; k < n; ++k) src[k] = land->value(nodes[k]);
    return hamiltonian_rhs(v, src, grid, 0.0, out, opts.order);
  };
  std::vector<double> pending = opts.snapshot_times;
  std::sort(pending.begin(), pending.end());

  GridMax gm = locate_max(res.u, grid);
  Trait tracker = gm.position;
  double next_record = 0.0;
  long record_index = 0;
  const double t_eps = 1e-12 * std::max(1.0, opts.T);

  while (true) {
    if (grid.on_boundary(gm.node))
      throw DomainError("fittest trait reached the box boundary at t = " + std::to_string(res.t));
    const double drift = std::abs(gm.value);
    res.max_drift = std::max(res.max_drift, drift);
    if (drift > opts.drift_tolerance) {
      std::ostringstream msg;
      msg << "constraint drift |max u| = " << drift << " exceeds " << opts.drift_tolerance
          << " at t = " << res.t;
      throw SolverError(msg.str(), drift);
    }
    res.plateau = res.plateau || gm.plateau;
    const SymMatrix M = hessian_at(res.u, grid, gm.node);
    res.max_tracker_gap = std::max(res.max_tracker_gap, distance(gm.position, tracker));

    if (res.t >= next_record - t_eps) {
      HjRecord rec;
      rec.t = res.t;
      rec.xbar = gm.position;
      rec.max_u = gm.value;
      rec.M = M;
      if (auto mass = ef.resident_mass(gm.position)) rec.rho = *mass;
      if (auto res_I = ef.resident_resource(gm.position)) rec.I_bar = *res_I;
      rec.canonical = tracker;
      res.trajectory.push_back(rec);
      if (opts.on_record) opts.on_record(res.t, res.u, gm.position);
      while (!pending.empty() && pending.front() <= res.t + 0.5 * opts.cadence) {
        res.snapshots.emplace_back(res.t, res.u);
        pending.erase(pending.begin());
      }
      ++record_index;
      next_record = std::min(opts.T, static_cast<double>(record_index) * opts.cadence);
      if (res.t >= opts.T - t_eps) break;
    }

    const double slope = operator_at(res.u, gm.position, rhs);
    double dt = stable_time_step(slope, grid, 0.0, opts.cfl);
    if (!std::isfinite(dt)) dt = opts.cadence;
    dt = std::min(dt, next_record - res.t);

    if (opts.track_canonical) tracker = canonical_step(ef, tracker, M, dt);
    if (opts.order == 1) {
      for (std::size_t k = 0; k < n; ++k) res.u[k] += dt * rhs[k];
    } else {
      for (std::size_t k = 0; k < n; ++k) stage[k] = res.u[k] + dt * rhs[k];
      operator_at(stage, locate_max(stage, grid).position, rhs);
      for (std::size_t k = 0; k < n; ++k)
        res.u[k] = 0.5 * res.u[k] + 0.5 * (stage[k] + dt * rhs[k]);
    }
    res.t = res.t + dt;
    if (next_record - res.t < t_eps) res.t = next_record;
    ++res.steps;
    for (double v : res.u)
      if (!std::isfinite(v)) throw SolverError("non-finite u at t = " + std::to_string(res.t));
    gm = locate_max(res.u, grid);
  }
  res.xbar = gm.position;
  return res;
}

std::shared_ptr<const FunctionFitness> counterexample_fitness(CounterexampleFields f) {
  if (!f.F || !f.DF || !f.G) throw ConfigError("counterexample needs F, DF and G");
  auto value = [f](const Trait& x, const Trait& y) {
    const double Fy = f.F(y);
    const Trait Gy = f.G(y);
    const Trait d = x - y;
    return -(dot(f.DF(y), Gy) + 4.0 * Fy * Fy) * d.norm_sq() + 2.0 * Fy * dot(Gy, d);
  };
  auto gradient = [f](const Trait& x, const Trait& y) {
    const double Fy = f.F(y);
    const Trait Gy = f.G(y);
    return (-2.0 * (dot(f.DF(y), Gy) + 4.0 * Fy * Fy)) * (x - y) + (2.0 * Fy) * Gy;
  };
  return std::make_shared<const FunctionFitness>(2, value, gradient);
}

CounterexampleFields rotation_fields() {
  return {[](const Trait&) { return 1.0; }, [](const Trait&) { return Trait(0.0, 0.0); },
          [](const Trait& x) { return Trait(-x[1], x[0]); }};
}

CounterexampleReport run_counterexample(const CounterexampleFields& fields, double radius,
                                        const TraitGrid& grid, double T, int order,
                                        HjResult* out) {
  if (grid.dim != 2) throw ConfigError("the counterexample lives in two dimensions");
  if (!(radius > 0.0)) throw ConfigError("radius must be positive");
  const auto ef = counterexample_fitness(fields);
  const Trait x0(radius, 0.0);

  CounterexampleReport rep;
  rep.h = grid.spacing();
  std::vector<Trait> nodes(grid.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) nodes[k] = grid.point(k);

  double angle = 0.0;
  Trait previous = x0;
  HjOptions opts;
  opts.T = T;
  opts.cadence = 0.01;
  opts.track_canonical = false;
  opts.order = order;
  opts.on_record = [&](double, const Field& u, const Trait& xbar) {
    const double F = fields.F(xbar);
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double exact = -F * (nodes[k] - xbar).norm_sq();
      rep.sup_error = std::max(rep.sup_error, std::abs(u[k] - exact));
    }
    angle += std::atan2(previous[0] * xbar[1] - previous[1] * xbar[0], dot(previous, xbar));
    previous = xbar;
  };
  HjResult res = hj_run(*ef, InitialDatum{x0, fields.F(x0), 1.0}, grid, opts);
  rep.drift = res.max_drift;
  rep.return_distance = distance(res.xbar, x0);
  const double two_pi = 2.0 * std::acos(-1.0);
  rep.period_estimate = angle != 0.0 ? two_pi * T / std::abs(angle) : 0.0;
  rep.steps = res.steps;
  if (out) *out = std::move(res);
  return rep;
}

void write_trajectory_csv(const std::filesystem::path& path, const HjResult& result) {
  const std::size_t dim = result.grid.dim;
  std::vector<std::string> header{"t"};
  for (std::size_t d = 0; d < dim; ++d) header.push_back("xbar" + std::to_string(d));
  header.emplace_back("max_u");
  if (dim == 1) {
    header.emplace_back("M00");
  } else {
    for (const char* c : {"M00", "M01", "M10", "M11"}) header.emplace_back(c);
  }
  header.emplace_back("rho");
  header.emplace_back("I_bar");
  for (std::size_t d = 0; d < dim; ++d) header.push_back("xcanon" + std::to_string(d));
  CsvWriter out(path, header);
  std::vector<double> row;
  for (const auto& r : result.trajectory) {
    row.assign({r.t});
    for (std::size_t d = 0; d < dim; ++d) row.push_back(r.xbar[d]);
    row.push_back(r.max_u);
    if (dim == 1) row.push_back(r.M.a00);
    else row.insert(row.end(), {r.M.a00, r.M.a01, r.M.a01, r.M.a11});
    row.push_back(r.rho);
    row.push_back(r.I_bar);
    for (std::size_t d = 0; d < dim; ++d) row.push_back(r.canonical.dim() ? r.canonical[d] : 0.0);
    out.row(std::span<const double>(row));
  }
}

void write_counterexample_json(const std::filesystem::path& path, const CounterexampleReport& r) {
  nlohmann::json j{{"h", r.h},
                   {"sup_error", r.sup_error},
                   {"sup_error_over_h", r.sup_error / r.h},
                   {"drift", r.drift},
                   {"return_distance", r.return_distance},
                   {"period_estimate", r.period_estimate},
                   {"steps", r.steps}};
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace hjlab
