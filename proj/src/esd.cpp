#include "hjlab/esd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "hjlab/errors.hpp"

namespace hjlab {

namespace {

struct NodeMax {
  std::size_t node = 0;
  double value = -std::numeric_limits<double>::infinity();
};

template <class F>
NodeMax grid_argmax(const TraitGrid& grid, F&& f) {
  NodeMax best;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double v = f(grid.point(k));
    if (v > best.value) best = {k, v};
  }
  return best;
}

// Newton on grad = 0 with a centred finite-difference Jacobian of grad.
template <class G>
bool newton_stationary(G&& gradient, Trait& y, double tol, double& gnorm) {
  for (int it = 0; it < 50; ++it) {
    const Trait g = gradient(y);
    gnorm = g.norm();
    if (gnorm <= tol) return true;
    SymMatrix H;
    H.dim = y.dim();
    const double step = 1e-5 * std::max(1.0, y.norm());
    Trait col[2];
    for (std::size_t d = 0; d < y.dim(); ++d) {
      Trait yp = y, ym = y;
      yp[d] += step;
      ym[d] -= step;
      col[d] = (1.0 / (2.0 * step)) * (gradient(yp) - gradient(ym));
    }
    H.a00 = col[0][0];
    if (y.dim() == 2) {
      H.a01 = 0.5 * (col[0][1] + col[1][0]);
      H.a11 = col[1][1];
    }
    Trait delta;
    try {
      delta = H.solve_negated(g);  // (-H) delta = g  ->  y + delta is the Newton point
    } catch (const SolverError&) {
      return false;
    }
    y += delta;
    if (!y.finite()) return false;
  }
  gnorm = gradient(y).norm();
  return gnorm <= tol;
}

}  // namespace

std::string_view to_string(EsdStatus s) {
  switch (s) {
    case EsdStatus::Converged: return "converged";
    case EsdStatus::NotConverged: return "not-converged";
    case EsdStatus::Diverged: return "diverged";
  }
  return "unknown";
}

AMapResult a_map(const Fitness& ef, const Trait& x, const TraitGrid& grid) {
  const auto land = ef.landscape(x);
  const NodeMax best = grid_argmax(grid, [&](const Trait& y) { return land->value(y); });
  const Trait start = grid.point(best.node);
  AMapResult out;
  Trait y = start;
  double gnorm = 0.0;
  out.newton_converged =
      newton_stationary([&](const Trait& z) { return land->gradient(z); }, y, 1e-8, gnorm) &&
      grid.contains(y) && land->value(y) >= best.value - 1e-12;
  if (out.newton_converged) {
    out.value = y;
    out.gradient_norm = gnorm;
  } else {
    out.value = start;
    out.gradient_norm = land->gradient(start).norm();
  }
  return out;
}

EsdResult esd_fixed_point(const Fitness& ef, const Trait& x_init, const TraitGrid& grid,
                          const EsdOptions& opts) {
  if (!(opts.gamma > 0.0 && opts.gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!grid.contains(x_init)) throw ConfigError("initial trait lies outside the grid");
  EsdResult res;
  Trait x = x_init;
  res.trace.push_back(x);
  for (int it = 0; it < opts.max_iterations; ++it) {
    const AMapResult a = a_map(ef, x, grid);
    res.newton_fallback = res.newton_fallback || !a.newton_converged;
    res.step_residual = distance(a.value, x);
    res.iterations = it + 1;
    if (res.step_residual <= opts.tolerance) {
      res.status = EsdStatus::Converged;
      break;
    }
    x += opts.gamma * (a.value - x);
    res.trace.push_back(x);
    if (!grid.contains(x)) {
      res.status = EsdStatus::Diverged;
      break;
    }
  }
  res.xbar_inf = x;
  if (res.status == EsdStatus::Diverged) return res;
  const auto land = ef.landscape(x);
  res.self_fitness = std::abs(land->value(x));
  res.max_fitness = std::max(land->value(x),
                             grid_argmax(grid, [&](const Trait& y) { return land->value(y); }).value);
  if (auto mass = ef.resident_mass(x)) res.rho_inf = *mass;
  return res;
}

SeparableLimit separable_limit(const GrowthModel& model, const TraitGrid& grid,
                               const OrbitOptions& opts) {
  const SeparableParts* parts = model.separable();
  if (!parts) throw DomainError("separable_limit needs a separable model");
  if (grid.dim != model.dim()) throw ConfigError("grid dimension does not match the model");

  const NodeMax best = grid_argmax(grid, [&](const Trait& x) { return parts->b(x); });
  const double tie = 1e-10 * std::max(1.0, std::abs(best.value));
  const auto bi = grid.unflatten(best.node);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k == best.node || parts->b(grid.point(k)) < best.value - tie) continue;
    const auto ki = grid.unflatten(k);
    bool adjacent = true;
    for (std::size_t d = 0; d < grid.dim; ++d)
      adjacent = adjacent && (ki[d] + 1 >= bi[d] && ki[d] <= bi[d] + 1);
    if (!adjacent)
      throw AssumptionError("b has more than one maximiser: " + to_string(grid.point(best.node)) +
                            " and " + to_string(grid.point(k)));
  }

  SeparableLimit out;
  Trait x = grid.point(best.node);
  double gnorm = 0.0;
  auto gradient = [&](const Trait& z) {
    if (parts->b_gradient) return parts->b_gradient(z);
    Trait g = Trait::zeros(z.dim());
    for (std::size_t d = 0; d < z.dim(); ++d) {
      const double step = 1e-5 * std::max(1.0, std::abs(z[d]));
      Trait zp = z, zm = z;
      zp[d] += step;
      zm[d] -= step;
      g[d] = (parts->b(zp) - parts->b(zm)) / (2.0 * step);
    }
    return g;
  };
  if (!newton_stationary(gradient, x, 1e-12, gnorm) || parts->b(x) < best.value)
    x = grid.point(best.node);
  out.x_star = x;
  out.F_star = parts->b(x);
  out.orbit = solve_level_orbit(model, out.F_star, opts);
  out.rho_star = out.orbit.mean / model.uptake(x);
  return out;
}

FluctuationReport fluctuation_compare(const GrowthModel& model, const TraitGrid& grid,
                                      const OrbitOptions& opts) {
  const FluctuationParts* fp = model.fluctuation();
  if (!fp) throw DomainError("fluctuation_compare needs R = b(x) - D1(s) D2(I)");
  const SeparableLimit lim = separable_limit(model, grid, opts);
  const PeriodicOrbit& o = lim.orbit;
  const std::size_t m = o.samples();
  const auto w = simpson_weights(m);

  FluctuationReport r;
  r.x_star = lim.x_star;
  r.b_star = lim.F_star;
  r.rho_star = lim.rho_star;
  double i1 = 0.0, i2 = 0.0;
  for (std::size_t k = 0; k <= m; ++k) {
    const double d1 = fp->D1(o.phase(k));
    const double d2 = fp->D2(o.values[k]);
    r.D1_av += w[k] * d1;
    r.D2_mean += w[k] * d2;
    i1 += w[k] * d1 * d2;
    i2 += w[k] * d1 * d2 * d2;
  }
  r.identity_residuals = {std::abs(i1 - r.b_star), std::abs(r.D2_mean * r.b_star - i2)};
  r.cs_gap = r.D1_av * r.D2_mean - r.b_star;

  double lo = 0.5 * *std::min_element(o.values.begin(), o.values.end());
  double hi = 2.0 * o.max();
  auto f = [&](double rho) { return r.D1_av * fp->D2(rho) - r.b_star; };
  double flo = f(lo);
  const double fhi = f(hi);
  if (!(flo < 0.0 && fhi > 0.0))
    throw ConfigError("averaged-model root is not bracketed on [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  r.rho_av = 0.5 * (lo + hi);
  r.gap = r.rho_star - r.rho_av;
  return r;
}

namespace {

nlohmann::json trait_json(const Trait& x) { return std::vector<double>(x.begin(), x.end()); }

void dump(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

void write_esd_json(const std::filesystem::path& path, const EsdResult& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& x : r.trace) trace.push_back(trait_json(x));
  dump(path, {{"status", std::string(to_string(r.status))},
              {"xbar_inf", trait_json(r.xbar_inf)},
              {"rho_inf", std::isfinite(r.rho_inf) ? nlohmann::json(r.rho_inf) : nlohmann::json()},
              {"residuals",
               {{"self_fitness", r.self_fitness},
                {"max_fitness", r.max_fitness},
                {"step", r.step_residual}}},
              {"iterations", r.iterations},
              {"newton_fallback", r.newton_fallback},
              {"trace", trace}});
}

void write_fluctuation_json(const std::filesystem::path& path, const FluctuationReport& r) {
  dump(path, {{"x_star", trait_json(r.x_star)},
              {"b_star", r.b_star},
              {"rho_star", r.rho_star},
              {"rho_av", r.rho_av},
              {"gap", r.gap},
              {"D1_av", r.D1_av},
              {"D2_mean", r.D2_mean},
              {"cauchy_schwarz_gap", r.cs_gap},
              {"identity_residuals", r.identity_residuals}});
}

}  // namespace hjlab
