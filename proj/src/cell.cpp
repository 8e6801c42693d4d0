#include "hjlab/cell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hjlab/csv.hpp"
#include "hjlab/errors.hpp"

namespace hjlab {

namespace {

constexpr double kBoundaryTolerance = 1e-9;

double default_seed(const GrowthModel& model) {
  const auto& c = model.constants();
  double v = std::max(c.I_tilde_m.value_or(1.0), 1.0);
  if (c.I_M) v = std::min(*c.I_M, v);
  return std::log(v);
}

PeriodicOrbit zero_orbit(const Trait& anchor, std::size_t samples) {
  PeriodicOrbit o;
  o.anchor = anchor;
  o.values.assign(samples + 1, 0.0);
  o.slopes.assign(samples + 1, 0.0);
  o.mean = 0.0;
  o.seed = -std::numeric_limits<double>::infinity();
  o.degenerate = true;
  return o;
}

}  // namespace

double PeriodicOrbit::at(double s) const {
  const std::size_t m = samples();
  const double w = (s - std::floor(s)) * static_cast<double>(m);
  std::size_t k = static_cast<std::size_t>(w);
  if (k >= m) k = m - 1;
  const double t = w - static_cast<double>(k);
  const double ds = 1.0 / static_cast<double>(m);
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * values[k] + h10 * ds * slopes[k] + h01 * values[k + 1] + h11 * ds * slopes[k + 1];
}

double PeriodicOrbit::max() const { return *std::max_element(values.begin(), values.end()); }

std::vector<double> simpson_weights(std::size_t panels) {
  if (panels == 0 || panels % 2)
    throw ConfigError("Simpson quadrature needs an even, positive number of panels");
  std::vector<double> w(panels + 1);
  const double h = 1.0 / static_cast<double>(panels);
  for (std::size_t k = 0; k <= panels; ++k) {
    const double c = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    w[k] = c * h / 3.0;
  }
  return w;
}

double simpson_integral(std::span<const double> samples) {
  const auto w = simpson_weights(samples.size() - 1);
  double sum = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) sum += w[k] * samples[k];
  return sum;
}

PeriodicOrbit solve_periodic(const OrbitRate& g, const OrbitOptions& opts,
                             std::optional<double> seed_hint, double default_seed_value) {
  const std::size_t m = opts.samples;
  if (m < 2 || m % 2) throw ConfigError("orbit samples per period must be even and >= 2");
  if (!(opts.damping > 0.0 && opts.damping <= 1.0))
    throw ConfigError("orbit damping must lie in (0, 1]");
  const double ds = 1.0 / static_cast<double>(m);

  auto f = [&](double s, double J) {
    const double v = g(s, std::exp(J));
    return v;
  };

  PeriodicOrbit orbit;
  std::vector<double> J(m + 1);
  double alpha = seed_hint.value_or(default_seed_value);
  double residual = std::numeric_limits<double>::infinity();
  double prev_alpha = alpha;
  std::optional<double> prev_residual;
  for (int it = 0; it < opts.max_iterations; ++it) {
    orbit.seed_trace.push_back(alpha);
    J[0] = alpha;
    for (std::size_t k = 0; k < m; ++k) {
      const double s = static_cast<double>(k) * ds;
      const double y = J[k];
      const double k1 = f(s, y);
      const double k2 = f(s + 0.5 * ds, y + 0.5 * ds * k1);
      const double k3 = f(s + 0.5 * ds, y + 0.5 * ds * k2);
      const double k4 = f(s + ds, y + ds * k3);
      J[k + 1] = y + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!std::isfinite(J[m]))
      throw SolverError("cell problem integration diverged from seed " + std::to_string(alpha),
                        residual);
    residual = J[m] - alpha;
    if (std::abs(residual) <= opts.tolerance) {
      orbit.iterations = it + 1;
      orbit.seed = alpha;
      orbit.residual = std::abs(residual);
      orbit.values.resize(m + 1);
      orbit.slopes.resize(m + 1);
      for (std::size_t k = 0; k <= m; ++k) {
        const double s = static_cast<double>(k) * ds;
        const double I = std::exp(J[k]);
        orbit.values[k] = I;
        orbit.slopes[k] = I * g(s, I);
      }
      orbit.mean = simpson_integral(orbit.values);
      return orbit;
    }
    double next = alpha + opts.damping * residual;
    if (opts.secant && prev_residual) {
      const double denom = residual - *prev_residual;
      if (denom != 0.0) {
        const double cand = alpha - residual * (alpha - prev_alpha) / denom;
        const double cap = std::max(4.0 * std::abs(residual), 1.0);
        if (std::isfinite(cand)) next = alpha + std::clamp(cand - alpha, -cap, cap);
      }
    }
    prev_alpha = alpha;
    prev_residual = residual;
    alpha = next;
  }
  throw SolverError("cell problem fixed point did not converge in " +
                        std::to_string(opts.max_iterations) + " iterations",
                    std::abs(residual));
}

ViabilityStatus in_X(const GrowthModel& model, const Trait& x) {
  const double mu = model.zero_resource_margin(x);
  if (mu > kBoundaryTolerance) return {Viability::Inside, mu};
  if (mu >= -kBoundaryTolerance) return {Viability::Boundary, mu};
  return {Viability::Outside, mu};
}

PeriodicOrbit solve_orbit(const GrowthModel& model, const Trait& anchor, const OrbitOptions& opts,
                          std::optional<double> seed_hint) {
  if (anchor.dim() != model.dim())
    throw DomainError("anchor dimension does not match the model");
  const auto status = in_X(model, anchor);
  if (status.where == Viability::Outside)
    throw DomainError("anchor " + to_string(anchor) + " lies outside the viable set (mu = " +
                      std::to_string(status.margin) + ")");
  if (status.where == Viability::Boundary) return zero_orbit(anchor, opts.samples);
  auto g = [&model, &anchor](double s, double I) { return model.rate(anchor, s, I); };
  PeriodicOrbit o = solve_periodic(g, opts, seed_hint, default_seed(model));
  o.anchor = anchor;
  return o;
}

PeriodicOrbit solve_level_orbit(const GrowthModel& model, double level, const OrbitOptions& opts,
                                std::optional<double> seed_hint) {
  const SeparableParts* parts = model.separable();
  if (!parts) throw DomainError("level orbits need a separable model");
  auto g = [parts, level](double s, double I) { return level * parts->B(s, I) - parts->D(s, I); };
  double mu = 0.0;
  {
    const auto w = simpson_weights(256);
    for (std::size_t k = 0; k < w.size(); ++k) mu += w[k] * g(static_cast<double>(k) / 256.0, 0.0);
  }
  if (mu < -kBoundaryTolerance)
    throw DomainError("level F = " + std::to_string(level) + " does not sustain a population");
  if (mu <= kBoundaryTolerance) {
    PeriodicOrbit o = zero_orbit(Trait(), opts.samples);
    o.level = level;
    return o;
  }
  PeriodicOrbit o = solve_periodic(g, opts, seed_hint, default_seed(model));
  o.level = level;
  return o;
}

std::vector<double> boundary_decay_check(const GrowthModel& model, std::span<const Trait> path,
                                         const OrbitOptions& opts) {
  std::vector<double> out;
  std::optional<double> seed;
  for (const auto& x : path) {
    const PeriodicOrbit o = solve_orbit(model, x, opts, seed);
    out.push_back(o.max());
    if (!o.degenerate) seed = o.seed;
  }
  return out;
}

// --- fitness -----------------------------------------------------------------------------------

namespace {

class FunctionLandscape final : public Landscape {
 public:
  FunctionLandscape(const FunctionFitness::ValueFn* v, const FunctionFitness::GradientFn* g, Trait y)
      : value_(v), gradient_(g), y_(y) {}
  double value(const Trait& x) const override { return (*value_)(x, y_); }
  Trait gradient(const Trait& x) const override { return (*gradient_)(x, y_); }

 private:
  const FunctionFitness::ValueFn* value_;
  const FunctionFitness::GradientFn* gradient_;
  Trait y_;
};

// Quadrature of R(x, s, I(y, s)) over the resident orbit. For sum-of-products rates the
// environment factors are averaged once and the quadrature collapses to a short dot product.
class OrbitLandscape final : public Landscape {
 public:
  OrbitLandscape(const GrowthModel& model, std::shared_ptr<const PeriodicOrbit> orbit,
                 const std::vector<double>& weights)
      : model_(model), orbit_(std::move(orbit)), weights_(weights) {
    if (model_.separated()) {
      const std::size_t m = orbit_->samples();
      for (const auto& term : model_.terms()) {
        double avg = 0.0;
        for (std::size_t k = 0; k <= m; ++k)
          avg += weights_[k] * term.env(orbit_->phase(k) - std::floor(orbit_->phase(k)),
                                        orbit_->values[k]);
        env_means_.push_back(avg);
      }
    }
  }

  double value(const Trait& x) const override {
    if (!env_means_.empty()) {
      double r = 0.0;
      const auto& terms = model_.terms();
      for (std::size_t i = 0; i < terms.size(); ++i) r += terms[i].trait(x) * env_means_[i];
      return r;
    }
    double r = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k)
      r += weights_[k] * model_.rate(x, orbit_->phase(k), orbit_->values[k]);
    return r;
  }

  Trait gradient(const Trait& x) const override {
    Trait g = Trait::zeros(x.dim());
    if (!env_means_.empty()) {
      const auto& terms = model_.terms();
      for (std::size_t i = 0; i < terms.size(); ++i)
        if (env_means_[i] != 0.0) g += env_means_[i] * terms[i].trait_gradient(x);
      return g;
    }
    if (model_.definition().rate_dx) {
      for (std::size_t k = 0; k < weights_.size(); ++k)
        g += weights_[k] * model_.rate_dx(x, orbit_->phase(k), orbit_->values[k]);
      return g;
    }
    for (std::size_t d = 0; d < x.dim(); ++d) {
      const double step = 1e-5 * std::max(1.0, std::abs(x[d]));
      Trait xp = x, xm = x;
      xp[d] += step;
      xm[d] -= step;
      g[d] = (value(xp) - value(xm)) / (2.0 * step);
    }
    return g;
  }

 private:
  const GrowthModel& model_;
  std::shared_ptr<const PeriodicOrbit> orbit_;
  const std::vector<double>& weights_;
  std::vector<double> env_means_;
};

}  // namespace

FunctionFitness::FunctionFitness(std::size_t dim, ValueFn value, GradientFn gradient)
    : dim_(dim), value_(std::move(value)), gradient_(std::move(gradient)) {}

LandscapePtr FunctionFitness::landscape(const Trait& y) const {
  return std::make_shared<FunctionLandscape>(&value_, &gradient_, y);
}

EffectiveFitness::EffectiveFitness(ModelPtr model, OrbitOptions opts, double quantum,
                                   std::size_t capacity)
    : model_(std::move(model)), opts_(opts), quantum_(quantum), capacity_(capacity),
      weights_(simpson_weights(opts.samples)) {
  if (!model_) throw ConfigError("effective fitness needs a model");
  if (!(quantum_ > 0.0)) throw ConfigError("cache quantum must be positive");
}

EffectiveFitness::Key EffectiveFitness::key_of(const Trait& y) const {
  Key k{0, 0};
  for (std::size_t d = 0; d < y.dim(); ++d) k[d] = std::llround(y[d] / quantum_);
  return k;
}

std::shared_ptr<const PeriodicOrbit> EffectiveFitness::orbit(const Trait& y) const {
  const Key key = key_of(y);
  std::optional<double> hint;
  {
    std::shared_lock lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      if (it->second->anchor == y) return it->second;
      if (!it->second->degenerate) hint = it->second->seed;
    }
    if (!hint && !cache_.empty()) {
      // Nearest neighbour in key order, else the last solve.
      auto lb = cache_.lower_bound(key);
      if (lb != cache_.end() && !lb->second->degenerate) hint = lb->second->seed;
      else if (lb != cache_.begin() && !std::prev(lb)->second->degenerate)
        hint = std::prev(lb)->second->seed;
    }
    if (!hint) hint = last_seed_;
  }
  auto solved = std::make_shared<const PeriodicOrbit>(solve_orbit(*model_, y, opts_, hint));
  std::unique_lock lock(mutex_);
  auto it = cache_.find(key);
  if (it != cache_.end() && it->second->anchor == y) return it->second;
  if (cache_.size() >= capacity_ && it == cache_.end()) cache_.clear();
  cache_[key] = solved;
  if (!solved->degenerate) last_seed_ = solved->seed;
  ++solves_;
  return solved;
}

LandscapePtr EffectiveFitness::landscape(const Trait& y) const {
  return std::make_shared<OrbitLandscape>(*model_, orbit(y), weights_);
}

std::optional<double> EffectiveFitness::resident_resource(const Trait& y) const {
  return orbit(y)->mean;
}

std::optional<double> EffectiveFitness::resident_mass(const Trait& y) const {
  return orbit(y)->mean / model_->uptake(y);
}

std::size_t EffectiveFitness::solves() const {
  std::shared_lock lock(mutex_);
  return solves_;
}

std::size_t EffectiveFitness::cache_size() const {
  std::shared_lock lock(mutex_);
  return cache_.size();
}

double effective_fitness(const Fitness& ef, const Trait& x, const Trait& y) {
  return ef.value(x, y);
}

Trait effective_fitness_d1(const Fitness& ef, const Trait& x, const Trait& y) {
  return ef.gradient(x, y);
}

double separable_fitness(const GrowthModel& model, const Trait& x, double level,
                         const OrbitOptions& opts) {
  const SeparableParts* parts = model.separable();
  if (!parts) throw DomainError("separable_fitness needs a separable model");
  const PeriodicOrbit o = solve_level_orbit(model, level, opts);
  std::vector<double> d(o.values.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = parts->D(o.phase(k), o.values[k]);
  return simpson_integral(d) * (parts->b(x) / level - 1.0);
}

void write_orbit_csv(const std::filesystem::path& path, const PeriodicOrbit& orbit) {
  CsvWriter out(path, {"s", "I"});
  for (std::size_t k = 0; k < orbit.values.size(); ++k) out.row({orbit.phase(k), orbit.values[k]});
}

void write_surface_csv(const std::filesystem::path& path, const Fitness& ef,
                       std::span<const Trait> xs, std::span<const Trait> ys) {
  const bool two_d = ef.dim() == 2;
  CsvWriter out(path, two_d ? std::vector<std::string>{"x0", "x1", "y0", "y1", "R_eff"}
                            : std::vector<std::string>{"x", "y", "R_eff"});
  for (const auto& y : ys) {
    const auto land = ef.landscape(y);
    for (const auto& x : xs) {
      const double r = land->value(x);
      if (two_d) out.row({x[0], x[1], y[0], y[1], r});
      else out.row({x[0], y[0], r});
    }
  }
}

}  // namespace hjlab
