#include "hjlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hjlab/errors.hpp"

namespace hjlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double s) { return s - std::floor(s); }

double fd_step(double v) { return 1e-5 * std::max(1.0, std::abs(v)); }

std::string describe(const Trait& x, double s, double I) {
  std::ostringstream os;
  os << "x=" << x << ", s=" << s << ", I=" << I;
  return os.str();
}

Trait first_axis(std::size_t dim, double v) {
  Trait t = Trait::zeros(dim);
  t[0] = v;
  return t;
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::ConcaveQuadratic: return "concave-quadratic";
    case Family::Separable: return "separable";
    case Family::FluctuationExample: return "fluctuation-example";
    case Family::Figure1: return "figure1";
    case Family::Custom: return "custom";
  }
  return "unknown";
}

GrowthModel::GrowthModel(ModelDefinition def) : def_(std::move(def)) {
  if (def_.dim != 1 && def_.dim != 2)
    throw ConfigError("model '" + def_.name + "': dimension must be 1 or 2");
  if (!def_.rate && def_.terms.empty())
    throw ConfigError("model '" + def_.name + "': no rate function");
}

double GrowthModel::raw_rate(const Trait& x, double s, double I) const {
  if (def_.terms.empty()) return def_.rate(x, s, I);
  double r = 0.0;
  for (const auto& term : def_.terms) r += term.trait(x) * term.env(s, I);
  return r;
}

double GrowthModel::rate(const Trait& x, double s, double I) const {
  if (!(I >= 0.0)) throw DomainError("rate evaluated at negative resource: " + describe(x, s, I));
  const double w = wrap_phase(s);
  const double r = raw_rate(x, w, I);
  if (!std::isfinite(r))
    throw ModelError("model '" + def_.name + "' returned non-finite rate at " + describe(x, s, I));
  return r;
}

Trait GrowthModel::rate_dx(const Trait& x, double s, double I) const {
  const double w = wrap_phase(s);
  if (def_.rate_dx) return def_.rate_dx(x, w, I);
  if (!def_.terms.empty()) {
    Trait g = Trait::zeros(def_.dim);
    for (const auto& term : def_.terms) {
      const double e = term.env(w, I);
      if (e != 0.0) g += e * term.trait_gradient(x);
    }
    return g;
  }
  Trait g = Trait::zeros(def_.dim);
  for (std::size_t d = 0; d < def_.dim; ++d) {
    const double step = fd_step(x[d]);
    Trait xp = x, xm = x;
    xp[d] += step;
    xm[d] -= step;
    g[d] = (rate(xp, w, I) - rate(xm, w, I)) / (2.0 * step);
  }
  return g;
}

double GrowthModel::rate_dI(const Trait& x, double s, double I) const {
  const double w = wrap_phase(s);
  if (def_.rate_dI) return def_.rate_dI(x, w, I);
  if (!def_.terms.empty()) {
    double r = 0.0;
    for (const auto& term : def_.terms) r += term.trait(x) * term.env_dI(w, I);
    return r;
  }
  const double step = fd_step(I);
  if (I < step) return (rate(x, w, I + step) - rate(x, w, I)) / step;
  return (rate(x, w, I + step) - rate(x, w, I - step)) / (2.0 * step);
}

double GrowthModel::uptake(const Trait& x) const {
  if (!def_.uptake) return 1.0;
  const double v = def_.uptake(x);
  if (!std::isfinite(v) || !(v > 0.0))
    throw ModelError("model '" + def_.name + "' has non-positive uptake at x=" + to_string(x));
  return v;
}

double GrowthModel::zero_resource_margin(const Trait& x) const {
  constexpr int panels = 512;
  const double ds = 1.0 / panels;
  double sum = 0.0;
  for (int k = 0; k <= panels; ++k) {
    const double w = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += w * rate(x, k * ds, 0.0);
  }
  return sum * ds / 3.0;
}

// --- presets -------------------------------------------------------------------------------

GrowthModel make_figure1() {
  ConcaveQuadraticParams p;
  GrowthModel base = make_concave_quadratic(p);
  ModelDefinition def = base.definition();
  def.name = "figure1";
  def.family = Family::Figure1;
  def.parameters.clear();
  return GrowthModel(std::move(def));
}

GrowthModel make_concave_quadratic(const ConcaveQuadraticParams& p) {
  if (!(p.gamma > 0.0)) throw ConfigError("concave-quadratic: gamma must be positive");
  if (!(p.a > 0.0)) throw ConfigError("concave-quadratic: a must be positive");
  if (p.psi_bump <= -1.0) throw ConfigError("concave-quadratic: psi_bump must exceed -1");
  ModelDefinition def;
  def.name = "concave-quadratic";
  def.dim = p.dim;
  def.family = Family::ConcaveQuadratic;
  const double a = p.a, gamma = p.gamma, delta = p.delta;
  def.terms.push_back(SeparatedTerm{
      [a](const Trait& x) { return a - x.norm_sq(); },
      [](const Trait& x) { return -2.0 * x; },
      [gamma](double s, double I) { return (2.0 + std::sin(kTwoPi * s)) / (I + gamma); },
      [gamma](double s, double I) {
        return -(2.0 + std::sin(kTwoPi * s)) / ((I + gamma) * (I + gamma));
      }});
  def.terms.push_back(SeparatedTerm{
      [](const Trait&) { return 1.0; },
      [](const Trait& x) { return Trait::zeros(x.dim()); },
      [delta](double, double) { return -delta; },
      [](double, double) { return 0.0; }});
  if (p.psi_bump != 0.0) {
    const double c = p.psi_bump;
    def.uptake = [c](const Trait& x) { return 1.0 + c * std::exp(-x.norm_sq()); };
  }
  def.validation_half_width = std::max(2.0, std::sqrt(a) + 0.5);
  if (delta > 0.0) def.constants.I_M = 3.0 * a / delta - gamma;
  def.parameters = {{"dim", static_cast<double>(p.dim)},
                    {"a", a},
                    {"gamma", gamma},
                    {"delta", delta},
                    {"psi_bump", p.psi_bump}};
  return GrowthModel(std::move(def));
}

namespace {

ModelDefinition separable_definition(std::string name, std::size_t dim, SeparableParts parts) {
  ModelDefinition def;
  def.name = std::move(name);
  def.dim = dim;
  def.family = Family::Separable;
  def.terms.push_back(SeparatedTerm{parts.b, parts.b_gradient, parts.B, parts.B_dI});
  const EnvFn D = parts.D, D_dI = parts.D_dI;
  def.terms.push_back(SeparatedTerm{
      [](const Trait&) { return 1.0; },
      [](const Trait& x) { return Trait::zeros(x.dim()); },
      [D](double s, double I) { return -D(s, I); },
      [D_dI](double s, double I) { return -D_dI(s, I); }});
  def.separable = std::move(parts);
  return def;
}

}  // namespace

GrowthModel make_separable_custom(std::string name, std::size_t dim, SeparableParts parts,
                                  double validation_half_width) {
  ModelDefinition def = separable_definition(std::move(name), dim, std::move(parts));
  def.validation_half_width = validation_half_width;
  return GrowthModel(std::move(def));
}

GrowthModel make_separable(const SeparableParams& p) {
  if (!(p.aB >= 0.0 && p.aB < 1.0) || !(p.aD >= 0.0 && p.aD < 1.0))
    throw ConfigError("separable: oscillation amplitudes must lie in [0, 1)");
  if (!(p.d0 > 0.0) || !(p.b0 > 0.0)) throw ConfigError("separable: b0 and d0 must be positive");
  const std::size_t dim = p.dim;
  const Trait optimum = first_axis(dim, p.xb);
  const double b0 = p.b0, aB = p.aB, d0 = p.d0, aD = p.aD;
  SeparableParts parts;
  parts.b = [b0, optimum](const Trait& x) { return b0 - (x - optimum).norm_sq(); };
  parts.b_gradient = [optimum](const Trait& x) { return -2.0 * (x - optimum); };
  parts.B = [aB](double s, double I) { return (1.0 + aB * std::sin(kTwoPi * s)) / (1.0 + I); };
  parts.B_dI = [aB](double s, double I) {
    return -(1.0 + aB * std::sin(kTwoPi * s)) / ((1.0 + I) * (1.0 + I));
  };
  parts.D = [d0, aD](double s, double I) { return d0 * (1.0 + aD * std::sin(kTwoPi * s)) * (1.0 + I); };
  parts.D_dI = [d0, aD](double s, double) { return d0 * (1.0 + aD * std::sin(kTwoPi * s)); };

  // Box on which b stays above 1.5x the level that keeps R(x, s, 0) > 0 for every phase.
  const double b_floor = 1.5 * d0 * (1.0 + aD) / (1.0 - aB);
  double width = 0.5;
  if (b_floor < b0) {
    const double budget = b0 - b_floor;  // (w + |xb|)^2 + (dim - 1) w^2 <= budget
    const double xb = std::abs(p.xb);
    const double qa = static_cast<double>(dim), qb = 2.0 * xb, qc = xb * xb - budget;
    width = (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
    if (!(width > 0.0)) width = 0.5;
  }
  ModelDefinition def = separable_definition("separable", dim, std::move(parts));
  def.validation_half_width = width;
  def.parameters = {{"dim", static_cast<double>(dim)}, {"b0", b0}, {"xb", p.xb},
                    {"aB", aB}, {"d0", d0}, {"aD", aD}};
  return GrowthModel(std::move(def));
}

GrowthModel make_fluctuation(const FluctuationParams& p) {
  if (!(p.p > 0.0 && p.p <= 1.0)) throw ConfigError("fluctuation-example: need 0 < p <= 1");
  if (!(std::abs(p.a) < 1.0)) throw ConfigError("fluctuation-example: need |a| < 1");
  if (!(p.b0 > 0.0)) throw ConfigError("fluctuation-example: b0 must be positive");
  const double b0 = p.b0, a = p.a, q = p.p;
  FluctuationParts fl;
  fl.D1 = [a](double s) { return 1.0 + a * std::sin(kTwoPi * s); };
  fl.D2 = [q](double I) { return q == 1.0 ? I : std::pow(I, q); };
  fl.D2_dI = [q](double I) { return q == 1.0 ? 1.0 : q * std::pow(I, q - 1.0); };
  fl.D2_concave = true;

  SeparableParts parts;
  parts.b = [b0](const Trait& x) { return b0 - x.norm_sq(); };
  parts.b_gradient = [](const Trait& x) { return -2.0 * x; };
  parts.B = [](double, double) { return 1.0; };
  parts.B_dI = [](double, double) { return 0.0; };
  parts.D = [D1 = fl.D1, D2 = fl.D2](double s, double I) { return D1(s) * D2(I); };
  parts.D_dI = [D1 = fl.D1, D2p = fl.D2_dI](double s, double I) { return D1(s) * D2p(I); };

  ModelDefinition def = separable_definition("fluctuation-example", p.dim, std::move(parts));
  def.family = Family::FluctuationExample;
  def.fluctuation = std::move(fl);
  def.validation_half_width = std::sqrt(b0 / (2.0 * static_cast<double>(p.dim)));
  def.parameters = {{"dim", static_cast<double>(p.dim)}, {"b0", b0}, {"a", a}, {"p", q}};
  return GrowthModel(std::move(def));
}

namespace {

double take(std::map<std::string, double>& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  const double v = it->second;
  params.erase(it);
  return v;
}

std::size_t take_dim(std::map<std::string, double>& params) {
  const double d = take(params, "dim", 1.0);
  if (d != 1.0 && d != 2.0) throw ConfigError("preset parameter 'dim' must be 1 or 2");
  return static_cast<std::size_t>(d);
}

void reject_leftovers(std::string_view preset, const std::map<std::string, double>& params) {
  if (params.empty()) return;
  throw ConfigError("unknown parameter '" + params.begin()->first + "' for preset '" +
                    std::string(preset) + "'");
}

}  // namespace

GrowthModel make_preset(std::string_view name, const std::map<std::string, double>& in) {
  auto params = in;
  if (name == "figure1") {
    reject_leftovers(name, params);
    return make_figure1();
  }
  if (name == "concave-quadratic") {
    ConcaveQuadraticParams p;
    p.dim = take_dim(params);
    p.a = take(params, "a", p.a);
    p.gamma = take(params, "gamma", p.gamma);
    p.delta = take(params, "delta", p.delta);
    p.psi_bump = take(params, "psi_bump", p.psi_bump);
    reject_leftovers(name, params);
    return make_concave_quadratic(p);
  }
  if (name == "separable") {
    SeparableParams p;
    p.dim = take_dim(params);
    p.b0 = take(params, "b0", p.b0);
    p.xb = take(params, "xb", p.xb);
    p.aB = take(params, "aB", p.aB);
    p.d0 = take(params, "d0", p.d0);
    p.aD = take(params, "aD", p.aD);
    reject_leftovers(name, params);
    return make_separable(p);
  }
  if (name == "fluctuation-example") {
    FluctuationParams p;
    p.dim = take_dim(params);
    p.b0 = take(params, "b0", p.b0);
    p.a = take(params, "a", p.a);
    p.p = take(params, "p", p.p);
    reject_leftovers(name, params);
    return make_fluctuation(p);
  }
  throw ConfigError("unknown model preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
  return {"figure1", "concave-quadratic", "separable", "fluctuation-example"};
}

GrowthModel make_custom(std::string name, std::size_t dim, RateFn rate, TraitFn uptake,
                        double validation_half_width) {
  ModelDefinition def;
  def.name = std::move(name);
  def.dim = dim;
  def.family = Family::Custom;
  def.rate = std::move(rate);
  def.uptake = std::move(uptake);
  def.validation_half_width = validation_half_width;
  return GrowthModel(std::move(def));
}

// --- validation ------------------------------------------------------------------------------

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AssumptionCheck* ValidationReport::find(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

struct Samples {
  std::vector<Trait> traits;
  std::vector<double> phases;
};

Samples make_samples(std::size_t dim, double half_width, const ValidationOptions& opts) {
  Samples out;
  const std::size_t n = opts.trait_samples ? opts.trait_samples : (dim == 1 ? 64 : 24);
  auto coord = [&](std::size_t i) {
    return -half_width + 2.0 * half_width * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  if (dim == 1) {
    for (std::size_t i = 0; i < n; ++i) out.traits.emplace_back(coord(i));
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out.traits.emplace_back(coord(i), coord(j));
  }
  for (std::size_t k = 0; k < opts.phase_samples; ++k)
    out.phases.push_back(static_cast<double>(k) / static_cast<double>(opts.phase_samples));
  return out;
}

std::vector<double> resource_levels(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  for (std::size_t k = 0; k < n; ++k)
    out.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
  return out;
}

// Smallest I > 0 with f(I) = 0 for a function decreasing through zero; nullopt if f(0) <= 0
// or no sign change up to 2^60.
template <typename F>
std::optional<double> decreasing_root(F&& f) {
  if (!(f(0.0) > 0.0)) return std::nullopt;
  double lo = 0.0, hi = 1.0;
  int grow = 0;
  while (f(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 60) return std::nullopt;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SymMatrix rate_hessian(const GrowthModel& m, const Trait& x, double s, double I) {
  const double step = 1e-3;
  const double r0 = m.rate(x, s, I);
  SymMatrix h;
  h.dim = m.dim();
  auto shifted = [&](double d0, double d1) {
    Trait y = x;
    y[0] += d0;
    if (m.dim() == 2) y[1] += d1;
    return m.rate(y, s, I);
  };
  h.a00 = (shifted(step, 0) - 2.0 * r0 + shifted(-step, 0)) / (step * step);
  if (m.dim() == 2) {
    h.a11 = (shifted(0, step) - 2.0 * r0 + shifted(0, -step)) / (step * step);
    h.a01 = (shifted(step, step) - shifted(step, -step) - shifted(-step, step) +
             shifted(-step, -step)) /
            (4.0 * step * step);
  }
  return h;
}

AssumptionCheck check_uptake(const GrowthModel& model, const Samples& smp) {
  AssumptionCheck c{"as3", true, 0.0, "", std::nullopt};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& x : smp.traits) {
    double v;
    try {
      v = model.uptake(x);
    } catch (const ModelError&) {
      v = 0.0;
    }
    if (v < lo) {
      lo = v;
      c.location = x;
    }
    hi = std::max(hi, v);
  }
  c.passed = lo > 0.0;
  c.margin = lo;
  std::ostringstream os;
  os << "psi in [" << lo << ", " << hi << "]";
  c.detail = os.str();
  return c;
}

void validate_concave(const GrowthModel& model, const InitialDatum& datum, const Samples& smp,
                      const ValidationOptions& opts, ValidationReport& rep) {
  // (as2): survival level I_M and non-empty viability set.
  auto max_rate = [&](double I) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& x : smp.traits)
      for (double s : smp.phases) best = std::max(best, model.rate(x, s, I));
    return best;
  };
  const auto I_M = decreasing_root(max_rate);
  std::vector<double> margins;
  margins.reserve(smp.traits.size());
  double best_margin = -std::numeric_limits<double>::infinity();
  std::optional<Trait> best_x;
  std::size_t viable = 0;
  for (const auto& x : smp.traits) {
    const double mu = model.zero_resource_margin(x);
    margins.push_back(mu);
    if (mu > 1e-9) {
      ++viable;
      rep.trait_bound = std::max(rep.trait_bound, x.norm());
    }
    if (mu > best_margin) {
      best_margin = mu;
      best_x = x;
    }
  }
  {
    AssumptionCheck c{"as2", I_M.has_value() && viable > 0, best_margin, "", best_x};
    std::ostringstream os;
    if (!I_M) os << "no resource level makes max R vanish; ";
    if (viable == 0) os << "viability set is empty (max mu = " << best_margin << ")";
    else os << viable << " viable samples, max mu = " << best_margin;
    c.detail = os.str();
    rep.checks.push_back(c);
    if (I_M) rep.constants["I_M"] = *I_M;
    rep.constants["mu_max"] = best_margin;
  }
  const double I_top = I_M.value_or(1.0);
  const auto levels = resource_levels(0.0, I_top, opts.resource_samples);

  // (as1): uniform strict concavity in x.
  double K1 = -std::numeric_limits<double>::infinity();
  double K2 = std::numeric_limits<double>::infinity();
  std::optional<Trait> worst_concave;
  for (const auto& x : smp.traits)
    for (double s : smp.phases)
      for (double I : levels) {
        const SymMatrix h = rate_hessian(model, x, s, I);
        K1 = std::max(K1, -h.min_eigenvalue());
        if (-h.max_eigenvalue() < K2) {
          K2 = -h.max_eigenvalue();
          worst_concave = x;
        }
      }
  {
    AssumptionCheck c{"as1", K2 > 0.0, K2, "", worst_concave};
    std::ostringstream os;
    os << "D_x^2 R in [" << -K1 << ", " << -K2 << "]";
    c.detail = os.str();
    rep.checks.push_back(c);
    rep.constants["K1"] = K1;
    rep.constants["K2"] = K2;
    double K3 = std::numeric_limits<double>::infinity();
    double K4 = -std::numeric_limits<double>::infinity();
    for (const auto& x : smp.traits)
      for (double s : smp.phases)
        for (double I : levels) {
          const double r = model.rate(x, s, I);
          K3 = std::min(K3, r + K1 * x.norm_sq());
          K4 = std::max(K4, r + K2 * x.norm_sq());
        }
    rep.constants["K3"] = K3;
    rep.constants["K4"] = K4;
  }

  // (as11): monotone decrease in I over the viable traits.
  double K5 = -std::numeric_limits<double>::infinity();
  double K6 = std::numeric_limits<double>::infinity();
  std::optional<Trait> worst_mono;
  for (std::size_t i = 0; i < smp.traits.size(); ++i) {
    if (!(margins[i] > 1e-9)) continue;
    const Trait& x = smp.traits[i];
    for (double s : smp.phases)
      for (double I : levels) {
        const double d = model.rate_dI(x, s, I);
        K5 = std::max(K5, -d);
        if (-d < K6) {
          K6 = -d;
          worst_mono = x;
        }
      }
  }
  {
    const bool any = worst_mono.has_value();
    AssumptionCheck c{"as11", any && K6 > 0.0, any ? K6 : 0.0, "", worst_mono};
    std::ostringstream os;
    if (any) os << "D_I R in [" << -K5 << ", " << -K6 << "] over viable traits";
    else os << "no viable traits to sample";
    c.detail = os.str();
    rep.checks.push_back(c);
    if (any) {
      rep.constants["K5"] = K5;
      rep.constants["K6"] = K6;
    }
  }

  rep.checks.push_back(check_uptake(model, smp));

  // (as:com): the datum's Hessian is -2 c Id; pick the tightest admissible L1 >= 2c >= L2.
  {
    const double hess = 2.0 * datum.curvature;
    AssumptionCheck c{"as:com", false, 0.0, "", std::nullopt};
    if (datum.curvature > 0.0 && K2 > 0.0 && std::isfinite(K1)) {
      const double L1 = std::max(hess, 0.5 * std::sqrt(K1));
      const double L2 = std::min(hess, 0.5 * std::sqrt(K2));
      c.passed = 4.0 * L2 * L2 <= K2 * (1.0 + 1e-12) && K1 <= 4.0 * L1 * L1 * (1.0 + 1e-12);
      c.margin = L2;
      rep.constants["L1"] = L1;
      rep.constants["L2"] = L2;
      std::ostringstream os;
      os << "4 L2^2 = " << 4.0 * L2 * L2 << " <= K2 = " << K2 << " <= K1 = " << K1
         << " <= 4 L1^2 = " << 4.0 * L1 * L1;
      c.detail = os.str();
    } else {
      c.detail = "needs positive datum curvature and strict concavity";
    }
    rep.checks.push_back(c);
  }

  // x0 must be viable.
  if (datum.center.dim() == model.dim()) {
    const double mu0 = model.zero_resource_margin(datum.center);
    AssumptionCheck c{"x0-viable", mu0 > 0.0, mu0, "", datum.center};
    c.detail = "mu(x0) = " + std::to_string(mu0);
    rep.checks.push_back(c);
  }
}

void validate_separable(const GrowthModel& model, const Samples& smp,
                        const ValidationOptions& opts, ValidationReport& rep) {
  const SeparableParts& parts = *model.separable();
  rep.checks.push_back(check_uptake(model, smp));

  // (maxR): resource levels bracketing the dynamics.
  auto extreme = [&](double I, bool want_max) {
    double v = want_max ? -std::numeric_limits<double>::infinity()
                        : std::numeric_limits<double>::infinity();
    for (const auto& x : smp.traits)
      for (double s : smp.phases) {
        const double r = model.rate(x, s, I);
        v = want_max ? std::max(v, r) : std::min(v, r);
      }
    return v;
  };
  const auto I_tM = decreasing_root([&](double I) { return extreme(I, true); });
  const auto I_tm = decreasing_root([&](double I) { return extreme(I, false); });
  {
    const bool ok = I_tM && I_tm && *I_tm > 0.0 && *I_tm < *I_tM;
    AssumptionCheck c{"maxR", ok, ok ? *I_tM - *I_tm : 0.0, "", std::nullopt};
    std::ostringstream os;
    if (I_tm) os << "I~_m = " << *I_tm;
    else os << "min R(., ., 0) <= 0, no positive I~_m";
    os << ", ";
    if (I_tM) os << "I~_M = " << *I_tM;
    else os << "no I~_M";
    c.detail = os.str();
    rep.checks.push_back(c);
    if (I_tm) rep.constants["I_tilde_m"] = *I_tm;
    if (I_tM) rep.constants["I_tilde_M"] = *I_tM;
  }
  const double lo = I_tm.value_or(0.0) / 2.0;
  const double hi = 2.0 * I_tM.value_or(1.0);
  const auto levels = resource_levels(lo, hi, opts.resource_samples);

  // (as:S): positivity of B, D and of b on the box.
  {
    double minB = std::numeric_limits<double>::infinity();
    double minD = minB;
    for (double s : smp.phases)
      for (double I : levels) {
        minB = std::min(minB, parts.B(s, I));
        minD = std::min(minD, parts.D(s, I));
      }
    double bm = std::numeric_limits<double>::infinity(), bM = -bm;
    std::optional<Trait> worst;
    for (const auto& x : smp.traits) {
      const double v = parts.b(x);
      if (v < bm) {
        bm = v;
        worst = x;
      }
      bM = std::max(bM, v);
    }
    const double margin = std::min({minB, minD, bm});
    AssumptionCheck c{"as:S", margin > 0.0, margin, "", worst};
    std::ostringstream os;
    os << "min B = " << minB << ", min D = " << minD << ", b in [" << bm << ", " << bM << "]";
    c.detail = os.str();
    rep.checks.push_back(c);
    rep.constants["b_m"] = bm;
    rep.constants["b_M"] = bM;
  }

  // (as:SI): B non-increasing and D strictly increasing in I.
  {
    double maxBI = -std::numeric_limits<double>::infinity();
    double minDI = std::numeric_limits<double>::infinity();
    std::string where_B, where_D;
    const auto all_levels = resource_levels(lo, hi, opts.resource_samples);
    for (double s : smp.phases)
      for (double I : all_levels) {
        const double bI = parts.B_dI(s, I);
        const double dI = parts.D_dI(s, I);
        if (bI > maxBI) {
          maxBI = bI;
          where_B = "s=" + std::to_string(s) + ", I=" + std::to_string(I);
        }
        if (dI < minDI) {
          minDI = dI;
          where_D = "s=" + std::to_string(s) + ", I=" + std::to_string(I);
        }
      }
    const double a1 = -maxBI, a2 = minDI;
    AssumptionCheck c{"as:SI", a1 >= 0.0 && a2 > 0.0, std::min(a1, a2), "", std::nullopt};
    std::ostringstream os;
    os << "max D_I B = " << maxBI << " at " << where_B << "; min D_I D = " << minDI << " at "
       << where_D;
    c.detail = os.str();
    rep.checks.push_back(c);
    rep.constants["a1"] = a1;
    rep.constants["a2"] = a2;
  }

  // (as:psimax): unique maximiser of b on the sampled box.
  {
    double best = -std::numeric_limits<double>::infinity();
    Trait arg;
    for (const auto& x : smp.traits) {
      const double v = parts.b(x);
      if (v > best) {
        best = v;
        arg = x;
      }
    }
    const double spacing = smp.traits.size() > 1
                               ? std::abs(smp.traits[1][model.dim() - 1] - smp.traits[0][model.dim() - 1])
                               : 1.0;
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    bool unique = true;
    for (const auto& x : smp.traits)
      if (best - parts.b(x) <= tol && distance(x, arg) > 2.5 * spacing) unique = false;
    AssumptionCheck c{"as:psimax", unique, unique ? 1.0 : 0.0, "", arg};
    c.detail = unique ? "unique maximiser of b" : "several separated maximisers of b";
    rep.checks.push_back(c);
    for (const auto& x : smp.traits)
      if (parts.b(x) > 0.0) rep.trait_bound = std::max(rep.trait_bound, x.norm());
  }
}

}  // namespace

ValidationReport validate_assumptions(const GrowthModel& model, const InitialDatum& datum,
                                      double half_width, const ValidationOptions& opts) {
  ValidationReport rep;
  rep.family = model.family();
  const Samples smp = make_samples(model.dim(), half_width, opts);
  try {
    if (model.separable()) validate_separable(model, smp, opts, rep);
    else validate_concave(model, datum, smp, opts, rep);
  } catch (const Error& e) {
    rep.checks.push_back(AssumptionCheck{"evaluation", false, 0.0, e.what(), std::nullopt});
  }
  return rep;
}

Field initial_field(const InitialDatum& datum, const TraitGrid& grid, double eps,
                    const GrowthModel& model) {
  grid.validate();
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (datum.center.dim() != grid.dim || !grid.contains(datum.center))
    throw ConfigError("initial center " + to_string(datum.center) + " is outside the grid");
  if (!(datum.curvature > 0.0)) throw ConfigError("initial curvature must be positive");
  if (!(datum.mass > 0.0)) throw ConfigError("initial mass must be positive");

  Field u(grid.size());
  std::vector<double> log_psi(grid.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const Trait x = grid.point(k);
    u[k] = -datum.curvature * (x - datum.center).norm_sq();
    log_psi[k] = std::log(model.uptake(x));
  }
  const double target = datum.mass * model.uptake(datum.center);
  if (const auto I_M = model.constants().I_M; I_M && target > *I_M)
    throw ConfigError("unattainable initial resource " + std::to_string(target) +
                      " exceeds I_M = " + std::to_string(*I_M));
  // ln I(c) = c / eps + ln I(0) is linear in c, so one Newton step is exact.
  const double shift = eps * (std::log(target) - log_integral(u, log_psi, grid, eps));
  for (double& v : u) v += shift;

  const double top = *std::max_element(u.begin(), u.end());
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (grid.on_boundary(k) && u[k] > top - 20.0 * eps)
      throw ConfigError("domain too small: initial datum is not negligible at the box edge");
  }
  return u;
}

}  // namespace hjlab
