#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hjlab/grid.hpp"
#include "hjlab/trait.hpp"

namespace hjlab {

enum class Family { ConcaveQuadratic, Separable, FluctuationExample, Figure1, Custom };

std::string_view to_string(Family f);

using RateFn = std::function<double(const Trait& x, double s, double I)>;
using RateGradientFn = std::function<Trait(const Trait& x, double s, double I)>;
using TraitFn = std::function<double(const Trait& x)>;
using TraitGradientFn = std::function<Trait(const Trait& x)>;
using EnvFn = std::function<double(double s, double I)>;

/// One product term f(x) * h(s, I). A rate that is a finite sum of such terms lets the
/// effective fitness average the environment factors once per resident orbit.
struct SeparatedTerm {
  TraitFn trait;
  TraitGradientFn trait_gradient;
  EnvFn env;
  EnvFn env_dI;
};

/// R(x, s, I) = b(x) B(s, I) - D(s, I).
struct SeparableParts {
  TraitFn b;
  TraitGradientFn b_gradient;
  EnvFn B;
  EnvFn D;
  EnvFn B_dI;
  EnvFn D_dI;
};

/// R(x, s, I) = b(x) - D1(s) D2(I), the fluctuation example (psi = 1).
struct FluctuationParts {
  std::function<double(double)> D1;
  std::function<double(double)> D2;
  std::function<double(double)> D2_dI;
  bool D2_concave = true;
};

/// Constants the model declares up front. Everything is optional; validation computes
/// sampled values independently.
struct DeclaredConstants {
  std::optional<double> I_M;
  std::optional<double> I_tilde_m;
  std::optional<double> I_tilde_M;
};

struct ModelDefinition {
  std::string name;
  std::size_t dim = 1;
  Family family = Family::Custom;
  RateFn rate;                          // required unless `terms` is given
  RateGradientFn rate_dx;               // optional analytic D_x R
  RateFn rate_dI;                       // optional analytic D_I R
  TraitFn uptake;                       // psi; defaults to 1
  TraitGradientFn uptake_gradient;      // unused by solvers, kept for validation
  std::vector<SeparatedTerm> terms;     // optional sum-of-products form
  std::optional<SeparableParts> separable;
  std::optional<FluctuationParts> fluctuation;
  double validation_half_width = 2.0;   // box where the standing assumptions are checked
  DeclaredConstants constants;
  std::map<std::string, double> parameters;  // echo of preset parameters
};

/// Growth rate R(x, s, I), 1-periodic in s, with uptake psi(x). Immutable after
/// construction; safe to share between threads.
class GrowthModel {
 public:
  explicit GrowthModel(ModelDefinition def);

  const std::string& name() const { return def_.name; }
  std::size_t dim() const { return def_.dim; }
  Family family() const { return def_.family; }
  const ModelDefinition& definition() const { return def_; }

  /// R(x, s mod 1, I). Throws ModelError on a non-finite value, DomainError when I < 0.
  double rate(const Trait& x, double s, double I) const;
  Trait rate_dx(const Trait& x, double s, double I) const;
  double rate_dI(const Trait& x, double s, double I) const;
  double uptake(const Trait& x) const;

  bool has_analytic_dx() const { return static_cast<bool>(def_.rate_dx) || !def_.terms.empty(); }
  const std::vector<SeparatedTerm>& terms() const { return def_.terms; }
  bool separated() const { return !def_.terms.empty(); }

  const SeparableParts* separable() const {
    return def_.separable ? &*def_.separable : nullptr;
  }
  const FluctuationParts* fluctuation() const {
    return def_.fluctuation ? &*def_.fluctuation : nullptr;
  }

  double validation_half_width() const { return def_.validation_half_width; }
  const DeclaredConstants& constants() const { return def_.constants; }

  /// mu(x) = int_0^1 R(x, s, 0) ds (composite Simpson, 512 panels).
  double zero_resource_margin(const Trait& x) const;

 private:
  double raw_rate(const Trait& x, double s, double I) const;
  ModelDefinition def_;
};

using ModelPtr = std::shared_ptr<const GrowthModel>;

// --- presets ---------------------------------------------------------------------------

/// R = (2 + sin 2 pi s)(2 - x^2)/(I + 0.5) - 0.5, psi = 1.
GrowthModel make_figure1();

struct ConcaveQuadraticParams {
  std::size_t dim = 1;
  double a = 2.0;
  double gamma = 0.5;
  double delta = 0.5;
  double psi_bump = 0.0;  // psi(x) = 1 + psi_bump * exp(-|x|^2)
};
/// R = (2 + sin 2 pi s)(a - |x|^2)/(I + gamma) - delta.
GrowthModel make_concave_quadratic(const ConcaveQuadraticParams& p);

struct SeparableParams {
  std::size_t dim = 1;
  double b0 = 2.0;
  double xb = 0.3;  // optimum location along the first axis
  double aB = 0.3;
  double d0 = 0.2;
  double aD = 0.3;
};
/// R = b(x) B(s,I) - D(s,I), b = b0 - |x - xb|^2, B = (1 + aB sin)/(1 + I),
/// D = d0 (1 + aD sin)(1 + I).
GrowthModel make_separable(const SeparableParams& p);

/// Separable model from user-supplied parts (family tag Separable).
GrowthModel make_separable_custom(std::string name, std::size_t dim, SeparableParts parts,
                                  double validation_half_width);

struct FluctuationParams {
  std::size_t dim = 1;
  double b0 = 2.0;
  double a = 0.8;  // D1 = 1 + a sin 2 pi s
  double p = 1.0;  // D2 = I^p, 0 < p <= 1
};
/// R = b(x) - D1(s) D2(I), b = b0 - |x|^2.
GrowthModel make_fluctuation(const FluctuationParams& p);

/// Builds a preset by name ("figure1", "concave-quadratic", "separable",
/// "fluctuation-example") from a flat parameter table. Unknown names or keys throw
/// ConfigError.
GrowthModel make_preset(std::string_view name, const std::map<std::string, double>& params);

std::vector<std::string> preset_names();

/// Custom model from an opaque rate. Derivatives fall back to central differences.
GrowthModel make_custom(std::string name, std::size_t dim, RateFn rate, TraitFn uptake = {},
                        double validation_half_width = 2.0);

// --- initial data and validation ---------------------------------------------------------

/// u0(x) = -curvature |x - center|^2 + c, with c fixed by the mass target.
struct InitialDatum {
  Trait center;
  double curvature = 1.0;
  double mass = 1.0;
};

struct AssumptionCheck {
  std::string name;
  bool passed = false;
  double margin = 0.0;  // positive when satisfied
  std::string detail;
  std::optional<Trait> location;  // worst sample
};

struct ValidationReport {
  Family family = Family::Custom;
  std::vector<AssumptionCheck> checks;
  std::map<std::string, double> constants;  // sampled K_i, I_M, L_i, ...
  double trait_bound = 0.0;  // max |x| over sampled viable traits

  bool all_passed() const;
  const AssumptionCheck* find(std::string_view name) const;
};

struct ValidationOptions {
  std::size_t trait_samples = 0;  // per dimension; 0 picks 64 (1D) or 24 (2D)
  std::size_t phase_samples = 16;
  std::size_t resource_samples = 16;
};

/// Samples the standing assumptions on [-half_width, half_width]^N. Failures are report
/// entries, never exceptions.
ValidationReport validate_assumptions(const GrowthModel& model, const InitialDatum& datum,
                                      double half_width, const ValidationOptions& opts = {});

/// u0_eps on the grid, normalised so that int psi exp(u0_eps / eps) = mass * psi(center).
Field initial_field(const InitialDatum& datum, const TraitGrid& grid, double eps,
                    const GrowthModel& model);

}  // namespace hjlab
