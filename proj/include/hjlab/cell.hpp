#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <vector>

#include "hjlab/model.hpp"

namespace hjlab {

struct OrbitOptions {
  std::size_t samples = 2048;  // M_s, RK4 steps per period; must be even
  double damping = 0.8;
  int max_iterations = 200;
  double tolerance = 1e-10;  // on |J(1) - J(0)|
  bool secant = false;       // secant updates once two iterates exist
};

/// Right-hand side of the cell problem in log variables: dJ/ds = g(s, exp(J)).
using OrbitRate = std::function<double(double s, double I)>;

/// Sampled 1-periodic positive solution of dI/ds = I g(s, I).
struct PeriodicOrbit {
  Trait anchor;                 // trait that defines the problem (dim 0 for level orbits)
  std::optional<double> level;  // F for the separable variant
  std::vector<double> values;   // I_k at s_k = k / M_s, k = 0..M_s
  std::vector<double> slopes;   // dI/ds at the same samples
  double mean = 0.0;
  double seed = 0.0;      // ln I(0)
  double residual = 0.0;  // |J(1) - J(0)|
  int iterations = 0;
  std::vector<double> seed_trace;  // fixed-point iterates
  bool degenerate = false;         // boundary orbit, I == 0

  std::size_t samples() const { return values.empty() ? 0 : values.size() - 1; }
  double phase(std::size_t k) const { return static_cast<double>(k) / static_cast<double>(samples()); }
  /// Value at an arbitrary phase (wrapped), cubic Hermite between samples.
  double at(double s) const;
  double max() const;
};

/// Weights w_k, k = 0..panels, of composite Simpson on [0, 1]. panels must be even.
std::vector<double> simpson_weights(std::size_t panels);
double simpson_integral(std::span<const double> samples);

/// Damped fixed-point iteration alpha <- alpha + damping (J(1; alpha) - alpha), RK4 in s.
PeriodicOrbit solve_periodic(const OrbitRate& g, const OrbitOptions& opts,
                             std::optional<double> seed_hint, double default_seed);

enum class Viability { Inside, Boundary, Outside };

struct ViabilityStatus {
  Viability where = Viability::Outside;
  double margin = 0.0;  // mu(x) = int_0^1 R(x, s, 0) ds
};

ViabilityStatus in_X(const GrowthModel& model, const Trait& x);

/// Cell problem anchored at a trait. Boundary anchors give the zero orbit.
PeriodicOrbit solve_orbit(const GrowthModel& model, const Trait& anchor,
                          const OrbitOptions& opts = {}, std::optional<double> seed_hint = {});

/// Separable variant dI/ds = I (F B(s, I) - D(s, I)).
PeriodicOrbit solve_level_orbit(const GrowthModel& model, double level,
                                const OrbitOptions& opts = {},
                                std::optional<double> seed_hint = {});

/// max_s I(x_j, s) along a path of anchors approaching the boundary of the viable set.
std::vector<double> boundary_decay_check(const GrowthModel& model, std::span<const Trait> path,
                                         const OrbitOptions& opts = {});

// --- effective fitness -----------------------------------------------------------------------

/// x -> R(x, y) for a fixed resident y.
class Landscape {
 public:
  virtual ~Landscape() = default;
  virtual double value(const Trait& x) const = 0;
  virtual Trait gradient(const Trait& x) const = 0;
};

using LandscapePtr = std::shared_ptr<const Landscape>;

class Fitness {
 public:
  virtual ~Fitness() = default;
  virtual std::size_t dim() const = 0;
  /// Throws DomainError when y is not an admissible resident.
  virtual LandscapePtr landscape(const Trait& y) const = 0;
  /// Ibar(y) = int_0^1 I(y, s) ds when the fitness comes from a cell problem.
  virtual std::optional<double> resident_resource(const Trait&) const { return std::nullopt; }
  /// Ibar(y) / psi(y).
  virtual std::optional<double> resident_mass(const Trait&) const { return std::nullopt; }

  double value(const Trait& x, const Trait& y) const { return landscape(y)->value(x); }
  Trait gradient(const Trait& x, const Trait& y) const { return landscape(y)->gradient(x); }
};

using FitnessPtr = std::shared_ptr<const Fitness>;

/// Closed-form fitness given by callables.
class FunctionFitness final : public Fitness {
 public:
  using ValueFn = std::function<double(const Trait& x, const Trait& y)>;
  using GradientFn = std::function<Trait(const Trait& x, const Trait& y)>;

  FunctionFitness(std::size_t dim, ValueFn value, GradientFn gradient);

  std::size_t dim() const override { return dim_; }
  LandscapePtr landscape(const Trait& y) const override;

 private:
  std::size_t dim_;
  ValueFn value_;
  GradientFn gradient_;
};

/// R(x, y) = int_0^1 R(x, s, I(y, s)) ds with a cache of resident orbits.
///
/// The cache is keyed by the anchor rounded to `quantum`. A hit requires the exact anchor;
/// a miss on an occupied key re-solves warm-started from the stored seed and replaces the
/// entry, so each key holds at most one orbit. Reads are concurrent, writes serialised.
class EffectiveFitness final : public Fitness {
 public:
  explicit EffectiveFitness(ModelPtr model, OrbitOptions opts = {}, double quantum = 1e-6,
                            std::size_t capacity = 1 << 14);

  std::size_t dim() const override { return model_->dim(); }
  LandscapePtr landscape(const Trait& y) const override;
  std::optional<double> resident_resource(const Trait& y) const override;
  std::optional<double> resident_mass(const Trait& y) const override;

  std::shared_ptr<const PeriodicOrbit> orbit(const Trait& y) const;
  const GrowthModel& model() const { return *model_; }
  const ModelPtr& model_ptr() const { return model_; }
  const OrbitOptions& options() const { return opts_; }

  std::size_t solves() const;
  std::size_t cache_size() const;

 private:
  using Key = std::array<long long, 2>;
  Key key_of(const Trait& y) const;

  ModelPtr model_;
  OrbitOptions opts_;
  double quantum_;
  std::size_t capacity_;
  std::vector<double> weights_;

  mutable std::shared_mutex mutex_;
  mutable std::map<Key, std::shared_ptr<const PeriodicOrbit>> cache_;
  mutable std::optional<double> last_seed_;
  mutable std::size_t solves_ = 0;
};

double effective_fitness(const Fitness& ef, const Trait& x, const Trait& y);
Trait effective_fitness_d1(const Fitness& ef, const Trait& x, const Trait& y);

/// Separable closed form (int_0^1 D(s, I(F, s)) ds) (b(x) / F - 1).
double separable_fitness(const GrowthModel& model, const Trait& x, double level,
                         const OrbitOptions& opts = {});

// --- export ----------------------------------------------------------------------------------

void write_orbit_csv(const std::filesystem::path& path, const PeriodicOrbit& orbit);

/// Grid of (x, y, R_eff) rows; N = 2 uses columns x0, x1, y0, y1, R_eff.
void write_surface_csv(const std::filesystem::path& path, const Fitness& ef,
                       std::span<const Trait> xs, std::span<const Trait> ys);

}  // namespace hjlab
