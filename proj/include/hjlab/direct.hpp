#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "hjlab/cell.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/model.hpp"

namespace hjlab {

/// Evaluates x -> R(x, s, I) on every grid node. Sum-of-products models tabulate the trait
/// factors once; other models call the rate pointwise.
class SourceTable {
 public:
  SourceTable(const GrowthModel& model, const TraitGrid& grid);

  void fill(double s, double I, std::span<double> out) const;
  std::span<const double> log_psi() const { return log_psi_; }

 private:
  const GrowthModel& model_;
  std::vector<Trait> nodes_;
  std::vector<std::vector<double>> factors_;
  std::vector<double> log_psi_;
};

struct HistoryRow {
  double t = 0.0;
  double I = 0.0;
  Trait xbar;
  double rho = 0.0;
  double max_u = 0.0;
  double d2u_min = 0.0;
  double d2u_max = 0.0;
  std::optional<double> F;  // separable models only
};

struct Snapshot {
  double t = 0.0;
  Field u;
};

struct SimState {
  TraitGrid grid;
  double eps = 0.0;
  double t = 0.0;
  Field u;
  std::size_t steps = 0;
  double last_dt = 0.0;
  std::vector<HistoryRow> history;
  std::vector<Snapshot> snapshots;
};

struct DirectOptions {
  double T = 1.0;
  double cadence = 0.0;  // 0 picks eps / 16
  double cfl = 0.4;
  int substeps_per_eps = 64;
  double concavity_band = 1.0;  // region u >= max u - band for the D^2 u diagnostic
  double boundary_gap = 20.0;   // in units of eps
  std::vector<double> snapshot_times;
};

SimState make_state(const GrowthModel& model, const InitialDatum& datum, const TraitGrid& grid,
                    double eps);

/// I_eps = int psi exp(u / eps) dx with shifted exponentials.
double resource(std::span<const double> u, std::span<const double> log_psi, const TraitGrid& grid,
                double eps);

/// One SSP-RK3 step of u_t = R(x, t/eps, I_eps) + |Du|^2 + eps Lap u. I_eps is recomputed
/// from the stage field at every stage. Throws ConfigError if dt breaks the monotone limit
/// and SolverError if u stops being finite.
void step(SimState& state, const SourceTable& source, double dt);

/// Integrates to options.T recording observables every cadence.
SimState run(const GrowthModel& model, const InitialDatum& datum, const TraitGrid& grid,
             double eps, const DirectOptions& options);

/// Centered moving average over a window of total width `window`; truncated near the ends.
std::vector<double> running_average(std::span<const double> times,
                                    std::span<const double> values, double window);

/// F_eps(t) = int b psi n / I_eps for one field.
double separable_F(std::span<const double> u, const TraitGrid& grid, double eps,
                   const GrowthModel& model);
/// Recorded F_eps history. Throws DomainError for non-separable models.
std::vector<double> separable_F(const SimState& state, const GrowthModel& model);

struct Spectrum {
  double frequency = 0.0;  // dominant nonzero frequency
  std::size_t bin = 0;
  double bin_width = 0.0;
  double amplitude = 0.0;
};

/// Dominant nonzero peak of the real FFT of a uniformly sampled series restricted to t >= t0,
/// after removing a linear trend and applying a Hann window.
Spectrum dominant_frequency(std::span<const double> times, std::span<const double> values,
                            double t0);

/// sup over t in [t0, t1] of |ln I_eps - ln I(xbar_eps(t), t / eps)|.
double orbit_residual(const SimState& state, const EffectiveFitness& ef, double t0, double t1);

std::vector<double> history_column(const SimState& state, double HistoryRow::*field);
std::vector<double> history_times(const SimState& state);

void write_history_csv(const std::filesystem::path& path, const SimState& state);
void write_snapshot_csv(const std::filesystem::path& path, const SimState& state);

}  // namespace hjlab
