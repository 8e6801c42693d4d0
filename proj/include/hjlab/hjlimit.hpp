#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "hjlab/cell.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/model.hpp"

namespace hjlab {

struct CanonicalMode {
  enum class Kind { Coupled, Ansatz };
  Kind kind = Kind::Coupled;
  std::function<double(const Trait&)> F;  // ansatz: M = -2 F(xbar) Id

  static CanonicalMode coupled() { return {}; }
  static CanonicalMode ansatz(std::function<double(const Trait&)> F) {
    return {Kind::Ansatz, std::move(F)};
  }
};

/// One RK4 step of xbar' = (-M)^{-1} D_1 R(xbar, xbar). Coupled mode holds M fixed over the
/// step. Throws SolverError for a singular or indefinite M.
Trait canonical_step(const Fitness& ef, const Trait& xbar, const SymMatrix& M, double dt,
                     const CanonicalMode& mode = CanonicalMode::coupled());

struct HjRecord {
  double t = 0.0;
  Trait xbar;
  double max_u = 0.0;
  SymMatrix M;
  double rho = std::nan("");    // Ibar(xbar) / psi(xbar) when the fitness has a resident mass
  double I_bar = std::nan("");  // Ibar(xbar)
  Trait canonical;              // coupled canonical tracker
};

struct HjOptions {
  double T = 1.0;
  double cfl = 0.4;
  double cadence = 0.01;
  double drift_tolerance = 1e-2;
  int order = 2;  // 1: Euler + upwind; 2: SSP-RK2 + second-order ENO differences
  bool track_canonical = true;
  std::vector<double> snapshot_times;
  std::function<void(double t, const Field& u, const Trait& xbar)> on_record;
};

struct HjResult {
  TraitGrid grid;
  Field u;
  double t = 0.0;
  Trait xbar;
  std::size_t steps = 0;
  double max_drift = 0.0;
  double max_tracker_gap = 0.0;  // sup_t |xbar_hj - xbar_canonical|
  bool plateau = false;
  std::vector<HjRecord> trajectory;
  std::vector<std::pair<double, Field>> snapshots;
};

/// Explicit stepping of u_t = R(x, xbar(t)) + |Du|^2 with xbar the sub-grid argmax of u,
/// recomputed at every stage. Drift |max u| above tolerance throws SolverError; xbar on the box boundary
/// throws DomainError.
HjResult hj_run(const Fitness& ef, const InitialDatum& datum, const TraitGrid& grid,
                const HjOptions& options);

/// R(x, y) = -(DF(y) G(y) + 4 F(y)^2) |x - y|^2 + 2 F(y) G(y) . (x - y).
struct CounterexampleFields {
  std::function<double(const Trait&)> F;
  std::function<Trait(const Trait&)> DF;
  std::function<Trait(const Trait&)> G;
};
std::shared_ptr<const FunctionFitness> counterexample_fitness(CounterexampleFields fields);
/// F = 1, G = (-x1, x0).
CounterexampleFields rotation_fields();

struct CounterexampleReport {
  double h = 0.0;
  double sup_error = 0.0;      // sup over nodes and records of |u - (-F(xbar)|x - xbar|^2)|
  double drift = 0.0;
  double return_distance = 0.0;  // |xbar(T) - xbar(0)|
  double period_estimate = 0.0;  // from the accumulated polar angle of xbar
  std::size_t steps = 0;
};

/// Runs hj_run on the counterexample from x0 = (r, 0) with u0 = -F |x - x0|^2 up to T.
CounterexampleReport run_counterexample(const CounterexampleFields& fields, double radius,
                                        const TraitGrid& grid, double T, int order = 2,
                                        HjResult* result = nullptr);

void write_trajectory_csv(const std::filesystem::path& path, const HjResult& result);
void write_counterexample_json(const std::filesystem::path& path, const CounterexampleReport& r);

}  // namespace hjlab
