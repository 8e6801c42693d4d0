#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hjlab/cell.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/model.hpp"

namespace hjlab {

struct AMapResult {
  Trait value;
  double gradient_norm = 0.0;  // |D_1 R(A(x), x)|
  bool newton_converged = false;
};

/// Maximiser of R(., x): grid argmax refined by Newton on D_1 R = 0 with a finite-difference
/// Hessian. Falls back to the grid argmax (flagged) when Newton does not converge.
AMapResult a_map(const Fitness& ef, const Trait& x, const TraitGrid& grid);

enum class EsdStatus { Converged, NotConverged, Diverged };
std::string_view to_string(EsdStatus s);

struct EsdResult {
  EsdStatus status = EsdStatus::NotConverged;
  Trait xbar_inf;
  double rho_inf = std::nan("");
  double self_fitness = 0.0;  // |R(xbar, xbar)|
  double max_fitness = 0.0;   // max over grid nodes of R(x, xbar)
  double step_residual = 0.0; // |A(xbar) - xbar|
  int iterations = 0;
  std::vector<Trait> trace;
  bool newton_fallback = false;
};

struct EsdOptions {
  double gamma = 0.5;
  double tolerance = 1e-8;
  int max_iterations = 200;
};

/// Damped iteration x <- x + gamma (A(x) - x). Oscillating or divergent runs are reported
/// through the status, not thrown; an iterate leaving the viable set throws DomainError.
EsdResult esd_fixed_point(const Fitness& ef, const Trait& x_init, const TraitGrid& grid,
                          const EsdOptions& opts = {});

struct SeparableLimit {
  Trait x_star;
  double F_star = 0.0;
  double rho_star = 0.0;
  PeriodicOrbit orbit;
};

/// x* = argmax b (grid + Newton), F* = b(x*), rho* = mean of the level orbit at F* over psi(x*).
/// Two separated grid maxima within tolerance throw AssumptionError.
SeparableLimit separable_limit(const GrowthModel& model, const TraitGrid& grid,
                               const OrbitOptions& opts = {});

struct FluctuationReport {
  Trait x_star;
  double b_star = 0.0;
  double rho_star = 0.0;
  double rho_av = 0.0;
  double D1_av = 0.0;
  double D2_mean = 0.0;  // int D2(I(s)) ds
  double gap = 0.0;      // rho_star - rho_av
  double cs_gap = 0.0;   // D1_av int D2(I) - b(x*) >= 0
  std::array<double, 2> identity_residuals{};
};

/// Compares the oscillating ESD mass with the averaged model's. Throws ConfigError when the
/// averaged root is not bracketed.
FluctuationReport fluctuation_compare(const GrowthModel& model, const TraitGrid& grid,
                                      const OrbitOptions& opts = {});

void write_esd_json(const std::filesystem::path& path, const EsdResult& r);
void write_fluctuation_json(const std::filesystem::path& path, const FluctuationReport& r);

}  // namespace hjlab
