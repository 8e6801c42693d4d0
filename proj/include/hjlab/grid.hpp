#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "hjlab/trait.hpp"

namespace hjlab {

/// Uniform tensor grid on the box [-half_width, half_width]^dim.
struct TraitGrid {
  std::size_t dim = 1;
  std::size_t nodes = 1024;  // per dimension
  double half_width = 2.0;

  void validate() const;

  double spacing() const { return 2.0 * half_width / static_cast<double>(nodes - 1); }
  std::size_t size() const { return dim == 1 ? nodes : nodes * nodes; }
  double coord(std::size_t i) const { return -half_width + static_cast<double>(i) * spacing(); }
  double cell_volume() const;

  std::array<std::size_t, 2> unflatten(std::size_t flat) const;
  std::size_t flatten(std::size_t i0, std::size_t i1 = 0) const {
    return dim == 1 ? i0 : i0 * nodes + i1;
  }
  Trait point(std::size_t flat) const;
  bool on_boundary(std::size_t flat) const;
  bool contains(const Trait& x) const;
};

using Field = std::vector<double>;

/// ln( sum_k w_k exp(u_k / eps) * h^N ) evaluated with a shifted exponent.
/// `log_weights` may be empty (all weights 1).
double log_integral(std::span<const double> u, std::span<const double> log_weights,
                    const TraitGrid& grid, double eps);

/// Mean of g under the weights w_k exp(u_k / eps), computed with shifted exponents.
double weighted_mean(std::span<const double> u, std::span<const double> log_weights,
                     std::span<const double> g, double eps);

struct GridMax {
  std::size_t node = 0;  // lexicographically smallest maximal node
  Trait position;        // sub-grid refined argmax
  double value = 0.0;    // refined maximum value
  double node_value = 0.0;
  bool plateau = false;  // another node ties the maximum
};

/// Argmax with per-dimension three-point quadratic refinement.
GridMax locate_max(std::span<const double> u, const TraitGrid& grid);

/// Centered second differences at an interior node (one-sided stencil moved inward at edges).
SymMatrix hessian_at(std::span<const double> u, const TraitGrid& grid, std::size_t node);

/// Range of the per-dimension second differences over nodes with u >= max u - band.
std::array<double, 2> second_difference_range(std::span<const double> u, const TraitGrid& grid,
                                              double band);

/// Monotone upwind approximation of |p|^2 for u_t = |Du|^2 in one direction.
inline double upwind_gradient_sq(double p_minus, double p_plus) {
  const double a = p_minus < 0.0 ? p_minus : 0.0;
  const double b = p_plus > 0.0 ? p_plus : 0.0;
  return a * a > b * b ? a * a : b * b;
}

/// Spatial operator source + H(Du) + eps * Lap(u) for the Hopf-Cole equation.
/// Edges use linear extrapolation for the ghost nodes. Returns max |one-sided slope|
/// summed over dimensions, the quantity controlling the advective CFL limit.
///
/// order 2 replaces the one-sided differences by second-order ENO differences (the
/// smaller second difference is used; edges reuse the nearest interior one). The flux is
/// the same, but the scheme is no longer monotone.
double hamiltonian_rhs(std::span<const double> u, std::span<const double> source,
                       const TraitGrid& grid, double eps, std::span<double> out, int order = 1);

/// Max over nodes of the summed one-sided slopes; used for CFL estimates.
double max_slope(std::span<const double> u, const TraitGrid& grid);

/// cfl * min(h^2 / (2 N eps), h / (2 max_slope_sum)). With cfl <= 0.5 the forward Euler
/// step of hamiltonian_rhs is monotone.
double stable_time_step(double max_slope_sum, const TraitGrid& grid, double eps, double cfl);

}  // namespace hjlab
