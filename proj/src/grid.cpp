#include "hjlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hjlab/errors.hpp"

namespace hjlab {

void TraitGrid::validate() const {
  if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
  if (nodes < 64) throw ConfigError("grid needs at least 64 nodes per dimension, got " +
                                    std::to_string(nodes));
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw ConfigError("grid half width must be positive");
}

double TraitGrid::cell_volume() const {
  const double h = spacing();
  return dim == 1 ? h : h * h;
}

std::array<std::size_t, 2> TraitGrid::unflatten(std::size_t flat) const {
  if (dim == 1) return {flat, 0};
  return {flat / nodes, flat % nodes};
}

Trait TraitGrid::point(std::size_t flat) const {
  if (dim == 1) return Trait(coord(flat));
  const auto [i0, i1] = unflatten(flat);
  return Trait(coord(i0), coord(i1));
}

bool TraitGrid::on_boundary(std::size_t flat) const {
  const auto idx = unflatten(flat);
  for (std::size_t d = 0; d < dim; ++d)
    if (idx[d] == 0 || idx[d] + 1 == nodes) return true;
  return false;
}

bool TraitGrid::contains(const Trait& x) const {
  for (std::size_t d = 0; d < x.dim(); ++d)
    if (std::abs(x[d]) > half_width) return false;
  return true;
}

double log_integral(std::span<const double> u, std::span<const double> log_weights,
                    const TraitGrid& grid, double eps) {
  const bool weighted = !log_weights.empty();
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < u.size(); ++k)
    shift = std::max(shift, u[k] / eps + (weighted ? log_weights[k] : 0.0));
  double sum = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
    sum += std::exp(u[k] / eps + (weighted ? log_weights[k] : 0.0) - shift);
  return shift + std::log(sum) + std::log(grid.cell_volume());
}

double weighted_mean(std::span<const double> u, std::span<const double> log_weights,
                     std::span<const double> g, double eps) {
  const bool weighted = !log_weights.empty();
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < u.size(); ++k)
    shift = std::max(shift, u[k] / eps + (weighted ? log_weights[k] : 0.0));
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double w = std::exp(u[k] / eps + (weighted ? log_weights[k] : 0.0) - shift);
    num += w * g[k];
    den += w;
  }
  return num / den;
}

namespace {

std::array<std::size_t, 2> strides(const TraitGrid& grid) {
  return grid.dim == 1 ? std::array<std::size_t, 2>{1, 0}
                       : std::array<std::size_t, 2>{grid.nodes, 1};
}

// Neighbour values along dimension d, with linear extrapolation past the edges.
inline void neighbours(std::span<const double> u, std::size_t k, std::size_t i, std::size_t n,
                       std::size_t stride, double& left, double& right) {
  const double c = u[k];
  if (i == 0) {
    right = u[k + stride];
    left = 2.0 * c - right;
  } else if (i + 1 == n) {
    left = u[k - stride];
    right = 2.0 * c - left;
  } else {
    left = u[k - stride];
    right = u[k + stride];
  }
}

}  // namespace

GridMax locate_max(std::span<const double> u, const TraitGrid& grid) {
  GridMax out;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k] > best) {
      best = u[k];
      out.node = k;
    }
  }
  const double tie_tol = 1e-13 * (1.0 + std::abs(best));
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (k != out.node && best - u[k] <= tie_tol) {
      out.plateau = true;
      break;
    }
  }
  out.node_value = best;
  out.position = grid.point(out.node);
  out.value = best;

  const auto idx = grid.unflatten(out.node);
  const auto st = strides(grid);
  const double h = grid.spacing();
  for (std::size_t d = 0; d < grid.dim; ++d) {
    if (idx[d] == 0 || idx[d] + 1 == grid.nodes) continue;
    const double um = u[out.node - st[d]];
    const double up = u[out.node + st[d]];
    const double curv = um - 2.0 * best + up;
    if (!(curv < 0.0)) continue;
    double delta = 0.5 * (um - up) / curv;
    delta = std::clamp(delta, -0.5, 0.5);
    out.position[d] += delta * h;
    out.value += -0.25 * (um - up) * delta;
  }
  return out;
}

SymMatrix hessian_at(std::span<const double> u, const TraitGrid& grid, std::size_t node) {
  const double h = grid.spacing();
  const auto st = strides(grid);
  auto idx = grid.unflatten(node);
  for (std::size_t d = 0; d < grid.dim; ++d)
    idx[d] = std::clamp<std::size_t>(idx[d], 1, grid.nodes - 2);
  const std::size_t k = grid.flatten(idx[0], idx[1]);
  SymMatrix m;
  m.dim = grid.dim;
  m.a00 = (u[k + st[0]] - 2.0 * u[k] + u[k - st[0]]) / (h * h);
  if (grid.dim == 2) {
    m.a11 = (u[k + st[1]] - 2.0 * u[k] + u[k - st[1]]) / (h * h);
    m.a01 = (u[k + st[0] + st[1]] - u[k + st[0] - st[1]] - u[k - st[0] + st[1]] +
             u[k - st[0] - st[1]]) /
            (4.0 * h * h);
  }
  return m;
}

std::array<double, 2> second_difference_range(std::span<const double> u, const TraitGrid& grid,
                                              double band) {
  const double top = *std::max_element(u.begin(), u.end());
  const double h2 = grid.spacing() * grid.spacing();
  const auto st = strides(grid);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k] < top - band || grid.on_boundary(k)) continue;
    for (std::size_t d = 0; d < grid.dim; ++d) {
      const double v = (u[k + st[d]] - 2.0 * u[k] + u[k - st[d]]) / h2;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

double hamiltonian_rhs(std::span<const double> u, std::span<const double> source,
                       const TraitGrid& grid, double eps, std::span<double> out, int order) {
  if (order != 1 && order != 2) throw ConfigError("spatial order must be 1 or 2");
  const double h = grid.spacing();
  const double inv_h = 1.0 / h;
  const double inv_h2 = inv_h * inv_h;
  const auto st = strides(grid);
  const std::size_t n = grid.nodes;
  // undivided second difference centred at index j along a line, j clamped to the interior
  auto second = [&](std::size_t k, std::size_t i, std::size_t stride, long j) {
    const long jc = std::clamp<long>(j, 1, static_cast<long>(n) - 2);
    const std::size_t c = k - i * stride + static_cast<std::size_t>(jc) * stride;
    return u[c + stride] - 2.0 * u[c] + u[c - stride];
  };
  auto eno = [](double a, double b) { return std::abs(a) < std::abs(b) ? a : b; };
  double slope_max = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const auto idx = grid.unflatten(k);
    double ham = 0.0, lap = 0.0, slope = 0.0;
    for (std::size_t d = 0; d < grid.dim; ++d) {
      double left, right;
      neighbours(u, k, idx[d], n, st[d], left, right);
      double pm = (u[k] - left) * inv_h;
      double pp = (right - u[k]) * inv_h;
      if (order == 2) {
        const long i = static_cast<long>(idx[d]);
        const double c0 = second(k, idx[d], st[d], i);
        pm += 0.5 * inv_h * eno(second(k, idx[d], st[d], i - 1), c0);
        pp -= 0.5 * inv_h * eno(c0, second(k, idx[d], st[d], i + 1));
      }
      ham += upwind_gradient_sq(pm, pp);
      lap += (right - 2.0 * u[k] + left) * inv_h2;
      slope += std::max(std::abs(pm), std::abs(pp));
    }
    out[k] = source[k] + ham + eps * lap;
    slope_max = std::max(slope_max, slope);
  }
  return slope_max;
}

double max_slope(std::span<const double> u, const TraitGrid& grid) {
  const double inv_h = 1.0 / grid.spacing();
  const auto st = strides(grid);
  double slope_max = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const auto idx = grid.unflatten(k);
    double slope = 0.0;
    for (std::size_t d = 0; d < grid.dim; ++d) {
      double left, right;
      neighbours(u, k, idx[d], grid.nodes, st[d], left, right);
      slope += std::max(std::abs(u[k] - left), std::abs(right - u[k])) * inv_h;
    }
    slope_max = std::max(slope_max, slope);
  }
  return slope_max;
}

double stable_time_step(double max_slope_sum, const TraitGrid& grid, double eps, double cfl) {
  const double h = grid.spacing();
  double limit = std::numeric_limits<double>::infinity();
  if (eps > 0.0) limit = h * h / (2.0 * static_cast<double>(grid.dim) * eps);
  if (max_slope_sum > 0.0) limit = std::min(limit, h / (2.0 * max_slope_sum));
  return cfl * limit;
}

}  // namespace hjlab
