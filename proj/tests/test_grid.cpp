#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "hjlab/errors.hpp"
#include "hjlab/grid.hpp"

using namespace hjlab;

TEST_CASE("grid geometry") {
  const TraitGrid g{2, 5, 1.0};
  CHECK(g.spacing() == doctest::Approx(0.5));
  CHECK(g.size() == 25);
  CHECK(g.point(g.flatten(4, 0)) == Trait(1.0, -1.0));
  CHECK(g.on_boundary(g.flatten(0, 2)));
  CHECK_FALSE(g.on_boundary(g.flatten(2, 2)));
  CHECK(g.contains(Trait(0.9, -0.2)));
  CHECK_FALSE(g.contains(Trait(1.1, 0.0)));
  CHECK_THROWS_AS((TraitGrid{3, 5, 1.0}.validate()), ConfigError);
  CHECK_THROWS_AS((TraitGrid{1, 2, 1.0}.validate()), ConfigError);
}

TEST_CASE("log integral of a Gaussian bump") {
  const TraitGrid g{1, 2001, 3.0};
  const double eps = 0.01;
  std::vector<double> u(g.size());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = 40.0 - (g.coord(k) - 0.2) * (g.coord(k) - 0.2);
  // int exp((40 - (x - 0.2)^2) / eps) dx = exp(40 / eps) sqrt(pi eps)
  const double want = 40.0 / eps + 0.5 * std::log(std::acos(-1.0) * eps);
  CHECK(log_integral(u, {}, g, eps) == doctest::Approx(want).epsilon(1e-10));
  std::vector<double> x(g.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = g.coord(k);
  CHECK(weighted_mean(u, {}, x, eps) == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("argmax refinement recovers an off-node quadratic peak") {
  const TraitGrid g{2, 41, 1.0};
  std::vector<double> u(g.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const Trait p = g.point(k);
    u[k] = -2.0 * (p[0] - 0.113) * (p[0] - 0.113) - (p[1] + 0.271) * (p[1] + 0.271);
  }
  const GridMax m = locate_max(u, g);
  CHECK(m.position[0] == doctest::Approx(0.113).epsilon(1e-12));
  CHECK(m.position[1] == doctest::Approx(-0.271).epsilon(1e-12));
  CHECK(m.value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_FALSE(m.plateau);
  const SymMatrix H = hessian_at(u, g, m.node);
  CHECK(H.a00 == doctest::Approx(-4.0));
  CHECK(H.a11 == doctest::Approx(-2.0));
  CHECK(H.a01 == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("upwind flux for u_t = |Du|^2") {
  CHECK(upwind_gradient_sq(1.0, 2.0) == 4.0);    // increasing: right slope
  CHECK(upwind_gradient_sq(-2.0, -1.0) == 4.0);  // decreasing: left slope
  CHECK(upwind_gradient_sq(1.0, -1.0) == 0.0);   // local max
  CHECK(upwind_gradient_sq(-1.0, 3.0) == 9.0);   // local min: larger one
}

TEST_CASE("hamiltonian of a quadratic is exact in the interior") {
  const TraitGrid g{1, 101, 1.0};
  std::vector<double> u(g.size()), src(g.size(), 0.0), out(g.size());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = -(g.coord(k) - 0.1) * (g.coord(k) - 0.1);
  for (int order : {1, 2}) {
    hamiltonian_rhs(u, src, g, 0.0, out, order);
    const double h = g.spacing();
    for (std::size_t k = 2; k + 2 < u.size(); ++k) {
      const double x = g.coord(k);
      const double tol = order == 1 ? 5.0 * h : 1e-10;
      CHECK(std::abs(out[k] - 4.0 * (x - 0.1) * (x - 0.1)) <= tol + 1e-12);
    }
  }
  CHECK_THROWS_AS(hamiltonian_rhs(u, src, g, 0.0, out, 3), ConfigError);
}

TEST_CASE("monotone scheme preserves order (comparison principle)") {
  const TraitGrid g{1, 201, 2.0};
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(0.0, 0.3);
  std::vector<double> a(g.size()), b(g.size()), src(g.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = g.coord(k);
    a[k] = -x * x;
    b[k] = a[k] + d(rng);
    src[k] = 1.0 - x * x;
  }
  const double eps = 0.01;
  std::vector<double> ra(g.size()), rb(g.size());
  for (int it = 0; it < 50; ++it) {
    const double dt =
        stable_time_step(std::max(max_slope(a, g), max_slope(b, g)), g, eps, 0.5);
    hamiltonian_rhs(a, src, g, eps, ra);
    hamiltonian_rhs(b, src, g, eps, rb);
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] += dt * ra[k];
      b[k] += dt * rb[k];
    }
  }
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] >= a[k] - 1e-12);
}
