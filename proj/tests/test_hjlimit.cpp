#include <cmath>

#include "doctest.h"

#include "hjlab/errors.hpp"
#include "hjlab/hjlimit.hpp"

using namespace hjlab;

namespace {
// R(x, y) = -4 |x - y|^2 + 2 c . (x - y): u = -|x - c t|^2 is an exact solution.
std::shared_ptr<const FunctionFitness> drift_fitness(Trait c) {
  return std::make_shared<const FunctionFitness>(
      c.dim(),
      [c](const Trait& x, const Trait& y) {
        const Trait d = x - y;
        return -4.0 * d.norm_sq() + 2.0 * dot(c, d);
      },
      [c](const Trait& x, const Trait& y) { return -8.0 * (x - y) + 2.0 * c; });
}
}  // namespace

TEST_CASE("canonical step with constant gradient") {
  const auto ef = drift_fitness(Trait(0.5));
  const SymMatrix M = SymMatrix::scaled_identity(1, -2.0);
  // xbar' = (2)^{-1} * 1 = 0.5
  const Trait x = canonical_step(*ef, Trait(0.0), M, 0.1);
  CHECK(x[0] == doctest::Approx(0.05).epsilon(1e-14));
  CHECK_THROWS_AS(canonical_step(*ef, Trait(0.0), SymMatrix::scaled_identity(1, 1.0), 0.1),
                  SolverError);
}

TEST_CASE("canonical ansatz mode uses -2F") {
  const auto ef = drift_fitness(Trait(0.5, -0.25));
  const auto mode = CanonicalMode::ansatz([](const Trait&) { return 0.5; });
  // M = -Id, so xbar' = D1 R = (1, -0.5)
  const Trait x = canonical_step(*ef, Trait(0.0, 0.0), SymMatrix{}, 0.2, mode);
  CHECK(x[0] == doctest::Approx(0.2));
  CHECK(x[1] == doctest::Approx(-0.1));
}

TEST_CASE("hj run follows the exact travelling parabola") {
  const auto ef = drift_fitness(Trait(0.25));
  const TraitGrid g{1, 401, 2.0};
  HjOptions o;
  o.T = 1.0;
  const HjResult r = hj_run(*ef, {Trait(0.0), 1.0, 1.0}, g, o);
  CHECK(std::abs(r.xbar[0] - 0.25) <= 2.0 * g.spacing());
  CHECK(r.max_drift <= 1e-3);
  CHECK(r.max_tracker_gap <= 5.0 * g.spacing());
  for (std::size_t k = 0; k < g.size(); k += 40) {
    const double x = g.coord(k);
    CHECK(std::abs(r.u[k] + (x - 0.25) * (x - 0.25)) <= 5.0 * g.spacing());
  }
}

TEST_CASE("first-order scheme also converges on the parabola") {
  const auto ef = drift_fitness(Trait(0.25));
  const TraitGrid g{1, 401, 2.0};
  HjOptions o;
  o.T = 0.5;
  o.order = 1;
  const HjResult r = hj_run(*ef, {Trait(0.0), 1.0, 1.0}, g, o);
  CHECK(std::abs(r.xbar[0] - 0.125) <= 2.0 * g.spacing());
}

TEST_CASE("fittest trait reaching the box edge is reported") {
  const auto ef = drift_fitness(Trait(2.0));
  const TraitGrid g{1, 128, 1.0};
  HjOptions o;
  o.T = 2.0;
  CHECK_THROWS_AS(hj_run(*ef, {Trait(0.0), 1.0, 1.0}, g, o), DomainError);
}

TEST_CASE("counterexample on a coarse grid") {
  const TraitGrid g{2, 64, 1.5};
  const CounterexampleReport r = run_counterexample(rotation_fields(), 1.0, g, 1.0);
  CHECK(r.sup_error <= 5.0 * r.h);
  CHECK(r.drift <= 1e-3);
  // after t = 1 the trait sits at (cos 1, sin 1)
  HjResult res;
  run_counterexample(rotation_fields(), 1.0, g, 1.0, 2, &res);
  CHECK(distance(res.xbar, Trait(std::cos(1.0), std::sin(1.0))) <= 2.0 * r.h);
}

TEST_CASE("counterexample fitness vanishes on the diagonal") {
  const auto ef = counterexample_fitness(rotation_fields());
  for (const Trait y : {Trait(1.0, 0.0), Trait(-0.3, 0.7)}) {
    CHECK(ef->value(y, y) == 0.0);
    const Trait g = ef->gradient(y, y);
    // D1 R(y, y) = 2 F G(y)
    CHECK(g[0] == doctest::Approx(-2.0 * y[1]));
    CHECK(g[1] == doctest::Approx(2.0 * y[0]));
  }
}
