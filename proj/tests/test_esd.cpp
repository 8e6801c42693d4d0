#include <cmath>

#include "doctest.h"

#include "hjlab/errors.hpp"
#include "hjlab/esd.hpp"
#include "hjlab/hjlimit.hpp"
#include "oracle.hpp"

using namespace hjlab;

namespace {
OrbitOptions fast() {
  OrbitOptions o;
  o.secant = true;
  return o;
}
}  // namespace

TEST_CASE("A-map of figure1 points at the symmetric optimum") {
  const EffectiveFitness ef(std::make_shared<const GrowthModel>(make_figure1()), fast());
  const TraitGrid g{1, 256, 2.0};
  for (double y : {-0.8, 0.3, 1.0}) {
    const AMapResult a = a_map(ef, Trait(y), g);
    CHECK(a.newton_converged);
    CHECK(std::abs(a.value[0]) <= 1e-8);
  }
}

TEST_CASE("figure1 ESD") {
  const EffectiveFitness ef(std::make_shared<const GrowthModel>(make_figure1()), fast());
  const TraitGrid g{1, 256, 2.0};
  const EsdResult r = esd_fixed_point(ef, Trait(1.0), g);
  CHECK(r.status == EsdStatus::Converged);
  CHECK(std::abs(r.xbar_inf[0]) <= 1e-6);
  CHECK(r.self_fitness <= 1e-8);
  CHECK(r.max_fitness <= 1e-8);
  CHECK(r.rho_inf == doctest::Approx(7.5).epsilon(1e-9));
  // damped by 1/2 from A = 0: x_k = 2^-k
  CHECK(r.trace[3][0] == doctest::Approx(0.125).epsilon(1e-8));
}

TEST_CASE("rotation counterexample has no ESD") {
  const auto ef = counterexample_fitness(rotation_fields());
  const TraitGrid g{2, 64, 1.5};
  const EsdResult r = esd_fixed_point(*ef, Trait(1.0, 0.0), g);
  CHECK(r.status != EsdStatus::Converged);
}

TEST_CASE("separable limit of the preset") {
  const GrowthModel m = make_separable({});
  const TraitGrid g{1, 512, 2.0};
  const SeparableLimit l = separable_limit(m, g, fast());
  CHECK(l.x_star[0] == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(l.F_star == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::abs(l.rho_star - oracle()["separable_level"]["closed_form"].get<double>()) <= 1e-8);
  CHECK_THROWS_AS(separable_limit(make_figure1(), g), DomainError);
}

TEST_CASE("tied maxima of b are rejected") {
  SeparableParts p;
  p.b = [](const Trait& x) { return 1.0 - (x[0] * x[0] - 0.25) * (x[0] * x[0] - 0.25); };
  p.B = [](double, double I) { return 1.0 / (1.0 + I); };
  p.D = [](double, double I) { return 0.2 * (1.0 + I); };
  p.B_dI = [](double, double I) { return -1.0 / ((1.0 + I) * (1.0 + I)); };
  p.D_dI = [](double, double) { return 0.2; };
  const GrowthModel m = make_separable_custom("twin", 1, p, 1.0);
  CHECK_THROWS_AS(separable_limit(m, TraitGrid{1, 201, 1.0}), AssumptionError);
}

TEST_CASE("fluctuation benefit") {
  const TraitGrid g{1, 257, 1.0};
  const auto& ref = oracle()["fluctuation"];
  SUBCASE("a = 0.8") {
    const FluctuationReport r = fluctuation_compare(make_fluctuation({}), g);
    CHECK(r.rho_av == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(r.rho_star - ref["0.8"]["rho_star"].get<double>()) <= 1e-8);
    CHECK(r.gap > 0.0);
    CHECK(r.identity_residuals[0] <= 1e-8);
    CHECK(r.identity_residuals[1] <= 1e-8);
    CHECK(r.cs_gap >= 0.0);
  }
  SUBCASE("a = 0") {
    FluctuationParams p;
    p.a = 0.0;
    const FluctuationReport r = fluctuation_compare(make_fluctuation(p), g);
    CHECK(std::abs(r.gap) <= 1e-6);
  }
  SUBCASE("concave D2") {
    FluctuationParams p;
    p.p = 0.5;
    const FluctuationReport r = fluctuation_compare(make_fluctuation(p), g);
    CHECK(r.gap > 0.0);
  }
}
