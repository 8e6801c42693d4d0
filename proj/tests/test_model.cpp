#include <cmath>
#include <limits>

#include "doctest.h"

#include "hjlab/errors.hpp"
#include "hjlab/model.hpp"

using namespace hjlab;

namespace {
constexpr double kTwoPi = 6.283185307179586;
}

TEST_CASE("figure1 rate matches its formula") {
  const GrowthModel m = make_figure1();
  for (double x : {-1.0, 0.0, 0.7})
    for (double s : {0.0, 0.25, 0.6})
      for (double I : {0.0, 1.0, 5.0}) {
        const double want = (2.0 + std::sin(kTwoPi * s)) * (2.0 - x * x) / (I + 0.5) - 0.5;
        CHECK(m.rate(Trait(x), s, I) == doctest::Approx(want).epsilon(1e-14));
      }
  CHECK(m.uptake(Trait(0.3)) == 1.0);
}

TEST_CASE("rate is 1-periodic in s") {
  const GrowthModel m = make_figure1();
  for (double s : {0.1, 0.45, 0.9})
    CHECK(m.rate(Trait(0.4), s + 3.0, 2.0) == doctest::Approx(m.rate(Trait(0.4), s, 2.0)));
}

TEST_CASE("analytic derivatives agree with differences") {
  for (const auto& name : preset_names()) {
    const GrowthModel m = make_preset(name, {});
    const Trait x(0.3);
    const double s = 0.37, I = 1.2, h = 1e-6;
    const double dI = (m.rate(x, s, I + h) - m.rate(x, s, I - h)) / (2 * h);
    CHECK(m.rate_dI(x, s, I) == doctest::Approx(dI).epsilon(1e-6));
    const double dx = (m.rate(Trait(0.3 + h), s, I) - m.rate(Trait(0.3 - h), s, I)) / (2 * h);
    CHECK(m.rate_dx(x, s, I)[0] == doctest::Approx(dx).epsilon(1e-6));
  }
}

TEST_CASE("rate errors") {
  const GrowthModel m = make_figure1();
  CHECK_THROWS_AS(m.rate(Trait(0.0), 0.0, -1.0), DomainError);
  const GrowthModel bad = make_custom("nan", 1, [](const Trait&, double, double) {
    return std::numeric_limits<double>::quiet_NaN();
  });
  CHECK_THROWS_AS(bad.rate(Trait(0.0), 0.0, 1.0), ModelError);
}

TEST_CASE("preset table") {
  CHECK_THROWS_AS(make_preset("nope", {}), ConfigError);
  CHECK_THROWS_AS(make_preset("figure1", {{"a", 1.0}}), ConfigError);
  const GrowthModel q = make_preset("concave-quadratic", {{"dim", 2}});
  CHECK(q.dim() == 2);
  CHECK(make_preset("fluctuation-example", {{"a", 0.0}}).fluctuation() != nullptr);
}

TEST_CASE("zero-resource margin") {
  const GrowthModel m = make_figure1();
  // mu(x) = 4 (2 - x^2) - 0.5
  CHECK(m.zero_resource_margin(Trait(0.0)) == doctest::Approx(7.5).epsilon(1e-12));
  CHECK(m.zero_resource_margin(Trait(1.0)) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("shipped presets satisfy the standing assumptions") {
  for (const auto& name : preset_names()) {
    const GrowthModel m = make_preset(name, {});
    const InitialDatum d{Trait::zeros(m.dim()), 1.0, 1.0};
    const ValidationReport r = validate_assumptions(m, d, m.validation_half_width());
    INFO(name);
    for (const auto& c : r.checks) {
      INFO(c.name << ": " << c.detail);
      CHECK(c.passed);
    }
  }
}

TEST_CASE("constructed violations are detected") {
  const InitialDatum d{Trait(0.0), 1.0, 1.0};
  SUBCASE("rate increasing in I") {
    const GrowthModel m = make_custom("inc", 1, [](const Trait& x, double, double I) {
      return 2.0 - x[0] * x[0] + 0.1 * I;
    });
    CHECK_FALSE(validate_assumptions(m, d, 2.0).all_passed());
  }
  SUBCASE("rate convex in x") {
    const GrowthModel m = make_custom("convex", 1, [](const Trait& x, double, double I) {
      return 1.0 + x[0] * x[0] - I;
    });
    CHECK_FALSE(validate_assumptions(m, d, 1.0).all_passed());
  }
  SUBCASE("initial trait outside the viable set") {
    const GrowthModel m = make_figure1();
    const InitialDatum far{Trait(1.9), 1.0, 1.0};
    const ValidationReport r = validate_assumptions(m, far, 2.0);
    REQUIRE(r.find("x0-viable") != nullptr);
    CHECK_FALSE(r.find("x0-viable")->passed);
  }
}

TEST_CASE("initial field carries the requested mass") {
  const GrowthModel m = make_figure1();
  const TraitGrid g{1, 801, 2.0};
  const double eps = 0.02;
  const Field u = initial_field({Trait(0.5), 1.0, 2.0}, g, eps, m);
  double mass = 0.0;
  for (double v : u) mass += std::exp(v / eps) * g.spacing();
  CHECK(mass == doctest::Approx(2.0).epsilon(1e-3));
}
