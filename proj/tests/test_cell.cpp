#include <cmath>
#include <random>

#include "doctest.h"

#include "hjlab/cell.hpp"
#include "hjlab/errors.hpp"
#include "hjlab/model.hpp"
#include "oracle.hpp"

using namespace hjlab;

namespace {
constexpr double kTwoPi = 6.283185307179586;

ModelPtr figure1() { return std::make_shared<const GrowthModel>(make_figure1()); }

OrbitOptions fast() {
  OrbitOptions o;
  o.secant = true;
  return o;
}
}  // namespace

TEST_CASE("Simpson weights integrate cubics exactly") {
  const auto w = simpson_weights(8);
  double sum = 0.0, cubic = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double s = static_cast<double>(k) / 8.0;
    sum += w[k];
    cubic += w[k] * s * s * s;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cubic == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(simpson_weights(7), ConfigError);
}

TEST_CASE("sine-forced logistic orbit has mean 2") {
  const auto g = [](double s, double I) { return 2.0 + std::sin(kTwoPi * s) - I; };
  const PeriodicOrbit o = solve_periodic(g, OrbitOptions{}, std::nullopt, 0.0);
  CHECK(std::abs(o.mean - 2.0) <= 1e-8);
  CHECK(o.residual <= 1e-10);
  CHECK(std::abs(o.mean - oracle()["sine_mean"].get<double>()) <= 1e-8);
}

TEST_CASE("figure1 orbits match the independent shooting oracle") {
  const GrowthModel m = make_figure1();
  for (const auto& [key, ref] : oracle()["figure1_orbit"].items()) {
    const double x = std::stod(key);
    const PeriodicOrbit o = solve_orbit(m, Trait(x), fast());
    INFO("x = " << x);
    CHECK(std::abs(o.mean - ref["mean"].get<double>()) <= 1e-8);
    CHECK(std::abs(o.mean - ref["closed_form_mean"].get<double>()) <= 1e-8);
    CHECK(std::abs(o.seed - ref["seed"].get<double>()) <= 1e-8);
    CHECK(std::abs(o.at(0.25) - ref["I_at_0.25"].get<double>()) <= 1e-7);
  }
}

TEST_CASE("orbit samples satisfy the ODE") {
  const PeriodicOrbit o = solve_orbit(make_figure1(), Trait(0.4));
  REQUIRE(o.samples() == 2048);
  CHECK(o.values.front() == doctest::Approx(o.values.back()).epsilon(1e-10));
  for (double v : o.values) CHECK(v > 0.0);
  const GrowthModel m = make_figure1();
  for (std::size_t k = 0; k <= o.samples(); k += 256)
    CHECK(o.slopes[k] == doctest::Approx(o.values[k] * m.rate(Trait(0.4), o.phase(k), o.values[k])));
}

TEST_CASE("damped and secant iterations agree") {
  const GrowthModel m = make_figure1();
  OrbitOptions plain;
  const PeriodicOrbit a = solve_orbit(m, Trait(0.8), plain);
  const PeriodicOrbit b = solve_orbit(m, Trait(0.8), fast());
  CHECK(std::abs(a.mean - b.mean) <= 1e-9);
  CHECK(b.iterations < a.iterations);
}

TEST_CASE("secant iteration reaches the viability boundary") {
  const GrowthModel m = make_figure1();
  const double edge = std::sqrt(2.0 - 1.0 / 8.0);
  for (double gap : {1e-2, 1e-3, 1e-4}) {
    const PeriodicOrbit o = solve_orbit(m, Trait(edge - gap), fast());
    CHECK(std::abs(o.mean - (4.0 * (2.0 - (edge - gap) * (edge - gap)) - 0.5)) <= 1e-8);
  }
}

TEST_CASE("viability set") {
  const GrowthModel m = make_figure1();
  CHECK(in_X(m, Trait(0.0)).where == Viability::Inside);
  CHECK(in_X(m, Trait(1.5)).where == Viability::Outside);
  CHECK_THROWS_AS(solve_orbit(m, Trait(1.5)), DomainError);
  const double edge = std::sqrt(2.0 - 1.0 / 8.0);
  CHECK(solve_orbit(m, Trait(edge)).degenerate);
}

TEST_CASE("orbit amplitude vanishes toward the boundary") {
  const GrowthModel m = make_figure1();
  const double edge = std::sqrt(2.0 - 1.0 / 8.0);
  std::vector<Trait> path;
  for (double gap : {0.3, 0.1, 0.01, 0.001}) path.emplace_back(edge - gap);
  const auto peaks = boundary_decay_check(m, path, fast());
  for (std::size_t i = 1; i < peaks.size(); ++i) CHECK(peaks[i] < peaks[i - 1]);
  CHECK(peaks.back() < 0.1);
}

TEST_CASE("effective fitness matches the oracle and its closed form") {
  const EffectiveFitness ef(figure1(), fast());
  for (const auto& r : oracle()["figure1_fitness"]) {
    const Trait x(r["x"].get<double>()), y(r["y"].get<double>());
    INFO(x << " " << y);
    CHECK(std::abs(ef.value(x, y) - r["R"].get<double>()) <= 1e-8);
    CHECK(std::abs(ef.value(x, y) - r["closed_form"].get<double>()) <= 1e-8);
  }
}

TEST_CASE("effective fitness gradient") {
  const EffectiveFitness ef(figure1(), fast());
  // R(x, y) = (y^2 - x^2) / (2 (2 - y^2))
  for (double y : {-0.5, 0.0, 0.9})
    for (double x : {-0.3, 0.4}) {
      const double want = -x / (2.0 - y * y);
      CHECK(ef.gradient(Trait(x), Trait(y))[0] == doctest::Approx(want).epsilon(1e-7));
    }
}

TEST_CASE("property: R(x, x) vanishes on random viable traits") {
  std::mt19937_64 rng(1);
  for (const auto& name : preset_names()) {
    const auto m = std::make_shared<const GrowthModel>(make_preset(name, {}));
    const EffectiveFitness ef(m, fast());
    const double hw = m->validation_half_width();
    std::uniform_real_distribution<double> u(-hw, hw);
    int tested = 0;
    while (tested < 50) {
      const Trait x(u(rng));
      if (in_X(*m, x).where != Viability::Inside) continue;
      INFO(name << " " << x);
      CHECK(std::abs(ef.value(x, x)) <= 1e-8);
      ++tested;
    }
  }
}

TEST_CASE("orbit cache returns exact anchors only") {
  const EffectiveFitness ef(figure1(), fast());
  const auto a = ef.orbit(Trait(0.3));
  const auto b = ef.orbit(Trait(0.3));
  CHECK(a == b);
  const auto c = ef.orbit(Trait(0.3 + 1e-9));
  CHECK(c->anchor == Trait(0.3 + 1e-9));
  CHECK(std::abs(c->mean - a->mean) < 1e-7);
  CHECK(*ef.resident_resource(Trait(0.0)) == doctest::Approx(7.5).epsilon(1e-10));
  CHECK_THROWS_AS(ef.landscape(Trait(1.6)), DomainError);
}

TEST_CASE("separable closed form equals the quadrature") {
  const auto m = std::make_shared<const GrowthModel>(make_separable({}));
  const EffectiveFitness ef(m, fast());
  // resident at the optimum x = 0.3, level F = b(0.3) = 2
  for (double x : {-0.5, 0.0, 0.6}) {
    const double q = ef.value(Trait(x), Trait(0.3));
    CHECK(separable_fitness(*m, Trait(x), 2.0, fast()) == doctest::Approx(q).epsilon(1e-9));
  }
}
