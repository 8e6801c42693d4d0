#include <cmath>
#include <vector>

#include "doctest.h"

#include "hjlab/direct.hpp"
#include "hjlab/errors.hpp"

using namespace hjlab;

namespace {
constexpr double kTwoPi = 6.283185307179586;
}

TEST_CASE("resource of a concentrated field") {
  const TraitGrid g{1, 1001, 2.0};
  const double eps = 0.01;
  std::vector<double> u(g.size()), lp(g.size(), 0.0);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = -g.coord(k) * g.coord(k);
  CHECK(resource(u, lp, g, eps) == doctest::Approx(std::sqrt(std::acos(-1.0) * eps)).epsilon(1e-9));
}

TEST_CASE("running average") {
  std::vector<double> t, c, lin;
  for (int k = 0; k <= 200; ++k) {
    t.push_back(0.01 * k);
    c.push_back(3.0);
    lin.push_back(2.0 * t.back() + 1.0);
  }
  const auto ac = running_average(t, c, 0.1);
  const auto al = running_average(t, lin, 0.1);
  for (double v : ac) CHECK(v == doctest::Approx(3.0));
  for (std::size_t k = 5; k + 5 < t.size(); ++k) CHECK(al[k] == doctest::Approx(lin[k]));
  CHECK_THROWS_AS(running_average(t, c, 0.001), ConfigError);
}

TEST_CASE("running average removes a fast oscillation") {
  std::vector<double> t, v;
  for (int k = 0; k <= 4000; ++k) {
    t.push_back(k / 2000.0);
    v.push_back(5.0 + std::sin(kTwoPi * t.back() / 0.01));
  }
  const auto a = running_average(t, v, 0.1);
  for (std::size_t k = 200; k + 200 < t.size(); ++k) CHECK(std::abs(a[k] - 5.0) < 1e-3);
}

TEST_CASE("dominant frequency of a drifting oscillation") {
  std::vector<double> t, v;
  for (int k = 0; k <= 3200; ++k) {
    t.push_back(k / 1600.0);
    v.push_back(1.0 + 3.0 * t.back() + 0.2 * std::sin(kTwoPi * 100.0 * t.back()));
  }
  const Spectrum s = dominant_frequency(t, v, 0.5);
  CHECK(std::abs(s.frequency - 100.0) <= s.bin_width);
}

TEST_CASE("time step above the monotone limit is rejected") {
  const GrowthModel m = make_figure1();
  const TraitGrid g{1, 256, 2.0};
  SimState st = make_state(m, {Trait(0.5), 1.0, 1.0}, g, 0.01);
  const SourceTable src(m, g);
  CHECK_THROWS_AS(step(st, src, 1.0), ConfigError);
}

TEST_CASE("short figure1 run") {
  const GrowthModel m = make_figure1();
  const TraitGrid g{1, 512, 2.0};
  DirectOptions o;
  o.T = 0.2;
  const SimState st = run(m, {Trait(1.0), 1.0, 1.0}, g, 0.02, o);
  REQUIRE(st.history.size() > 10);
  CHECK(st.t == doctest::Approx(0.2));
  for (const auto& r : st.history) {
    CHECK(r.I > 0.0);
    CHECK(std::isfinite(r.max_u));
  }
  // the dominant trait moves toward the optimum at 0
  CHECK(st.history.back().xbar[0] < 1.0);
  CHECK(st.history.back().xbar[0] > 0.0);
}

TEST_CASE("direct runs are deterministic") {
  const GrowthModel m = make_figure1();
  const TraitGrid g{1, 256, 2.0};
  DirectOptions o;
  o.T = 0.1;
  const SimState a = run(m, {Trait(0.5), 1.0, 1.0}, g, 0.04, o);
  const SimState b = run(m, {Trait(0.5), 1.0, 1.0}, g, 0.04, o);
  CHECK(a.u == b.u);
}

TEST_CASE("too small a box is reported") {
  const GrowthModel m = make_figure1();
  const TraitGrid g{1, 128, 0.6};
  DirectOptions o;
  o.T = 0.5;
  CHECK_THROWS_AS(run(m, {Trait(0.5), 0.2, 1.0}, g, 0.05, o), ConfigError);
}

TEST_CASE("F_eps with constant b is constant") {
  SeparableParts p;
  p.b = [](const Trait&) { return 1.5; };
  p.B = [](double s, double I) { return (1.0 + 0.3 * std::sin(kTwoPi * s)) / (1.0 + I); };
  p.D = [](double, double I) { return 0.2 * (1.0 + I); };
  p.B_dI = [](double s, double I) { return -(1.0 + 0.3 * std::sin(kTwoPi * s)) / ((1.0 + I) * (1.0 + I)); };
  p.D_dI = [](double, double) { return 0.2; };
  const GrowthModel m = make_separable_custom("flat", 1, p, 2.0);
  const TraitGrid g{1, 256, 2.0};
  DirectOptions o;
  o.T = 0.1;
  const SimState st = run(m, {Trait(0.0), 1.0, 1.0}, g, 0.04, o);
  for (double f : separable_F(st, m)) CHECK(f == doctest::Approx(1.5).epsilon(1e-12));
  CHECK_THROWS_AS(separable_F(st, make_figure1()), DomainError);
}
