#include <catch_amalgamated.hpp>

#include <cmath>

#include "lavrentiev/verify.hpp"

using namespace lav;
using Catch::Approx;

TEST_CASE("Aitken limit of geometric sequences") {
  CHECK(aitken_limit(1.5, 1.25, 1.125) == Approx(1.0).epsilon(1e-14));
  CHECK(aitken_limit(3.0 - 0.8, 3.0 - 0.8 * 0.3, 3.0 - 0.8 * 0.09) == Approx(3.0).epsilon(1e-14));
  // Non-contracting or oscillating differences fall back to the last value.
  CHECK(aitken_limit(0.0, 1.0, 2.0) == 2.0);
  CHECK(aitken_limit(0.0, 1.0, 0.5) == 0.5);
  CHECK(aitken_limit(4.0, 4.0, 4.0) == 4.0);
}

TEST_CASE("certificate arithmetic and selection") {
  const auto c = make_certificate(4.0, 2.0, 3.0, 1.0);
  CHECK(c.margin == 4.0);
  CHECK(c.relative_margin() == 0.5);

  CertificateReport r;
  r.curve = {make_certificate(1.0, 1.0, 0.7, 0.4), make_certificate(2.0, 2.0, 3.0, 0.9),
             make_certificate(4.0, 4.0, 10.0, 5.0), make_certificate(8.0, 8.0, 30.0, 10.0)};
  const auto s = smallest_certified(r);
  REQUIRE(s);
  CHECK(s->t == 4.0);
  CHECK(smallest_certified(r, 0.2)->t == 8.0);
  CHECK_FALSE(smallest_certified(r, 0.5));
}

TEST_CASE("check records") {
  CHECK(below("a", "b", 0.5, 1.0).pass);
  CHECK_FALSE(below("a", "b", 1.0, 1.0).pass);
  CHECK(at_least("a", "b", 1.0, 1.0).pass);
  CHECK_FALSE(at_least("a", "b", 0.99, 1.0).pass);
  const auto g = dyadic_grid(-2, 1);
  CHECK(g == std::vector<double>{0.25, 0.5, 1.0, 2.0});
}

TEST_CASE("boundary pairing and separating table for the matching field") {
  const auto cfg = make_config(Regime::Matching, 2, 2.0);
  CHECK(boundary_pairing<2>(cfg) == Approx(1.0).margin(1e-3));
  const auto T = check_su_table<2>(cfg);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(T[i][j] == Approx(kExpectedSuTable[i][j]).margin(1e-3));
  // b = b^∂ + b° and u = u^∂ + u° make the table additive in rows and columns.
  for (int j = 0; j < 3; ++j) CHECK(T[0][j] == Approx(T[1][j] + T[2][j]).margin(1e-9));
  for (int i = 0; i < 3; ++i) CHECK(T[i][0] == Approx(T[i][1] + T[i][2]).margin(1e-9));
}

TEST_CASE("separating functional of a coordinate") {
  // S(x_1) = -∫ b_1 dx, which vanishes by the odd symmetry of the field in x_1.
  const auto cfg = make_config(Regime::Matching, 2, 2.0);
  const auto r = separating_functional<2>(Functional::S, [](const Vec<2>&) { return Vec<2>{1.0, 0.0}; }, cfg,
                                          suite_policy(10));
  CHECK(std::abs(r.value) < 1e-9);
}

TEST_CASE("pointwise checks on small samples") {
  for (Regime reg : {Regime::Matching, Regime::Sub, Regime::Super}) {
    const auto cfg = make_config(reg, 2, reg == Regime::Matching ? 2.0 : (reg == Regime::Sub ? 1.5 : 3.0));
    CHECK(disjoint_supports<2>(cfg, 5000).max_product < 1e-14);
    CHECK(disjoint_supports<2>(cfg, 5000).max_skew_defect == 0.0);
    CHECK(pointwise_divergence<2>(cfg, 500, 1e-5).max_error < 1e-4);
    CHECK(fd_consistency<2>(cfg, 20, 1e-5).max_error < 1e-5);
  }
}

TEST_CASE("gap scan bookkeeping") {
  const auto cfg = make_config(Regime::Matching, 2, 2.0);
  auto m = power_model<2>(1.9);
  m.cfg = cfg;
  QuadPolicy pol = modular_policy<2>(cfg);
  pol.max_depth = 40;
  pol.delta = 1e-12;
  const auto grid = dyadic_grid(-6, 0);
  const auto r = gap_scan<2>(m, grid, pol, -1.0);
  REQUIRE(r.G_values.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(r.F_values[i] >= 0.0);
    CHECK(r.G_values[i] == Approx(r.F_values[i] - grid[i]).margin(1e-15));
    if (i > 0) CHECK(r.F_values[i] > r.F_values[i - 1]);
  }
  // F(t u°) = t^p F(u°) for a pure power.
  CHECK(r.F_values[1] / r.F_values[0] == Approx(std::pow(2.0, 1.9)).epsilon(1e-9));
  CHECK(r.found == r.t_star.has_value());
}

TEST_CASE("integrability checks flag stalled growth") {
  std::vector<IntegrabilityLevel> rows(3);
  for (int i = 0; i < 3; ++i) {
    rows[i].level = 5 + i;
    rows[i].weak_grad_u = rows[i].weak_b = 1.0 + 0.001 * i;
    rows[i].modular_grad_u = rows[i].modular_b = 1.0 + 0.1 * i;
  }
  for (const auto& c : integrability_checks(rows)) CHECK(c.pass);
  rows[2].modular_b = rows[1].modular_b;
  CHECK_FALSE(integrability_checks(rows)[3].pass);
  CHECK_THROWS_AS(integrability_checks({rows[0]}), DomainError);
}

TEST_CASE("Muckenhoupt checks") {
  MuckenhouptLadder r;
  r.levels = {3, 4, 5};
  r.minus = {2.0, 2.01, 2.015};
  r.plus = {3.0, 3.0, 3.0};
  r.witness = {1.0, 3.0, 9.0};
  for (const auto& c : muckenhoupt_checks(r)) CHECK(c.pass);
  r.plus[2] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(muckenhoupt_checks(r)[1].pass);
}
