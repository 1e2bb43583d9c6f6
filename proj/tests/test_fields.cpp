#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "lavrentiev/fields.hpp"

using namespace lav;
using Catch::Approx;

namespace {

template <int D>
Vec<D> random_point(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> U(lo, hi);
  Vec<D> x{};
  for (auto& xi : x) xi = U(rng);
  return x;
}

template <int D, class F>
double diff2(F&& f, Vec<D> x, int j, double h) {
  Vec<D> y = x;
  x[j] += h;
  y[j] -= h;
  return (f(x) - f(y)) / (2.0 * h);
}

}  // namespace

TEST_CASE("theta transition") {
  CHECK(theta(0.2) == 0.0);
  CHECK(theta(0.25) == 0.0);
  CHECK(theta(0.5) == 1.0);
  CHECK(theta(0.6) == 1.0);
  double sup = 0.0;
  for (int i = 0; i <= 100000; ++i) sup = std::max(sup, std::abs(theta_prime(i * 1e-5)));
  CHECK(sup <= 6.0);
  CHECK(sup == Approx(6.0).epsilon(1e-6));
}

TEST_CASE("building block values") {
  CHECK(building_block<2>({0.1, 0.9}).u == Approx(kAmplitude));
  CHECK(building_block<2>({0.1, -0.9}).u == Approx(-kAmplitude));
  CHECK(building_block<2>({0.9, 0.1}).u == 0.0);
  CHECK_THROWS_AS(building_block<2>({0.0, 0.0}), SingularPointError);
  CHECK_THROWS_AS(building_block<3>({0.0, 0.0, 0.0}), SingularPointError);
}

TEST_CASE("building block flux through a face is one") {
  // ∫ b_d(x̄, 1) · e_d dx̄ by midpoint sums.
  const int n = 40000;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = -1.0 + (i + 0.5) * 2.0 / n;
    s2 += building_block<2>({x, 1.0}).b[1] * 2.0 / n;
  }
  CHECK(s2 == Approx(1.0).margin(1e-6));
  const int nr = 20000;
  double s3 = 0.0;
  for (int i = 0; i < nr; ++i) {
    const double r = (i + 0.5) / nr;
    s3 += building_block<3>({r, 0.0, 1.0}).b[2] * 2.0 * std::numbers::pi * r / nr;
  }
  CHECK(s3 == Approx(1.0).margin(1e-6));
}

TEST_CASE("building block b matches the finite-difference divergence of A") {
  std::mt19937_64 rng(11);
  const double h = 1e-5;
  int checked = 0;
  double worst = 0.0;
  while (checked < 100) {
    const auto x = random_point<2>(rng);
    const double ratio = std::abs(x[0]) / std::abs(x[1]);
    if (norm<2>(x) < 0.2 || std::abs(ratio - 0.25) < 1e-3 || std::abs(ratio - 0.5) < 1e-3) continue;
    const auto f = building_block<2>(x);
    if (norm<2>(f.b) < 1e-3) continue;
    Vec<2> div{};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        div[i] += diff2<2>([&](const Vec<2>& y) { return building_block<2>(y).A[i][j]; }, x, j, h);
    worst = std::max(worst, std::hypot(div[0] - f.b[0], div[1] - f.b[1]) / norm<2>(f.b));
    ++checked;
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("gradient of u matches finite differences") {
  std::mt19937_64 rng(12);
  for (Regime reg : {Regime::Matching, Regime::Sub, Regime::Super}) {
    const auto cfg = make_config(reg, 2, reg == Regime::Matching ? 2.0 : (reg == Regime::Sub ? 1.5 : 3.0));
    for (int k = 0; k < 50; ++k) {
      const auto x = random_point<2>(rng);
      if (contact_distance<2>(x, cfg) < 0.05) continue;
      const auto f = fractal_fields<2>(x, cfg, kFieldU);
      for (int j = 0; j < 2; ++j) {
        const double fd = diff2<2>([&](const Vec<2>& y) { return fractal_fields<2>(y, cfg, kFieldU).u; }, x, j, 1e-7);
        CHECK(f.grad_u[j] == Approx(fd).margin(1e-4 * (1.0 + std::abs(fd))));
      }
    }
  }
}

TEST_CASE("smooth indicator sandwich and gradient bound") {
  const auto cfg = make_config(Regime::Sub, 2, 1.5);
  CHECK(rho<2>({0.6, 1.0}, cfg, 2.0, 4.0).value == 1.0);
  CHECK(rho<2>({5.5, 1.0}, cfg, 2.0, 4.0).value == 0.0);
  CHECK_THROWS_AS(rho<2>({0.5, 0.0}, cfg, 2.0, 4.0), SingularPointError);
  CHECK_THROWS_AS(rho<2>({0.5, 0.5}, make_config(Regime::Matching, 2, 2.0), 2.0, 4.0), DomainError);

  // |∇(d/|x_d|)| = sqrt(1 + q²)/|x_d| with q <= τ2 on the band.
  const double c_rho = kRampSlope / 2.0 * std::sqrt(1.0 + 16.0);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> U(-3.0, 3.0), A(0.05, 1.0);
  int band = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec<2> x{U(rng), A(rng)};
    const auto r = rho<2>(x, cfg, 2.0, 4.0);
    const double q = cantor_distance_1d(x[0], cfg.lambda()) / x[1];
    if (q <= 2.0) CHECK(r.value == 1.0);
    if (q >= 4.0) CHECK(r.value == 0.0);
    if (q > 2.0 && q < 4.0) ++band;
    CHECK(norm<2>(r.grad) * x[1] <= c_rho * (1.0 + 1e-12));
  }
  CHECK(band > 100);
}

TEST_CASE("regime fields") {
  const auto mc = make_config(Regime::Matching, 2, 2.0);
  for (const Vec<2>& x : {Vec<2>{0.3, 0.7}, Vec<2>{-0.2, 0.1}, Vec<2>{0.9, -0.4}}) {
    const auto a = fractal_fields<2>(x, mc);
    const auto b = building_block<2>(x);
    CHECK(a.u == b.u);
    CHECK(a.b == b.b);
  }

  const auto sc = make_config(Regime::Sub, 2, 1.5);
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> U(-1.0, 1.0), P(0.01, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec<2> x{U(rng), P(rng)};
    if (cantor_distance_1d(x[0], sc.lambda()) <= 2.0 * x[1]) CHECK(fractal_fields<2>(x, sc, kFieldU).u == kAmplitude);
  }

  // |∇u| |x̄|^{1-dim} bounded on {d(x_d, C) <= |x̄|/2}.
  const auto pc = make_config(Regime::Super, 2, 3.0);
  double sup = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const Vec<2> x{U(rng), U(rng)};
    const auto f = fractal_fields<2>(x, pc, kFieldU);
    CHECK(std::abs(f.u) <= kAmplitude + 1e-15);
    const double r = std::abs(x[0]);
    if (r > 0.0 && cantor_distance_1d(x[1], pc.lambda()) <= r / 2.0)
      sup = std::max(sup, norm<2>(f.grad_u) * std::pow(r, 1.0 - pc.dim()));
  }
  CHECK(sup > 0.0);
  CHECK(sup < 10.0);
}

TEST_CASE("A is skew and supports are disjoint") {
  std::mt19937_64 rng(15);
  for (Regime reg : {Regime::Matching, Regime::Sub, Regime::Super}) {
    const auto cfg = make_config(reg, 2, reg == Regime::Matching ? 2.0 : (reg == Regime::Sub ? 1.5 : 3.0));
    for (int i = 0; i < 2000; ++i) {
      const auto x = random_point<2>(rng);
      const auto f = fractal_fields<2>(x, cfg);
      CHECK(f.A[0][1] + f.A[1][0] == 0.0);
      CHECK(norm<2>(f.grad_u) * norm<2>(f.b) < 1e-14);
    }
  }
  const auto c3 = make_config(Regime::Matching, 3, 3.0);
  for (int i = 0; i < 500; ++i) {
    const auto f = fractal_fields<3>(random_point<3>(rng), c3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) CHECK(f.A[a][b] + f.A[b][a] == 0.0);
  }
}

TEST_CASE("contact set points are flagged, not fatal") {
  const auto sc = make_config(Regime::Sub, 2, 1.5);
  CHECK(fractal_fields<2>({0.5, 0.0}, sc).near_singular);
  CHECK(fractal_fields<2>({0.5, 1e-8}, sc).near_singular);
  CHECK_FALSE(fractal_fields<2>({0.5, 0.1}, sc).near_singular);
  CHECK(fractal_fields<2>({0.0, 0.0}, make_config(Regime::Matching, 2, 2.0)).near_singular);
  CHECK_THROWS_AS(fractal_fields<3>({0.1, 0.1, 0.1}, make_config(Regime::Matching, 2, 2.0)), DomainError);
}

TEST_CASE("cutoff") {
  const auto e0 = cutoff_eta<2>({0.0, 0.0});
  CHECK(e0.value == 1.0);
  CHECK(e0.grad == Vec<2>{0.0, 0.0});
  CHECK(cutoff_eta<2>({0.9, 0.0}).value == 0.0);
  CHECK(cutoff_eta<3>({0.9, 0.0, 0.0}).value == 0.0);
  std::mt19937_64 rng(16);
  for (int i = 0; i < 10000; ++i) {
    const auto e = cutoff_eta<2>(random_point<2>(rng));
    CHECK(e.value >= 0.0);
    CHECK(e.value <= 1.0);
    CHECK(norm<2>(e.grad) <= eta_gradient_bound(2));
  }
}

TEST_CASE("localized fields") {
  const auto cfg = make_config(Regime::Super, 2, 3.0);
  std::mt19937_64 rng(17);
  for (int i = 0; i < 2000; ++i) {
    const auto x = random_point<2>(rng);
    const auto s = localized_fields<2>(x, cfg);
    for (int j = 0; j < 2; ++j) CHECK(s.b_circ[j] + s.b_bd[j] == Approx(s.base.b[j]).margin(1e-12));
    if (std::max(std::abs(x[0]), std::abs(x[1])) < 4.0 / 6.0) CHECK(s.u_bd == 0.0);
  }
  for (const Vec<2>& x : {Vec<2>{0.95, 0.3}, Vec<2>{-0.2, 0.95}, Vec<2>{0.95, -0.95}}) {
    const auto s = localized_fields<2>(x, cfg);
    CHECK(s.b_circ == Vec<2>{0.0, 0.0});
  }
}
