#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "lavrentiev/orlicz.hpp"

using namespace lav;
using Catch::Approx;

namespace {

// sup_t (s t - φ(t)) on a fine grid, refined once around the maximizer.
template <class Phi>
double grid_conjugate(Phi&& phi, double s, double tmax) {
  double best = 0.0, arg = 0.0;
  const int n = 200000;
  for (int i = 0; i <= n; ++i) {
    const double t = tmax * i / n;
    const double v = s * t - phi(t);
    if (v > best) best = v, arg = t;
  }
  const double h = tmax / n;
  for (int i = -1000; i <= 1000; ++i) {
    const double t = arg + h * i / 1000.0;
    if (t >= 0.0) best = std::max(best, s * t - phi(t));
  }
  return best;
}

std::vector<OrliczModel<2>> sample_models() {
  const auto mc = make_config(Regime::Matching, 2, 2.0);
  return {variable_exponent_model<2>(mc, 1.9, 2.1),
          variable_exponent_model<2>(make_config(Regime::Sub, 2, 1.5), 1.3, 1.7),
          variable_exponent_model<2>(make_config(Regime::Super, 2, 3.0), 2.8, 3.2),
          variable_exponent_model<2>(mc, 0.0, 0.0, true, 0.5),
          double_phase_model<2>(1.8, 3.2, 0.5),
          weighted_model<2>(mc, 2.0, -0.25, 0.25, 0.1)};
}

Vec<2> random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  return {U(rng), U(rng)};
}

}  // namespace

TEST_CASE("variable exponent geometry") {
  const auto m = variable_exponent_model<2>(make_config(Regime::Matching, 2, 2.0), 1.9, 2.1);
  CHECK(m.exponent({0.5, 0.1}) == 1.9);
  CHECK(m.exponent({0.1, 0.5}) == 2.1);
  CHECK(m.coupling_p0 == Approx(std::sqrt(1.9 * 2.1)));
  CHECK_THROWS_AS(variable_exponent_model<2>(make_config(Regime::Matching, 2, 2.0), 2.0, 2.1), DomainError);
  CHECK_THROWS_AS(variable_exponent_model<2>(make_config(Regime::Matching, 2, 2.0), 0.0, 0.0, true, 1.0), DomainError);
}

TEST_CASE("continuity modulus") {
  CHECK(modulus_sigma(1.0, 0.5) == Approx(1.0 / std::pow(std::log(std::exp(1.0) + 1.0), 0.5)).epsilon(1e-15));
  double prev = 0.0;
  for (double t = 1e-12; t <= 1.0; t *= 10.0) {
    const double s = modulus_sigma(t, 0.5);
    CHECK(s > prev);
    prev = s;
  }
  CHECK(modulus_sigma(1e-300, 0.5) < 0.04);
}

TEST_CASE("exponent and weight supports separate from the fields") {
  std::mt19937_64 rng(21);
  for (Regime reg : {Regime::Matching, Regime::Sub, Regime::Super}) {
    const double p0 = reg == Regime::Matching ? 2.0 : (reg == Regime::Sub ? 1.5 : 3.0);
    const auto cfg = make_config(reg, 2, p0);
    const auto m = variable_exponent_model<2>(cfg, p0 - 0.2, p0 + 0.2);
    for (int i = 0; i < 20000; ++i) {
      const auto x = random_point(rng);
      const auto f = fractal_fields<2>(x, cfg);
      if (norm<2>(f.grad_u) > 0.0) CHECK(m.exponent(x) == m.p_minus);
      if (norm<2>(f.b) > 0.0) CHECK(m.exponent(x) == m.p_plus);
    }
  }
  const auto dp = double_phase_model<2>(1.8, 3.2, 0.5);
  for (int i = 0; i < 20000; ++i) {
    const auto x = random_point(rng);
    CHECK(dp.weight(x) * norm<2>(fractal_fields<2>(x, dp.cfg, kFieldU).grad_u) < 1e-14);
  }
}

TEST_CASE("double phase weight is Holder continuous") {
  const auto dp = double_phase_model<2>(1.8, 3.2, 0.5);
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> S(-12.0, -1.0);
  double sup = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const auto x = random_point(rng);
    const auto dir = random_point(rng);
    const double len = std::exp2(S(rng));
    const Vec<2> y{x[0] + len * dir[0], x[1] + len * dir[1]};
    const double dist = std::hypot(y[0] - x[0], y[1] - x[1]);
    if (dist == 0.0) continue;
    sup = std::max(sup, std::abs(dp.weight(x) - dp.weight(y)) / std::pow(dist, dp.alpha));
  }
  CHECK(sup < 10.0);
}

TEST_CASE("double phase parameter window") {
  CHECK_THROWS_AS(double_phase_model<2>(1.8, 2.2, 0.5), DomainError);
  CHECK_THROWS_AS(double_phase_model<2>(1.0, 3.2, 0.5), DomainError);
  const auto dp = double_phase_model<2>(1.8, 3.2, 0.5);
  CHECK(dp.coupling_p0 == Approx(1.9));
  CHECK(dp.cfg.regime == Regime::Sub);
}

TEST_CASE("weighted model") {
  const auto sc = make_config(Regime::Sub, 2, 1.5);
  CHECK(weighted_gamma(sc, 2.0) == Approx(1.0 - 1.5 / 2.0));
  const auto mc = make_config(Regime::Matching, 2, 2.0);
  CHECK_THROWS_AS(weighted_model<2>(mc, 2.0, 0.1, 0.25, 0.5), DomainError);
  CHECK_THROWS_AS(weighted_model<2>(mc, 2.0, -0.25, 0.25, 1.5), DomainError);

  const double eps = 0.1;
  const auto m = weighted_model<2>(mc, 2.0, -0.25, 0.25, eps);
  std::mt19937_64 rng(23);
  for (int i = 0; i < 20000; ++i) {
    const auto x = random_point(rng);
    const double w = m.weight(x);
    CHECK(m.omega_minus(x) <= w * (1.0 + 1e-14));
    CHECK(w <= m.omega_plus(x) * (1.0 + 1e-14));
    const auto f = fractal_fields<2>(x, mc, kFieldU);
    const double g = norm<2>(f.grad_u);
    if (g > 0.0) {
      const double t = 3.0;
      CHECK(m.phi(x, t * g) == Approx(std::pow(eps * std::pow(std::abs(x[1]), 0.25) * t * g, 2.0) / 2.0));
    }
  }
}

TEST_CASE("closed-form and solved conjugates") {
  const auto quad = power_model<2>(2.0);
  for (double s : {0.0, 0.5, 3.0}) CHECK(conjugate<2>(quad, {0.1, 0.2}, s) == Approx(s * s / 2.0));

  const double p = 3.0, s = 2.0;
  auto phi = [&](double t) { return std::pow(t, p) / p; };
  auto dphi = [&](double t) { return std::pow(t, p - 1.0); };
  const double oracle = grid_conjugate(phi, s, 5.0);
  CHECK(oracle == Approx(std::pow(2.0, 1.5) / 1.5).epsilon(1e-9));
  CHECK(legendre_conjugate(phi, dphi, s) == Approx(oracle).epsilon(1e-9));

  const auto dp = double_phase_model<2>(1.8, 3.2, 0.5);
  const Vec<2> x{0.05, 0.6};
  REQUIRE(dp.weight(x) > 0.0);
  const double a = dp.weight(x);
  for (double si : {0.1, 1.0, 7.0}) {
    const double c = conjugate<2>(dp, x, si);
    CHECK(c == Approx(grid_conjugate([&](double t) { return std::pow(t, 1.8) / 1.8 + a * std::pow(t, 3.2) / 3.2; }, si,
                                     10.0))
                   .epsilon(1e-8));
    CHECK(c <= dp.psi(x, si) * (1.0 + 1e-12));
  }
  const Vec<2> side{0.6, 0.05};
  REQUIRE(dp.weight(side) == 0.0);
  CHECK(conjugate<2>(dp, side, 2.0) == std::pow(2.0, 1.8 / 0.8) / (1.8 / 0.8));
}

TEST_CASE("Young, biconjugation and growth conditions") {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> L(-3.0, 3.0), G(0.0, 1.0);
  for (const auto& m : sample_models()) {
    for (int i = 0; i < 300; ++i) {
      const auto x = random_point(rng);
      const double t = std::pow(10.0, L(rng)), s = std::pow(10.0, L(rng));
      CHECK(s * t <= m.phi(x, t) + m.phi_star(x, s) + 1e-12 * (1.0 + s * t));
      const double so = m.dphi(x, t);
      CHECK(std::abs(so * t - m.phi(x, t) - m.phi_star(x, so)) < 1e-9 * (1.0 + so * t));
      for (double tt = 1e-6; tt <= 1e6; tt *= 10.0)
        CHECK(m.phi(x, 2.0 * tt) <= std::pow(2.0, m.delta2_exponent) * m.phi(x, tt) * (1.0 + 1e-12));
      const double g = G(rng);
      CHECK(m.phi(x, g * t) <= std::pow(g, m.nabla2_exponent) * m.phi(x, t) * (1.0 + 1e-12));
    }
  }
  const auto pm = variable_exponent_model<2>(make_config(Regime::Matching, 2, 2.0), 1.9, 2.1);
  for (int i = 0; i < 50; ++i) {
    const auto x = random_point(rng);
    const double t = std::pow(10.0, L(rng));
    const auto f = pm.at(x);
    const double bi = legendre_conjugate([&](double s) { return f.phi_star_bound(s); },
                                         [&](double s) { return std::pow(s, 1.0 / (f.p - 1.0)); }, t);
    CHECK(bi == Approx(pm.phi(x, t)).epsilon(1e-8));
  }
}

TEST_CASE("phi is convex, nondecreasing and vanishes at zero") {
  std::mt19937_64 rng(25);
  for (const auto& m : sample_models()) {
    for (int i = 0; i < 100; ++i) {
      const auto x = random_point(rng);
      CHECK(m.phi(x, 0.0) == 0.0);
      double prev = 0.0;
      for (int k = 1; k < 200; ++k) {
        const double t = 0.05 * k;
        const double v = m.phi(x, t);
        CHECK(v >= prev);
        CHECK(2.0 * v <= m.phi(x, t - 0.05) + m.phi(x, t + 0.05) + 1e-12);
        prev = v;
      }
    }
  }
}

TEST_CASE("Luxemburg norm") {
  const auto quad = power_model<2>(2.0);
  const auto nodes = uniform_nodes<2>(32);
  const std::vector<double> one(nodes.size(), 1.0);
  // 4 / (2 γ²) = 1
  CHECK(luxemburg_norm<2>(quad, nodes, one).value == Approx(std::sqrt(2.0)).epsilon(1e-9));

  const auto cube = power_model<2>(3.0);
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> U(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> f(nodes.size()), g(nodes.size()), f2(nodes.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = U(rng);
      g[i] = f[i] + U(rng);
      f2[i] = 2.0 * f[i];
    }
    const double nf = luxemburg_norm<2>(cube, nodes, f).value;
    CHECK(luxemburg_norm<2>(cube, nodes, f2).value == Approx(2.0 * nf).epsilon(1e-8));
    CHECK(nf <= luxemburg_norm<2>(cube, nodes, g).value);
  }
}

TEST_CASE("weak Lebesgue estimator") {
  const auto nodes = uniform_nodes<2>(64);
  const std::vector<double> one(nodes.size(), 1.0);
  // Levels are dyadic, so the estimate of ‖1‖ = 4^{1/p} is resolved within a factor 2 from below.
  for (double p : {1.0, 2.0, 4.0}) {
    const double w = weak_lp_estimate<2>(nodes, one, p).value;
    CHECK(w <= std::pow(4.0, 1.0 / p));
    CHECK(w > 0.5 * std::pow(4.0, 1.0 / p));
  }
  CHECK_THROWS_AS(weak_lp_estimate<2>(nodes, one, 0.5), DomainError);

  // f = |x_d|^{-β} on the cone |x̄| <= 4|x_d|: weak norm at d/β settles, modular at d/β + 0.5 grows.
  const double beta = 0.5, p = 2.0 / beta;
  std::vector<double> weak, strong;
  for (int n : {128, 256, 512, 1024}) {
    const auto ns = uniform_nodes<2>(n);
    std::vector<double> f(ns.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto& x = ns.x[i];
      f[i] = std::abs(x[0]) <= 4.0 * std::abs(x[1]) ? std::pow(std::abs(x[1]), -beta) : 0.0;
    }
    weak.push_back(weak_lp_estimate<2>(ns, f, p).value);
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += ns.w[i] * std::pow(f[i], p + 0.5);
    strong.push_back(s);
  }
  CHECK(std::abs(weak[3] / weak[2] - 1.0) < 0.02);
  for (std::size_t i = 1; i < strong.size(); ++i) CHECK(strong[i] > 1.05 * strong[i - 1]);
}

TEST_CASE("Muckenhoupt estimates") {
  const auto one = muckenhoupt_check<2>([](const Vec<2>&) { return 1.0; }, 2.0, 4);
  CHECK(one.constant == Approx(1.0).epsilon(1e-14));

  std::vector<double> inside, outside;
  for (int L = 3; L <= 7; ++L) {
    inside.push_back(muckenhoupt_check<2>([](const Vec<2>& x) { return std::pow(std::abs(x[1]), 0.5); }, 2.0, L).constant);
    outside.push_back(muckenhoupt_check<2>([](const Vec<2>& x) { return std::pow(std::abs(x[1]), -2.0); }, 2.0, L).constant);
  }
  for (std::size_t i = 1; i < inside.size(); ++i) {
    CHECK(std::isfinite(inside[i]));
    CHECK(std::abs(inside[i] / inside[i - 1] - 1.0) < 0.02);
    CHECK(outside[i] > 1.5 * outside[i - 1]);
  }
  CHECK_THROWS_AS(muckenhoupt_check<2>([](const Vec<2>&) { return 1.0; }, 1.0, 3), DomainError);
}
