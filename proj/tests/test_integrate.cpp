#include <catch_amalgamated.hpp>

#include <cmath>

#include "lavrentiev/integrate.hpp"
#include "lavrentiev/orlicz.hpp"
#include "lavrentiev/verify.hpp"

using namespace lav;
using Catch::Approx;

namespace {

QuadPolicy depth_policy(int depth, double tol, bool near = true) {
  QuadPolicy pol;
  pol.max_depth = depth;
  pol.tol = tol;
  pol.refine_near_S = near;
  pol.delta = 0.0;
  return pol;
}

}  // namespace

TEST_CASE("constants integrate exactly") {
  const auto c2 = make_config(Regime::Matching, 2, 2.0);
  const auto c3 = make_config(Regime::Matching, 3, 3.0);
  auto one = [](const auto&) { return 1.0; };
  CHECK(integrate_volume<2>(one, c2, depth_policy(6, 1e-9)).value == Approx(4.0).epsilon(1e-14));
  CHECK(integrate_volume<3>(one, c3, depth_policy(4, 1e-9)).value == Approx(8.0).epsilon(1e-14));
  CHECK(integrate_surface<2>(one, 1, 1.0, surface_policy()).value == Approx(2.0).epsilon(1e-14));
  CHECK(integrate_surface<3>(one, 0, -1.0, surface_policy()).value == Approx(4.0).epsilon(1e-14));
  double total = 0.0;
  for (int ax = 0; ax < 3; ++ax)
    for (double s : {-1.0, 1.0}) total += integrate_surface<3>([](const Vec<3>&) { return 0.5; }, ax, s, surface_policy()).value;
  CHECK(total == Approx(24.0 * 0.5).epsilon(1e-14));
}

TEST_CASE("integrable singularity along a line") {
  // The level-L error of ∫|x_2|^{-1/2} halves every two levels; the limit is 2 · 4 = 8.
  const auto cfg = make_config(Regime::Matching, 2, 2.0);
  auto f = [](const Vec<2>& x) { return 1.0 / std::sqrt(std::abs(x[1])); };
  double v[3];
  for (int i = 0; i < 3; ++i) v[i] = integrate_volume<2>(f, cfg, depth_policy(8 + 2 * i, 1e-8, false)).value;
  CHECK(v[2] < 8.0);
  CHECK(aitken_limit(v[0], v[1], v[2]) == Approx(8.0).margin(1e-4));
}

TEST_CASE("gradient modular converges below p0 and diverges at p0") {
  const auto cfg = make_config(Regime::Matching, 2, 2.0);
  auto modular_at_depth = [&](double p, int depth) {
    const auto m = power_model<2>(p);
    auto f = [&](const Vec<2>& x) { return m.phi(x, norm<2>(fractal_fields<2>(x, cfg, kFieldU).grad_u)); };
    return integrate_volume<2>(f, cfg, depth_policy(depth, 1e-9));
  };
  double lo[3], hi[3];
  QuadResult last;
  for (int i = 0; i < 3; ++i) {
    const auto r = modular_at_depth(1.5, 8 + 2 * i);
    lo[i] = r.value;
    if (i == 2) last = r;
    hi[i] = modular_at_depth(2.0, 8 + 2 * i).value;
  }
  // p = 2: every two levels add the same amount.
  CHECK((hi[2] - hi[1]) == Approx(hi[1] - hi[0]).epsilon(1e-3));
  CHECK(hi[2] - hi[1] > 1.0);
  // p = 1.5: increments contract and the tail bound covers what is left.
  CHECK((lo[2] - lo[1]) < 0.6 * (lo[1] - lo[0]));
  CHECK(last.excluded_mass_bound > lo[2] - lo[1]);
}

TEST_CASE("exclusion tube bound brackets the modular") {
  const auto cfg = make_config(Regime::Matching, 2, 2.0);
  const auto m = power_model<2>(1.5);
  auto f = [&](const Vec<2>& x) { return m.phi(x, norm<2>(fractal_fields<2>(x, cfg, kFieldU).grad_u)); };
  QuadPolicy fine = depth_policy(40, 1e-9);
  fine.delta = 1e-10;
  fine.far_depth = 10;
  const auto ref = integrate_volume<2>(f, cfg, fine);
  for (double delta : {1e-3, 1e-5, 1e-7}) {
    QuadPolicy pol = fine;
    pol.delta = delta;
    const auto r = integrate_volume<2>(f, cfg, pol);
    CHECK(r.value <= ref.value + 1e-6);
    CHECK(r.value + r.excluded_mass_bound >= ref.value - 1e-6);
  }
}

TEST_CASE("linearity") {
  const auto cfg = make_config(Regime::Super, 2, 3.0);
  auto f = [](const Vec<2>& x) { return std::sin(3.0 * x[0]) * x[1] * x[1]; };
  auto g = [](const Vec<2>& x) { return std::exp(x[0] - x[1]); };
  const auto pol = depth_policy(7, 1e-8);
  const auto a = integrate_volume<2>(f, cfg, pol), b = integrate_volume<2>(g, cfg, pol);
  const auto c = integrate_volume<2>([&](const Vec<2>& x) { return 2.5 * f(x) - g(x); }, cfg, pol);
  CHECK(c.value == Approx(2.5 * a.value - b.value).margin(2.5 * a.error_estimate + b.error_estimate + c.error_estimate + 1e-12));
  CHECK(b.value == Approx((std::exp(1.0) - std::exp(-1.0)) * (std::exp(1.0) - std::exp(-1.0))).epsilon(1e-8));
}

TEST_CASE("budget overrun is flagged") {
  const auto cfg = make_config(Regime::Matching, 2, 2.0);
  QuadPolicy pol = depth_policy(30, 1e-14);
  pol.budget = 1000;
  const auto r = integrate_volume<2>([](const Vec<2>& x) { return 1.0 / std::sqrt(std::abs(x[1])); }, cfg, pol);
  CHECK(r.partial);
}

TEST_CASE("boundary pairing by faces") {
  const auto cfg = make_config(Regime::Matching, 2, 2.0);
  const auto faces = boundary_pairing_faces<2>(cfg, surface_policy());
  REQUIRE(faces.size() == 4);
  CHECK(faces[0] == 0.0);
  CHECK(faces[1] == 0.0);
  CHECK(faces[2] + faces[3] == Approx(1.0).margin(1e-3));
}
