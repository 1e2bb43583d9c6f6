#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>

#include "lavrentiev/cantor.hpp"
#include "lavrentiev/core.hpp"

namespace lav {

template <int D>
struct FieldSample {
  double u = 0.0;
  Vec<D> grad_u{};
  Mat<D> A{};
  Vec<D> b{};
  bool near_singular = false;
};

template <int D>
struct LocalizedSample {
  FieldSample<D> base;
  double eta = 0.0;
  Vec<D> grad_eta{};
  double u_circ = 0.0, u_bd = 0.0;
  Vec<D> grad_u_circ{}, grad_u_bd{};
  Mat<D> A_circ{}, A_bd{};
  Vec<D> b_circ{}, b_bd{};
};

enum FieldParts : unsigned { kFieldU = 1u, kFieldAB = 2u, kFieldAll = 3u };

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

template <int D>
struct AB {
  Mat<D> A{};
  Vec<D> b{};
};

/// A_d and b_d = div A_d at x = (x̄, x_d); zero where θ(|x̄|/|x_d|) vanishes.
template <int D>
AB<D> block_ab(const Vec<D>& x) {
  AB<D> out;
  const double r = norm_bar<D>(x);
  const double a = std::abs(x[D - 1]);
  if (r == 0.0) return out;
  const double s = a > 0.0 ? r / a : kInf;
  const double th = a > 0.0 ? theta(s) : 1.0;
  const double thp = a > 0.0 ? theta_prime(s) : 0.0;
  const double sig = sphere_sigma(D);
  const double g = th * std::pow(r, 1 - D) / sig;
  for (int i = 0; i < D - 1; ++i) {
    out.A[i][D - 1] = -g * x[i];
    out.A[D - 1][i] = g * x[i];
  }
  if (thp != 0.0) {
    const double r2 = std::pow(r, 2 - D);
    for (int i = 0; i < D - 1; ++i) out.b[i] = x[i] * thp * sgn(x[D - 1]) * r2 / (a * a * sig);
    out.b[D - 1] = thp * r2 / (a * sig);
  }
  return out;
}

/// u_d and ∇u_d at x.
template <int D>
void block_u(const Vec<D>& x, double& u, Vec<D>& grad) {
  const double r = norm_bar<D>(x);
  const double z = x[D - 1];
  const double a = std::abs(z);
  grad = Vec<D>{};
  if (r == 0.0) {
    u = kAmplitude * sgn(z);
    return;
  }
  const double s = a / r;
  u = kAmplitude * sgn(z) * theta(s);
  const double thp = theta_prime(s);
  if (thp == 0.0) return;
  grad[D - 1] = kAmplitude * thp / r;
  for (int i = 0; i < D - 1; ++i) grad[i] = -kAmplitude * sgn(z) * thp * a * x[i] / (r * r * r);
}

template <int D>
std::array<double, D * D + D> pack(const AB<D>& ab) {
  std::array<double, D * D + D> v{};
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) v[i * D + j] = ab.A[i][j];
  for (int i = 0; i < D; ++i) v[D * D + i] = ab.b[i];
  return v;
}

template <int D>
void unpack(const std::array<double, D * D + D>& v, Mat<D>& A, Vec<D>& b) {
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) A[i][j] = v[i * D + j];
  for (int i = 0; i < D; ++i) b[i] = v[D * D + i];
}

}  // namespace detail

/// Zhikov's building block u_d, A_d, b_d.
template <int D>
FieldSample<D> building_block(const Vec<D>& x) {
  if (norm<D>(x) == 0.0) throw SingularPointError("building_block: x = 0 is the singular point");
  FieldSample<D> s;
  detail::block_u<D>(x, s.u, s.grad_u);
  const auto ab = detail::block_ab<D>(x);
  s.A = ab.A;
  s.b = ab.b;
  return s;
}

/// Distance from x to the contact set of the configuration.
template <int D>
double contact_distance(const Vec<D>& x, const FractalConfig& cfg) {
  switch (cfg.regime) {
    case Regime::Matching: return norm<D>(x);
    case Regime::Sub: {
      const double dc = cantor_distance(std::span<const double>(x.data(), D - 1), cfg.lambda());
      return std::hypot(dc, x[D - 1]);
    }
    case Regime::Super: return std::hypot(norm_bar<D>(x), cantor_distance_1d(x[D - 1], cfg.lambda()));
  }
  return 0.0;
}

template <int D>
struct Scalar {
  double value = 0.0;
  Vec<D> grad{};
};

/// Smooth indicator of the cone around the contact set, built from the ratio of the Cantor
/// distance to |x̂|: equals 1 where ratio <= τ1 and 0 where ratio >= τ2.
template <int D>
Scalar<D> rho(const Vec<D>& x, const FractalConfig& cfg, double tau1, double tau2) {
  if (!cfg.cantor) throw DomainError("rho is defined for the sub and super regimes only");
  const double lambda = cfg.lambda();
  Scalar<D> out;
  if (cfg.regime == Regime::Sub) {
    double dist2 = 0.0;
    Vec<D> diff{};
    for (int i = 0; i < D - 1; ++i) {
      const auto cp = cantor_nearest_1d(x[i], lambda);
      diff[i] = x[i] - cp.nearest;
      dist2 += cp.dist * cp.dist;
    }
    const double dist = std::sqrt(dist2);
    const double a = std::abs(x[D - 1]);
    if (a == 0.0 && dist == 0.0) throw SingularPointError("rho: x lies on the contact set");
    if (a == 0.0) return out;
    if (dist == 0.0) {
      out.value = 1.0;
      return out;
    }
    const double q = dist / a;
    const double s = (q - tau1) / (tau2 - tau1);
    out.value = 1.0 - ramp(s);
    const double dq = -ramp_prime(s) / (tau2 - tau1);
    if (dq == 0.0) return out;
    for (int i = 0; i < D - 1; ++i) out.grad[i] = dq * diff[i] / (dist * a);
    out.grad[D - 1] = dq * (-dist * sgn(x[D - 1]) / (a * a));
    return out;
  }
  const auto cp = cantor_nearest_1d(x[D - 1], lambda);
  const double dist = cp.dist;
  const double r = norm_bar<D>(x);
  if (r == 0.0 && dist == 0.0) throw SingularPointError("rho: x lies on the contact set");
  if (r == 0.0) return out;
  if (dist == 0.0) {
    out.value = 1.0;
    return out;
  }
  const double q = dist / r;
  const double s = (q - tau1) / (tau2 - tau1);
  out.value = 1.0 - ramp(s);
  const double dq = -ramp_prime(s) / (tau2 - tau1);
  if (dq == 0.0) return out;
  for (int i = 0; i < D - 1; ++i) out.grad[i] = dq * (-dist * x[i] / (r * r * r));
  out.grad[D - 1] = dq * sgn(x[D - 1] - cp.nearest) / r;
  return out;
}

namespace detail {

template <int D>
void sub_ab(const Vec<D>& x, const FractalConfig& cfg, Mat<D>& A, Vec<D>& b) {
  using R = std::array<double, D * D + D>;
  const double lambda = cfg.lambda();
  const auto g = cantor_gauss3(lambda);
  const double a = std::abs(x[D - 1]);
  if constexpr (D == 2) {
    auto kernel = [&](double z) { return pack<D>(block_ab<D>(Vec<D>{z, x[1]})); };
    std::array<double, 4> brk{-0.5 * a, -0.25 * a, 0.25 * a, 0.5 * a};
    std::span<const double> breaks(brk);
    double wmin = 1e-10 * a;
    if (a == 0.0) {
      brk[0] = 0.0;
      breaks = std::span<const double>(brk.data(), 1);
      wmin = 1e-14;
    }
    const R v = cantor_convolve_1d<R>(kernel, x[0], breaks, g, lambda, wmin);
    unpack<D>(v, A, b);
  } else {
    static_assert(D == 3, "sub regime convolution is implemented for d = 2, 3");
    auto kernel = [&](const std::array<double, 2>& y) {
      return pack<D>(block_ab<D>(Vec<D>{x[0] - y[0], x[1] - y[1], x[2]}));
    };
    // A_d(·, x_d) vanishes on the ball |z̄| < |x_d|/4.
    auto skip = [&](const std::array<double, 2>& c, double hw) {
      const double dx = std::abs(x[0] - c[0]) + hw, dy = std::abs(x[1] - c[1]) + hw;
      return std::hypot(dx, dy) < 0.25 * a;
    };
    const R v = cantor_convolve_2d<R>(kernel, skip, g, lambda, cfg.sub_depth);
    unpack<D>(v, A, b);
  }
}

template <int D>
void super_u(const Vec<D>& x, const FractalConfig& cfg, double& u, Vec<D>& grad) {
  using R = std::array<double, D + 1>;
  const double lambda = cfg.lambda();
  const auto g = cantor_gauss3(lambda);
  const double r = norm_bar<D>(x);
  auto kernel = [&](double z) {
    Vec<D> y = x;
    y[D - 1] = z;
    double uu;
    Vec<D> gg;
    block_u<D>(y, uu, gg);
    R v{};
    v[0] = uu;
    for (int i = 0; i < D; ++i) v[1 + i] = gg[i];
    return v;
  };
  std::array<double, 4> brk{-0.5 * r, -0.25 * r, 0.25 * r, 0.5 * r};
  std::span<const double> breaks(brk);
  double wmin = 1e-10 * r;
  if (r == 0.0) {
    brk[0] = 0.0;
    breaks = std::span<const double>(brk.data(), 1);
    wmin = 1e-14;
  }
  const R v = cantor_convolve_1d<R>(kernel, x[D - 1], breaks, g, lambda, wmin);
  u = v[0];
  for (int i = 0; i < D; ++i) grad[i] = v[1 + i];
}

template <int D>
void super_ab(const Vec<D>& x, const FractalConfig& cfg, Mat<D>& A, Vec<D>& b) {
  A = Mat<D>{};
  b = Vec<D>{};
  const double r = norm_bar<D>(x);
  if (r == 0.0) {
    if (cantor_distance_1d(x[D - 1], cfg.lambda()) == 0.0) throw SingularPointError("x lies on the contact set");
    return;
  }
  const auto rh = rho<D>(x, cfg, 2.0, 4.0);
  const double f = std::pow(r, 1 - D) / sphere_sigma(D);
  for (int i = 0; i < D - 1; ++i) {
    A[i][D - 1] = -f * x[i] * rh.value;
    A[D - 1][i] = f * x[i] * rh.value;
    b[i] = -f * x[i] * rh.grad[D - 1];
    b[D - 1] += f * x[i] * rh.grad[i];
  }
}

}  // namespace detail

/// u, ∇u, A, b of the fractal example selected by the configuration.
template <int D>
FieldSample<D> fractal_fields(const Vec<D>& x, const FractalConfig& cfg, unsigned parts = kFieldAll) {
  static_assert(D == 2 || D == 3, "fields are implemented for d = 2, 3");
  if (cfg.d != D) throw DomainError("configuration dimension does not match the point dimension");
  FieldSample<D> s;
  const double dS = contact_distance<D>(x, cfg);
  s.near_singular = dS < cfg.exclusion;
  if (dS == 0.0) return s;
  switch (cfg.regime) {
    case Regime::Matching: {
      if (parts & kFieldU) detail::block_u<D>(x, s.u, s.grad_u);
      if (parts & kFieldAB) {
        const auto ab = detail::block_ab<D>(x);
        s.A = ab.A;
        s.b = ab.b;
      }
      break;
    }
    case Regime::Sub: {
      if (parts & kFieldU) {
        const auto rh = rho<D>(x, cfg, 2.0, 4.0);
        const double sg = sgn(x[D - 1]);
        s.u = kAmplitude * sg * rh.value;
        for (int i = 0; i < D; ++i) s.grad_u[i] = kAmplitude * sg * rh.grad[i];
      }
      if (parts & kFieldAB) detail::sub_ab<D>(x, cfg, s.A, s.b);
      break;
    }
    case Regime::Super: {
      if (parts & kFieldU) detail::super_u<D>(x, cfg, s.u, s.grad_u);
      if (parts & kFieldAB) detail::super_ab<D>(x, cfg, s.A, s.b);
      break;
    }
  }
  return s;
}

/// Tensor-product cutoff: 1 on [-4/6, 4/6]^d, 0 outside (-5/6, 5/6)^d, |∇η| <= 9 sqrt(d).
template <int D>
Scalar<D> cutoff_eta(const Vec<D>& x) {
  std::array<double, D> v{}, dv{};
  for (int i = 0; i < D; ++i) {
    const double s = (std::abs(x[i]) - 4.0 / 6.0) * 6.0;
    v[i] = 1.0 - ramp(s);
    dv[i] = -6.0 * ramp_prime(s) * sgn(x[i]);
  }
  Scalar<D> out;
  out.value = 1.0;
  for (int i = 0; i < D; ++i) out.value *= v[i];
  for (int i = 0; i < D; ++i) {
    double g = dv[i];
    for (int j = 0; j < D; ++j)
      if (j != i) g *= v[j];
    out.grad[i] = g;
  }
  return out;
}

inline double eta_gradient_bound(int d) { return 9.0 * std::sqrt(static_cast<double>(d)); }

template <int D>
LocalizedSample<D> localize(const FieldSample<D>& f, const Vec<D>& x) {
  LocalizedSample<D> s;
  s.base = f;
  const auto e = cutoff_eta<D>(x);
  s.eta = e.value;
  s.grad_eta = e.grad;
  s.u_circ = e.value * f.u;
  s.u_bd = (1.0 - e.value) * f.u;
  const Vec<D> Ag = matvec<D>(f.A, e.grad);
  for (int i = 0; i < D; ++i) {
    s.grad_u_circ[i] = e.value * f.grad_u[i] + f.u * e.grad[i];
    s.grad_u_bd[i] = (1.0 - e.value) * f.grad_u[i] - f.u * e.grad[i];
    s.b_circ[i] = e.value * f.b[i] + Ag[i];
    s.b_bd[i] = (1.0 - e.value) * f.b[i] - Ag[i];
    for (int j = 0; j < D; ++j) {
      s.A_circ[i][j] = e.value * f.A[i][j];
      s.A_bd[i][j] = (1.0 - e.value) * f.A[i][j];
    }
  }
  return s;
}

/// u°, u^∂, A°, A^∂, b°, b^∂ at x.
template <int D>
LocalizedSample<D> localized_fields(const Vec<D>& x, const FractalConfig& cfg, unsigned parts = kFieldAll) {
  return localize<D>(fractal_fields<D>(x, cfg, parts), x);
}

}  // namespace lav
