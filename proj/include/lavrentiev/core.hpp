#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lav {

template <int D>
using Vec = std::array<double, D>;

template <int D>
using Mat = std::array<std::array<double, D>, D>;

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct SingularPointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <int D>
double dot(const Vec<D>& a, const Vec<D>& b) {
  double s = 0.0;
  for (int i = 0; i < D; ++i) s += a[i] * b[i];
  return s;
}

template <int D>
double norm(const Vec<D>& a) {
  return std::sqrt(dot<D>(a, a));
}

// |x̄| for x = (x̄, x_d)
template <int D>
double norm_bar(const Vec<D>& x) {
  double s = 0.0;
  for (int i = 0; i < D - 1; ++i) s += x[i] * x[i];
  return std::sqrt(s);
}

template <int D>
Vec<D> matvec(const Mat<D>& A, const Vec<D>& v) {
  Vec<D> r{};
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) r[i] += A[i][j] * v[j];
  return r;
}

inline double sgn(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

/// Cubic smoothstep 3s^2 - 2s^3 clamped to [0, 1]; sup|ramp'| = 3/2.
inline double ramp(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * (3.0 - 2.0 * s);
}

inline double ramp_prime(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return 6.0 * s * (1.0 - s);
}

inline constexpr double kRampSlope = 1.5;

/// θ(t) = ramp(4t - 1): 1_(1/2,∞) <= θ <= 1_(1/4,∞), sup|θ'| = 6.
inline double theta(double t) { return ramp(4.0 * t - 1.0); }
inline double theta_prime(double t) { return 4.0 * ramp_prime(4.0 * t - 1.0); }

/// Wide transition used by the energy models: 1_(2,∞) <= θ_a <= 1_(1/2,∞).
inline double theta_a(double t) { return ramp((t - 0.5) / 1.5); }
inline double theta_a_prime(double t) { return ramp_prime((t - 0.5) / 1.5) / 1.5; }

/// Surface area of the unit sphere in R^{d-1}: 2 for d = 2, 2π for d = 3.
inline double sphere_sigma(int d) {
  const double k = 0.5 * (d - 1);
  return 2.0 * std::pow(std::numbers::pi, k) / std::tgamma(k);
}

/// Amplitude of u on the faces {x_d = ±1}.
inline constexpr double kAmplitude = 0.5;

enum class Regime { Matching, Sub, Super };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::Matching: return "matching";
    case Regime::Sub: return "sub";
    case Regime::Super: return "super";
  }
  return "?";
}

inline Regime parse_regime(const std::string& s) {
  if (s == "matching") return Regime::Matching;
  if (s == "sub") return Regime::Sub;
  if (s == "super") return Regime::Super;
  throw DomainError("unknown regime '" + s + "' (expected matching | sub | super)");
}

}  // namespace lav
