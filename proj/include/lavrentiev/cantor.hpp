#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lavrentiev/core.hpp"

namespace lav {

struct CantorParams {
  double lambda = 0.0;  ///< contraction ratio in (0, 1/2)
  int m = 1;            ///< number of product factors
  double dim = 0.0;     ///< m log 2 / log(1/λ)
};

/// Regime, ambient dimension, target exponent and the Cantor data of the contact set.
struct FractalConfig {
  Regime regime = Regime::Matching;
  int d = 2;
  double p0 = 2.0;
  std::optional<CantorParams> cantor;
  double exclusion = 1e-6;  ///< radius of the near-singular flag around the contact set
  int sub_depth = 6;        ///< Cantor depth of the m = 2 convolution

  double dim() const { return cantor ? cantor->dim : 0.0; }
  double lambda() const { return cantor ? cantor->lambda : 0.0; }
};

inline CantorParams cantor_params_from_lambda(double lambda, int m) {
  if (!(lambda > 0.0 && lambda < 0.5)) throw DomainError("need 0 < lambda < 1/2");
  if (m < 1) throw DomainError("need m >= 1");
  return {lambda, m, m * std::log(2.0) / std::log(1.0 / lambda)};
}

/// Solves the regime equation for the Cantor dimension; Matching has no Cantor set.
inline std::optional<CantorParams> dimension_params(Regime regime, int d, double p0) {
  if (d < 2) throw DomainError("need d >= 2");
  switch (regime) {
    case Regime::Matching:
      if (std::abs(p0 - d) > 1e-12) throw DomainError("matching regime requires p0 = d");
      return std::nullopt;
    case Regime::Sub: {
      if (!(p0 > 1.0 && p0 < d)) throw DomainError("sub regime requires 1 < p0 < d");
      const double D = d - p0;
      const int m = d - 1;
      return CantorParams{std::exp2(-m / D), m, D};
    }
    case Regime::Super: {
      if (!(p0 > d)) throw DomainError("super regime requires p0 > d");
      const double D = (p0 - d) / (p0 - 1.0);
      return CantorParams{std::exp2(-1.0 / D), 1, D};
    }
  }
  return std::nullopt;
}

inline FractalConfig make_config(Regime regime, int d, double p0) {
  FractalConfig c;
  c.regime = regime;
  c.d = d;
  c.p0 = p0;
  c.cantor = dimension_params(regime, d, p0);
  return c;
}

struct CantorPoint {
  double dist = 0.0;
  double nearest = 0.0;
};

/// Distance from x to C_λ ⊂ [-1/2, 1/2] together with a nearest point.
inline CantorPoint cantor_nearest_1d(double x, double lambda, double tol = 1e-14) {
  if (!(lambda > 0.0 && lambda < 0.5)) throw DomainError("need 0 < lambda < 1/2");
  CantorPoint best;
  if (std::abs(x + 0.5) <= std::abs(x - 0.5)) {
    best = {std::abs(x + 0.5), -0.5};
  } else {
    best = {std::abs(x - 0.5), 0.5};
  }
  struct Node {
    double c, w;
  };
  std::array<Node, 256> stack;
  int top = 0;
  stack[top++] = {0.0, 1.0};
  while (top > 0) {
    const Node n = stack[--top];
    const double lo = n.c - 0.5 * n.w, hi = n.c + 0.5 * n.w;
    const double lb = x < lo ? lo - x : (x > hi ? x - hi : 0.0);
    if (lb >= best.dist) continue;
    if (n.w < tol) {
      best = {lb, std::clamp(x, lo, hi)};
      continue;
    }
    const double off = 0.5 * (1.0 - lambda) * n.w, cw = lambda * n.w;
    const Node left{n.c - off, cw}, right{n.c + off, cw};
    if (top + 2 > static_cast<int>(stack.size())) throw ResourceError("cantor distance stack overflow");
    if (x < n.c) {
      stack[top++] = right;
      stack[top++] = left;
    } else {
      stack[top++] = left;
      stack[top++] = right;
    }
  }
  return best;
}

inline double cantor_distance_1d(double x, double lambda) { return cantor_nearest_1d(x, lambda).dist; }

/// Euclidean distance to the product set C_λ^m.
inline double cantor_distance(std::span<const double> x, double lambda) {
  double s = 0.0;
  for (double xi : x) {
    const double di = cantor_distance_1d(xi, lambda);
    s += di * di;
  }
  return std::sqrt(s);
}

/// Lebesgue measure of {x̄ : d(x̄, C_λ^m) <= r} by Monte Carlo with n samples, stratified over the
/// r-enlarged level-k cells (k the finest level whose enlarged cells are disjoint).
inline double neighborhood_measure(double lambda, int m, double r, std::size_t n, std::uint64_t seed = 0) {
  if (m < 1 || m > 2) throw DomainError("neighborhood_measure supports m = 1, 2");
  if (!(lambda > 0.0 && lambda < 0.5)) throw DomainError("need 0 < lambda < 1/2");
  int k = 0;
  while (k < 40 && (1.0 - 2.0 * lambda) * std::pow(lambda, k) > 2.0 * r) ++k;
  const double half = 0.5 * std::pow(lambda, k) + r;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::size_t hits = 0;
  std::array<double, 2> x{};
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double c = 0.0, scale = 0.5 * (1.0 - lambda);
      for (int l = 0; l < k; ++l) {
        c += (rng() & 1u) ? scale : -scale;
        scale *= lambda;
      }
      x[j] = c + half * U(rng);
    }
    if (cantor_distance(std::span<const double>(x.data(), m), lambda) <= r) ++hits;
  }
  const double cells = std::pow(2.0, m * k), box = std::pow(2.0 * half, m);
  return cells * box * static_cast<double>(hits) / static_cast<double>(n);
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Moments E[t^n], n = 0..N, of μ_λ on [-1/2, 1/2] by the self-similarity recursion.
inline std::vector<double> cantor_moments(double lambda, int N) {
  std::vector<double> M(N + 1, 0.0);
  M[0] = 1.0;
  const double a = 0.5 * (1.0 - lambda);
  for (int n = 1; n <= N; ++n) {
    if (n % 2 == 1) continue;
    double s = 0.0;
    double binom = 1.0;  // C(n, k)
    for (int k = 0; k < n; ++k) {
      if ((n - k) % 2 == 0) s += binom * std::pow(lambda, k) * M[k] * std::pow(a, n - k);
      binom = binom * (n - k) / (k + 1);
    }
    M[n] = s / (1.0 - std::pow(lambda, n));
  }
  return M;
}

/// Three-point Gauss rule for μ_λ; exact for polynomials of degree <= 5.
struct CantorGauss3 {
  std::array<double, 3> t{};
  std::array<double, 3> w{};
};

inline CantorGauss3 cantor_gauss3(double lambda) {
  const auto M = cantor_moments(lambda, 4);
  const double tau = std::sqrt(M[4] / M[2]);
  const double w1 = M[2] * M[2] / (2.0 * M[4]);
  return {{-tau, 0.0, tau}, {w1, 1.0 - 2.0 * w1, w1}};
}

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::uint64_t cells = 0;
  double excluded_mass_bound = 0.0;
  bool partial = false;
};

inline constexpr std::uint64_t kCantorCellBudget = std::uint64_t{1} << 18;

/// ∫ f dμ_λ^m by the equal-weight rule on the 2^{mk} level-k cell centers.
template <class F>
QuadResult cantor_integrate(F&& f, double lambda, int m, int k, std::uint64_t budget = kCantorCellBudget) {
  if (k < 1) throw DomainError("cantor_integrate needs depth k >= 1");
  if (m < 1 || m > 2) throw DomainError("cantor_integrate supports m = 1, 2");
  if (!(lambda > 0.0 && lambda < 0.5)) throw DomainError("need 0 < lambda < 1/2");
  if (static_cast<double>(m) * k > 62 || (std::uint64_t{1} << (m * k)) > budget)
    throw ResourceError("cantor_integrate: 2^(m k) cells exceed the cell budget");
  const std::uint64_t ncells = std::uint64_t{1} << (m * k);
  const double weight = 1.0 / static_cast<double>(ncells);
  const double a = 0.5 * (1.0 - lambda);
  const double parent_w = std::pow(lambda, k - 1);
  const double sep = 2.0 * a * parent_w;  // distance between sibling centers along an axis

  double sum = 0.0, comp = 0.0, max_osc = 0.0;
  std::array<double, 2> pt{};
  // Parents at level k-1 are enumerated by their digit strings.
  const std::uint64_t nparents = std::uint64_t{1} << (m * (k - 1));
  for (std::uint64_t idx = 0; idx < nparents; ++idx) {
    std::array<double, 2> c{0.0, 0.0};
    std::uint64_t bits = idx;
    double scale = a;
    for (int j = 0; j < k - 1; ++j) {
      for (int i = 0; i < m; ++i) {
        c[i] += ((bits & 1u) ? scale : -scale);
        bits >>= 1;
      }
      scale *= lambda;
    }
    const double off = a * parent_w;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    const int nchild = 1 << m;
    for (int ch = 0; ch < nchild; ++ch) {
      for (int i = 0; i < m; ++i) pt[i] = c[i] + (((ch >> i) & 1) ? off : -off);
      const double v = f(std::span<const double>(pt.data(), m));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      const double y = v * weight - comp;  // Kahan summation
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    max_osc = std::max(max_osc, hi - lo);
  }
  const double radius = std::pow(lambda, k) * std::sqrt(static_cast<double>(m)) / 2.0;
  return {sum, max_osc * radius / sep, ncells, 0.0, false};
}

/// ∫ K(x - y) dμ_λ(y) for a kernel that is a polynomial of degree <= 5 between consecutive
/// breakpoints. Cells without a breakpoint are integrated exactly by the Gauss rule; cells
/// straddling one are split until narrower than wmin.
template <class R, class K>
R cantor_convolve_1d(K&& kernel, double x, std::span<const double> breaks, const CantorGauss3& g, double lambda,
                     double wmin) {
  R acc{};
  struct Node {
    double c, w, mass;
  };
  std::vector<Node> stack;
  stack.reserve(128);
  stack.push_back({0.0, 1.0, 1.0});
  auto add = [&acc](const R& v, double s) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s * v[i];
  };
  while (!stack.empty()) {
    const Node n = stack.back();
    stack.pop_back();
    const double zlo = x - n.c - 0.5 * n.w, zhi = x - n.c + 0.5 * n.w;
    bool straddles = false;
    for (double b : breaks) {
      if (b > zlo && b < zhi) {
        straddles = true;
        break;
      }
    }
    if (!straddles) {
      for (int i = 0; i < 3; ++i) add(kernel(x - n.c - n.w * g.t[i]), n.mass * g.w[i]);
    } else if (n.w < wmin) {
      add(kernel(x - n.c), n.mass);
    } else {
      const double off = 0.5 * (1.0 - lambda) * n.w;
      stack.push_back({n.c - off, lambda * n.w, 0.5 * n.mass});
      stack.push_back({n.c + off, lambda * n.w, 0.5 * n.mass});
    }
  }
  return acc;
}

/// ∫ K(ȳ) dμ_λ^2(ȳ) at fixed depth with a tensor Gauss rule per leaf cell.
/// skip(center, halfwidth) returns true when K vanishes on the whole cell.
template <class R, class K, class Skip>
R cantor_convolve_2d(K&& kernel, Skip&& skip, const CantorGauss3& g, double lambda, int depth) {
  R acc{};
  struct Node {
    double c0, c1, w;
    int level;
  };
  std::vector<Node> stack;
  stack.push_back({0.0, 0.0, 1.0, 0});
  const double leaf_mass = std::pow(0.25, depth);
  while (!stack.empty()) {
    const Node n = stack.back();
    stack.pop_back();
    if (skip(std::array<double, 2>{n.c0, n.c1}, 0.5 * n.w)) continue;
    if (n.level == depth) {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const R v = kernel(std::array<double, 2>{n.c0 + n.w * g.t[i], n.c1 + n.w * g.t[j]});
          const double s = leaf_mass * g.w[i] * g.w[j];
          for (std::size_t q = 0; q < acc.size(); ++q) acc[q] += s * v[q];
        }
      continue;
    }
    const double off = 0.5 * (1.0 - lambda) * n.w;
    for (int a = -1; a <= 1; a += 2)
      for (int b = -1; b <= 1; b += 2) stack.push_back({n.c0 + a * off, n.c1 + b * off, lambda * n.w, n.level + 1});
  }
  return acc;
}

}  // namespace lav
