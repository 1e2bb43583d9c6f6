#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "lavrentiev/cantor.hpp"
#include "lavrentiev/core.hpp"
#include "lavrentiev/fields.hpp"

namespace lav {

struct QuadPolicy {
  int max_depth = 24;
  int min_depth = 2;
  double tol = 1e-7;  ///< absolute Richardson tolerance, shared among cells by volume
  double delta = 1e-6;  ///< exclusion radius around the contact set
  bool refine_near_S = true;
  std::uint64_t budget = 4'000'000;
  /// Tolerance-driven refinement stops at this level; refinement towards the contact set continues to max_depth.
  int far_depth = std::numeric_limits<int>::max();
  /// Decay exponent s of the shell contributions near the contact set (q = 2^{-s});
  /// NaN means the ratio is estimated from the last resolved shells.
  double tail_rate = std::numeric_limits<double>::quiet_NaN();
  /// Shell levels per self-similarity period of the contact set; the tail ratio is taken between whole periods.
  int tail_period = 1;
};

/// Accepted quadrature nodes; shell marks nodes of cells adjacent to the refinement tube.
template <int D>
struct NodeSet {
  std::vector<Vec<D>> x;
  std::vector<double> w;
  std::vector<int> level;
  std::vector<char> shell;
  std::uint64_t cells = 0;
  double excluded_volume = 0.0;
  bool partial = false;
  int tail_period = 1;

  std::size_t size() const { return x.size(); }
};

namespace detail {

inline constexpr std::array<double, 3> kGaussX{-0.7745966692414834, 0.0, 0.7745966692414834};
inline constexpr std::array<double, 3> kGaussW{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

template <int N>
constexpr int ipow3() {
  int r = 1;
  for (int i = 0; i < N; ++i) r *= 3;
  return r;
}

/// Tensor Gauss-Legendre nodes and weights of order 3 on the cube c + [-h, h]^N.
template <int N, class Emit>
void gauss_cell(const std::array<double, N>& c, double h, Emit&& emit) {
  constexpr int n = ipow3<N>();
  const double vol = std::pow(h, N);
  for (int k = 0; k < n; ++k) {
    std::array<double, N> p{};
    double w = vol;
    int t = k;
    for (int i = 0; i < N; ++i) {
      const int j = t % 3;
      t /= 3;
      p[i] = c[i] + h * kGaussX[j];
      w *= kGaussW[j];
    }
    emit(p, w);
  }
}

/// Tail bound from the last resolved shells: 2 I_L q / (1 - q).
inline double shell_tail(std::map<int, double> shells, double tail_rate, int period = 1) {
  // Deep shells can fall where the integrand vanishes identically; they carry no decay information.
  while (!shells.empty() && shells.rbegin()->second == 0.0) shells.erase(std::prev(shells.end()));
  if (shells.empty()) return 0.0;
  const int L = shells.rbegin()->first;
  const double IL = shells.rbegin()->second;
  if (IL == 0.0) return 0.0;
  if (period > 1 && !std::isfinite(tail_rate)) {
    auto block = [&](int top) {
      double s = 0.0;
      for (int j = top - period + 1; j <= top; ++j) {
        auto it = shells.find(j);
        if (it != shells.end()) s += it->second;
      }
      return s;
    };
    const double A = block(L), B = block(L - period);
    if (B <= 0.0) return 2.0 * A;
    const double q = A / B;
    if (q >= 1.0) return std::numeric_limits<double>::infinity();
    return 2.0 * A * q / (1.0 - q);
  }
  double q;
  if (std::isfinite(tail_rate)) {
    if (tail_rate <= 0.0) return std::numeric_limits<double>::infinity();
    q = std::exp2(-tail_rate);
  } else {
    int k = 0;
    double Ik = 0.0;
    for (int j = 4; j >= 1; --j) {
      auto it = shells.find(L - j);
      if (it != shells.end() && it->second > 0.0) {
        k = j;
        Ik = it->second;
        break;
      }
    }
    if (k == 0) return 2.0 * IL;
    q = std::pow(IL / Ik, 1.0 / k);
    if (q >= 1.0) return std::numeric_limits<double>::infinity();
  }
  return 2.0 * IL * q / (1.0 - q);
}

}  // namespace detail

/// Adaptive dyadic quadrature over Ω = (-1, 1)^D with refinement towards the contact set.
template <int D, class F>
QuadResult integrate_volume(F&& f, const FractalConfig& cfg, const QuadPolicy& pol, NodeSet<D>* sink = nullptr) {
  struct Cell {
    Vec<D> c;
    int level;
    bool parent_near;
    double G;
    bool hasG;
  };
  auto gauss = [&](const Vec<D>& c, double h) {
    double s = 0.0;
    detail::gauss_cell<D>(c, h, [&](const Vec<D>& p, double w) { s += w * f(p); });
    return s;
  };
  const double omega_vol = std::pow(2.0, D);
  const double hd_factor = std::sqrt(static_cast<double>(D));
  QuadResult res;
  std::map<int, double> shells;
  double excluded_volume = 0.0;
  std::uint64_t processed = 0;
  double sum = 0.0, comp = 0.0;

  std::vector<Cell> stack;
  stack.push_back({Vec<D>{}, 0, false, 0.0, false});
  while (!stack.empty()) {
    Cell cell = stack.back();
    stack.pop_back();
    ++processed;
    const double h = std::ldexp(1.0, -cell.level);
    const double hd = h * hd_factor;
    double dS = std::numeric_limits<double>::infinity();
    if (pol.refine_near_S || pol.delta > 0.0) dS = contact_distance<D>(cell.c, cfg);
    if (pol.delta > 0.0 && dS + hd <= pol.delta) {
      excluded_volume += std::pow(2.0 * h, D);
      continue;
    }
    const bool near = pol.refine_near_S && (dS - hd < h);
    if (!cell.hasG) cell.G = gauss(cell.c, h);
    std::array<Vec<D>, (1 << D)> kids;
    std::array<double, (1 << D)> kidG{};
    double S = 0.0;
    for (int k = 0; k < (1 << D); ++k) {
      for (int i = 0; i < D; ++i) kids[k][i] = cell.c[i] + (((k >> i) & 1) ? 0.5 * h : -0.5 * h);
      kidG[k] = gauss(kids[k], 0.5 * h);
      S += kidG[k];
    }
    const double vol = std::pow(2.0 * h, D);
    const bool over_budget = processed > pol.budget;
    if (over_budget) res.partial = true;
    const bool can_refine = cell.level < pol.max_depth && !over_budget;
    const bool refine =
        can_refine && (cell.level < pol.min_depth || near ||
                       (cell.level < pol.far_depth && std::abs(S - cell.G) > pol.tol * vol / omega_vol));
    if (refine) {
      for (int k = 0; k < (1 << D); ++k) stack.push_back({kids[k], cell.level + 1, near, kidG[k], true});
      continue;
    }
    const double y = S - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    res.error_estimate += std::abs(S - cell.G);
    ++res.cells;
    if (cell.parent_near && !near) shells[cell.level] += std::abs(S);
    if (sink) {
      for (int k = 0; k < (1 << D); ++k) {
        detail::gauss_cell<D>(kids[k], 0.5 * h, [&](const Vec<D>& p, double w) {
          sink->x.push_back(p);
          sink->w.push_back(w);
          sink->level.push_back(cell.level);
          sink->shell.push_back(cell.parent_near && !near ? 1 : 0);
        });
      }
    }
  }
  res.value = sum;
  res.excluded_mass_bound = detail::shell_tail(shells, pol.tail_rate, pol.tail_period);
  if (sink) {
    sink->tail_period = pol.tail_period;
    sink->cells = res.cells;
    sink->excluded_volume = excluded_volume;
    sink->partial = res.partial;
  }
  return res;
}

/// Quadrature on stored nodes; the tail bound is rebuilt from the shell nodes.
template <int D>
QuadResult nodes_integrate(const NodeSet<D>& nodes, const std::vector<double>& values,
                           double tail_rate = std::numeric_limits<double>::quiet_NaN()) {
  QuadResult r;
  std::map<int, double> shells;
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double v = nodes.w[i] * values[i];
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    if (nodes.shell[i]) shells[nodes.level[i]] += v;
  }
  for (auto& [lvl, s] : shells) s = std::abs(s);
  r.value = sum;
  r.cells = nodes.cells;
  r.partial = nodes.partial;
  r.excluded_mass_bound = detail::shell_tail(shells, tail_rate, nodes.tail_period);
  return r;
}

/// Adaptive tensor quadrature over the face {x_axis = side} of ∂Ω, side = ±1.
template <int D, class Gf>
QuadResult integrate_surface(Gf&& g, int axis, double side, const QuadPolicy& pol) {
  constexpr int N = D - 1;
  auto lift = [&](const std::array<double, N>& p) {
    Vec<D> x{};
    int j = 0;
    for (int i = 0; i < D; ++i) x[i] = (i == axis) ? side : p[j++];
    return x;
  };
  auto gauss = [&](const std::array<double, N>& c, double h) {
    double s = 0.0;
    detail::gauss_cell<N>(c, h, [&](const std::array<double, N>& p, double w) { s += w * g(lift(p)); });
    return s;
  };
  struct Cell {
    std::array<double, N> c;
    int level;
    double coarse;
  };
  const double face_vol = std::pow(2.0, N);
  QuadResult res;
  std::uint64_t processed = 0;
  std::vector<Cell> stack;
  stack.push_back({std::array<double, N>{}, 0, gauss(std::array<double, N>{}, 1.0)});
  while (!stack.empty()) {
    const Cell cell = stack.back();
    stack.pop_back();
    ++processed;
    const double h = std::ldexp(1.0, -cell.level);
    std::array<std::array<double, N>, (1 << N)> kids;
    std::array<double, (1 << N)> kidG{};
    double S = 0.0;
    for (int k = 0; k < (1 << N); ++k) {
      for (int i = 0; i < N; ++i) kids[k][i] = cell.c[i] + (((k >> i) & 1) ? 0.5 * h : -0.5 * h);
      kidG[k] = gauss(kids[k], 0.5 * h);
      S += kidG[k];
    }
    const double vol = std::pow(2.0 * h, N);
    const bool over_budget = processed > pol.budget;
    if (over_budget) res.partial = true;
    const bool refine = cell.level < pol.max_depth && !over_budget &&
                        (cell.level < pol.min_depth || std::abs(S - cell.coarse) > pol.tol * vol / face_vol);
    if (refine) {
      for (int k = 0; k < (1 << N); ++k) stack.push_back({kids[k], cell.level + 1, kidG[k]});
      continue;
    }
    res.value += S;
    res.error_estimate += std::abs(S - cell.coarse);
    ++res.cells;
  }
  return res;
}

}  // namespace lav
