#pragma once

#include <array>
#include <cmath>
#include <ostream>
#include <vector>

#include "lavrentiev/core.hpp"
#include "lavrentiev/fields.hpp"
#include "lavrentiev/orlicz.hpp"

namespace lav {

/// Nodal values on the uniform grid with n nodes per axis over [-1, 1]^D.
template <int D>
struct GridFunction {
  int n = 0;
  std::vector<double> values;
  std::vector<char> boundary_mask;

  double h() const { return 2.0 / (n - 1); }
  std::size_t size() const { return values.size(); }

  Vec<D> node(std::size_t k) const {
    Vec<D> x{};
    for (int i = 0; i < D; ++i) {
      x[i] = -1.0 + h() * static_cast<double>(k % n);
      k /= n;
    }
    return x;
  }
};

template <int D>
GridFunction<D> make_grid(int n) {
  if (n < 3) throw DomainError("grid needs at least 3 nodes per axis");
  GridFunction<D> g;
  g.n = n;
  std::size_t total = 1;
  for (int i = 0; i < D; ++i) total *= static_cast<std::size_t>(n);
  g.values.assign(total, 0.0);
  g.boundary_mask.assign(total, 0);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t t = k;
    for (int i = 0; i < D; ++i) {
      const std::size_t j = t % n;
      t /= n;
      if (j == 0 || j == static_cast<std::size_t>(n - 1)) g.boundary_mask[k] = 1;
    }
  }
  return g;
}

/// Nodal interpolant of f; interior nodes are zeroed when interior_zero is set.
template <int D, class F>
GridFunction<D> interpolate(F&& f, int n, bool interior_zero = false) {
  auto g = make_grid<D>(n);
  for (std::size_t k = 0; k < g.size(); ++k)
    g.values[k] = (interior_zero && !g.boundary_mask[k]) ? 0.0 : f(g.node(k));
  return g;
}

/// Cell energy Σ h^D φ(x_c, |∇_h w|) with the forward-difference gradient at the lower corner.
template <int D>
class DiscreteEnergy {
 public:
  DiscreteEnergy(const OrliczModel<D>& m, int n) : n_(n), h_(2.0 / (n - 1)) {
    std::size_t cells = 1;
    for (int i = 0; i < D; ++i) cells *= static_cast<std::size_t>(n - 1);
    phi_.reserve(cells);
    base_.reserve(cells);
    for (std::size_t c = 0; c < cells; ++c) {
      std::size_t t = c, node = 0, stride = 1;
      Vec<D> x{};
      for (int i = 0; i < D; ++i) {
        const std::size_t j = t % (n - 1);
        t /= (n - 1);
        x[i] = -1.0 + h_ * (static_cast<double>(j) + 0.5);
        node += j * stride;
        stride *= n;
      }
      phi_.push_back(m.at(x));
      base_.push_back(node);
    }
    std::size_t stride = 1;
    for (int i = 0; i < D; ++i) {
      stride_[i] = stride;
      stride *= n;
    }
  }

  double value(const std::vector<double>& w) const {
    const double vol = std::pow(h_, D);
    double s = 0.0;
    for (std::size_t c = 0; c < base_.size(); ++c) s += vol * phi_[c].phi(norm<D>(cell_grad(w, c)));
    return s;
  }

  double value_and_gradient(const std::vector<double>& w, std::vector<double>& g) const {
    const double vol = std::pow(h_, D);
    g.assign(w.size(), 0.0);
    double s = 0.0;
    for (std::size_t c = 0; c < base_.size(); ++c) {
      const Vec<D> gr = cell_grad(w, c);
      const double r = norm<D>(gr);
      s += vol * phi_[c].phi(r);
      if (r == 0.0) continue;
      const double k = vol * phi_[c].dphi(r) / (r * h_);
      const std::size_t b = base_[c];
      for (int i = 0; i < D; ++i) {
        g[b + stride_[i]] += k * gr[i];
        g[b] -= k * gr[i];
      }
    }
    return s;
  }

  std::size_t cells() const { return base_.size(); }

 private:
  Vec<D> cell_grad(const std::vector<double>& w, std::size_t c) const {
    Vec<D> gr{};
    const std::size_t b = base_[c];
    for (int i = 0; i < D; ++i) gr[i] = (w[b + stride_[i]] - w[b]) / h_;
    return gr;
  }

  int n_;
  double h_;
  std::array<std::size_t, D> stride_{};
  std::vector<PointPhi> phi_;
  std::vector<std::size_t> base_;
};

template <int D>
double discrete_energy(const OrliczModel<D>& m, const GridFunction<D>& w) {
  return DiscreteEnergy<D>(m, w.n).value(w.values);
}

struct SolverPolicy {
  int max_iter = 20000;
  double rel_tol = 1e-10;  ///< stop when the energy drops by less than this (relative) over `window` steps
  int window = 10;
  double grad_tol = 0.0;  ///< stop when |∇E| <= grad_tol |∇E_0|
  double armijo = 1e-4;
};

template <int D>
struct MinimizeResult {
  GridFunction<D> w;
  double energy = 0.0;
  int iterations = 0;
  bool converged = false;
  bool partial = false;  ///< iteration cap reached
  double grad_norm = 0.0;
  std::vector<double> energy_log;
};

/// Gradient descent on the interior nodes: Barzilai-Borwein trial step, Armijo backtracking.
template <int D>
MinimizeResult<D> minimize_w(const OrliczModel<D>& m, GridFunction<D> w, const SolverPolicy& pol = {}) {
  const DiscreteEnergy<D> E(m, w.n);
  MinimizeResult<D> res;
  std::vector<double> g, g_new, x_new(w.size()), s(w.size()), y(w.size());
  auto project = [&](std::vector<double>& v) {
    for (std::size_t k = 0; k < v.size(); ++k)
      if (w.boundary_mask[k]) v[k] = 0.0;
  };
  auto sq = [](const std::vector<double>& v) {
    double a = 0.0;
    for (double x : v) a += x * x;
    return a;
  };
  double f = E.value_and_gradient(w.values, g);
  project(g);
  const double g0 = std::sqrt(sq(g));
  res.energy_log.push_back(f);
  double step = g0 > 0.0 ? 1.0 / g0 : 1.0;
  int it = 0;
  for (; it < pol.max_iter; ++it) {
    const double gg = sq(g);
    if (gg == 0.0 || std::sqrt(gg) <= pol.grad_tol * g0) {
      res.converged = true;
      break;
    }
    double f_new = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 200; ++bt) {
      for (std::size_t k = 0; k < x_new.size(); ++k) x_new[k] = w.values[k] - step * g[k];
      f_new = E.value(x_new);
      if (f_new <= f - pol.armijo * step * gg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = true;  // no descent left at machine precision
      break;
    }
    f_new = E.value_and_gradient(x_new, g_new);
    project(g_new);
    double sy = 0.0, ss = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      s[k] = x_new[k] - w.values[k];
      y[k] = g_new[k] - g[k];
      sy += s[k] * y[k];
      ss += s[k] * s[k];
    }
    w.values.swap(x_new);
    g.swap(g_new);
    f = f_new;
    res.energy_log.push_back(f);
    step = sy > 0.0 ? ss / sy : 2.0 * step;
    const std::size_t L = res.energy_log.size();
    if (pol.rel_tol > 0.0 && static_cast<int>(L) > pol.window) {
      const double old = res.energy_log[L - 1 - pol.window];
      if (old - f <= pol.rel_tol * std::abs(old)) {
        res.converged = true;
        ++it;
        break;
      }
    }
  }
  res.iterations = it;
  res.partial = !res.converged;
  res.energy = f;
  res.grad_norm = std::sqrt(sq(g));
  res.w = std::move(w);
  return res;
}

/// Boundary data t·u on the grid; interior initialized with the interpolant or zero.
template <int D>
GridFunction<D> boundary_problem(const FractalConfig& cfg, double t, int n, bool interior_zero = false) {
  return interpolate<D>([&](const Vec<D>& x) { return t * fractal_fields<D>(x, cfg, kFieldU).u; }, n, interior_zero);
}

/// Minimizer with boundary data t·u on an n-node grid, started from the interpolant of t·u.
template <int D>
MinimizeResult<D> minimize_w(const OrliczModel<D>& m, double t, int n, const SolverPolicy& pol = {}) {
  return minimize_w<D>(m, boundary_problem<D>(m.cfg, t, n), pol);
}

/// CSV with columns x1..xD,value.
template <int D>
void write_csv(std::ostream& os, const GridFunction<D>& w) {
  for (int i = 0; i < D; ++i) os << 'x' << (i + 1) << ',';
  os << "value\n";
  os.precision(17);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const auto x = w.node(k);
    for (int i = 0; i < D; ++i) os << x[i] << ',';
    os << w.values[k] << '\n';
  }
}

}  // namespace lav
