#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "lavrentiev/cantor.hpp"
#include "lavrentiev/core.hpp"
#include "lavrentiev/fields.hpp"
#include "lavrentiev/integrate.hpp"

namespace lav {

/// Continuity modulus σ(t) = 1 / log(e + 1/t)^κ, σ(0) = 0.
inline double modulus_sigma(double t, double kappa) {
  if (t <= 0.0) return 0.0;
  return 1.0 / std::pow(std::log(std::numbers::e + 1.0 / t), kappa);
}

inline double conjugate_exponent(double p) { return p / (p - 1.0); }

/// sup_{t >= 0} (s t - φ(t)) for convex φ with derivative dphi, by bisection on dphi(t) = s.
template <class Phi, class DPhi>
double legendre_conjugate(Phi&& phi, DPhi&& dphi, double s, double rel_tol = 1e-12) {
  if (s <= 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (dphi(hi) < s) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return std::numeric_limits<double>::infinity();
  }
  while (dphi(lo) > s && lo > 0.0) lo *= 0.5;
  for (int it = 0; it < 400 && hi - lo > rel_tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (dphi(mid) < s) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double t = 0.5 * (lo + hi);
  return std::max(0.0, s * t - phi(t));
}

enum class ModelKind { VariableExponent, DoublePhase, Weighted };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::VariableExponent: return "variable_exponent";
    case ModelKind::DoublePhase: return "double_phase";
    case ModelKind::Weighted: return "weighted";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "variable_exponent") return ModelKind::VariableExponent;
  if (s == "double_phase") return ModelKind::DoublePhase;
  if (s == "weighted") return ModelKind::Weighted;
  throw DomainError("unknown model '" + s + "' (expected variable_exponent | double_phase | weighted)");
}

/// φ(x, ·) at a fixed point: t^p/p (+ a t^q/q) or (a t)^p/p for the weighted model.
struct PointPhi {
  ModelKind kind = ModelKind::VariableExponent;
  double p = 2.0, q = 0.0, a = 0.0;

  double phi(double t) const {
    if (t <= 0.0) return 0.0;
    switch (kind) {
      case ModelKind::VariableExponent: return std::pow(t, p) / p;
      case ModelKind::DoublePhase: return std::pow(t, p) / p + (a > 0.0 ? a * std::pow(t, q) / q : 0.0);
      case ModelKind::Weighted: return std::pow(a * t, p) / p;
    }
    return 0.0;
  }

  double dphi(double t) const {
    if (t <= 0.0) return 0.0;
    switch (kind) {
      case ModelKind::VariableExponent: return std::pow(t, p - 1.0);
      case ModelKind::DoublePhase: return std::pow(t, p - 1.0) + (a > 0.0 ? a * std::pow(t, q - 1.0) : 0.0);
      case ModelKind::Weighted: return a * std::pow(a * t, p - 1.0);
    }
    return 0.0;
  }

  /// Closed-form upper bound of φ*(s); exact except for double phase with a > 0, where it is min(ψ, s^{p'}/p').
  double phi_star_bound(double s) const {
    if (s <= 0.0) return 0.0;
    const double pc = conjugate_exponent(p);
    switch (kind) {
      case ModelKind::VariableExponent: return std::pow(s, pc) / pc;
      case ModelKind::DoublePhase: {
        const double single = std::pow(s, pc) / pc;
        if (a == 0.0) return single;
        const double qc = conjugate_exponent(q);
        return std::min(single, std::pow(a, -1.0 / (q - 1.0)) * std::pow(s, qc) / qc);
      }
      case ModelKind::Weighted: return std::pow(s / a, pc) / pc;
    }
    return 0.0;
  }
};

/// Generalized Orlicz function φ(x, t) of one of the three energy models, with its conjugate.
template <int D>
struct OrliczModel {
  ModelKind kind = ModelKind::VariableExponent;
  FractalConfig cfg;

  double p_minus = 0.0, p_plus = 0.0;
  bool continuous = false;
  double kappa = 0.5;

  double p = 2.0, q = 0.0;
  double alpha = 0.0, beta = 0.0, gamma = 0.0, eps = 1.0;

  double coupling_p0 = 2.0;      ///< exponent of the coupling s = t^{p0-1}
  double delta2_exponent = 2.0;  ///< φ(x, 2t) <= 2^{q_max} φ(x, t)
  double nabla2_exponent = 2.0;  ///< φ(x, γt) <= γ^s φ(x, t) for γ <= 1

  /// Distance-to-Cantor ratio indicator with band (1/2, 2); 1 near the contact set's cone.
  double rho_a(const Vec<D>& x) const {
    if (contact_distance<D>(x, cfg) == 0.0) return 1.0;
    return rho<D>(x, cfg, 0.5, 2.0).value;
  }

  /// |x_d| for matching/sub, |x̄| for super.
  double xhat(const Vec<D>& x) const {
    return cfg.regime == Regime::Super ? norm_bar<D>(x) : std::abs(x[D - 1]);
  }

  double exponent(const Vec<D>& x) const {
    if (kind != ModelKind::VariableExponent) return p;
    const double r = norm_bar<D>(x), a = std::abs(x[D - 1]);
    if (!continuous) {
      bool minus = false;
      switch (cfg.regime) {
        case Regime::Matching: minus = a <= r; break;
        case Regime::Sub:
          minus = a <= cantor_distance(std::span<const double>(x.data(), D - 1), cfg.lambda());
          break;
        case Regime::Super: minus = cantor_distance_1d(x[D - 1], cfg.lambda()) <= r; break;
      }
      return minus ? p_minus : p_plus;
    }
    const double sg = modulus_sigma(xhat(x), kappa);
    const double pm = cfg.p0 - sg, pp = cfg.p0 + sg;
    double w = 0.0;  // share of p⁺
    switch (cfg.regime) {
      case Regime::Matching: w = r > 0.0 ? theta_a(a / r) : 1.0; break;
      case Regime::Sub: w = rho_a(x); break;
      case Regime::Super: w = 1.0 - rho_a(x); break;
    }
    return pm * (1.0 - w) + pp * w;
  }

  /// a(x) for the double phase model, ω(x) for the weighted model, 1 otherwise.
  double weight(const Vec<D>& x) const {
    const double r = norm_bar<D>(x), a = std::abs(x[D - 1]);
    if (kind == ModelKind::DoublePhase) {
      switch (cfg.regime) {
        case Regime::Matching: {
          if (a == 0.0) return 0.0;
          return std::pow(a, alpha) * (r > 0.0 ? theta_a(a / r) : 1.0);
        }
        case Regime::Sub: return a == 0.0 ? 0.0 : std::pow(a, alpha) * rho_a(x);
        case Regime::Super: return r == 0.0 ? 0.0 : std::pow(r, alpha) * (1.0 - rho_a(x));
      }
    }
    if (kind == ModelKind::Weighted) {
      const double wm = omega_minus(x), wp = omega_plus(x);
      double share = 0.0;  // share of ω⁺
      switch (cfg.regime) {
        case Regime::Matching: share = r > 0.0 ? theta_a(a / r) : 1.0; break;
        case Regime::Sub: share = rho_a(x); break;
        case Regime::Super: share = 1.0 - rho_a(x); break;
      }
      if (share == 0.0) return wm;
      if (share == 1.0) return wp;
      return wm * (1.0 - share) + wp * share;
    }
    return 1.0;
  }

  double omega_minus(const Vec<D>& x) const { return eps * std::pow(xhat(x), beta); }
  double omega_plus(const Vec<D>& x) const { return std::pow(xhat(x), alpha); }

  /// φ(x, ·) frozen at x.
  PointPhi at(const Vec<D>& x) const {
    PointPhi f;
    f.kind = kind;
    switch (kind) {
      case ModelKind::VariableExponent: f.p = exponent(x); break;
      case ModelKind::DoublePhase:
        f.p = p;
        f.q = q;
        f.a = weight(x);
        break;
      case ModelKind::Weighted:
        f.p = p;
        f.a = weight(x);
        break;
    }
    return f;
  }

  double phi(const Vec<D>& x, double t) const { return t <= 0.0 ? 0.0 : at(x).phi(t); }
  double dphi(const Vec<D>& x, double t) const { return t <= 0.0 ? 0.0 : at(x).dphi(t); }

  double phi_star(const Vec<D>& x, double s) const {
    if (s <= 0.0) return 0.0;
    switch (kind) {
      case ModelKind::VariableExponent: {
        const double e = conjugate_exponent(exponent(x));
        return std::pow(s, e) / e;
      }
      case ModelKind::DoublePhase: {
        const double w = weight(x);
        const double pc = conjugate_exponent(p);
        if (w == 0.0) return std::pow(s, pc) / pc;
        return legendre_conjugate([&](double t) { return std::pow(t, p) / p + w * std::pow(t, q) / q; },
                                  [&](double t) { return std::pow(t, p - 1.0) + w * std::pow(t, q - 1.0); }, s);
      }
      case ModelKind::Weighted: {
        const double pc = conjugate_exponent(p);
        return std::pow(s / weight(x), pc) / pc;
      }
    }
    return 0.0;
  }

  /// Closed-form upper bound of φ*: min(ψ, s^{p'}/p') for double phase, φ* otherwise.
  double phi_star_bound(const Vec<D>& x, double s) const { return s <= 0.0 ? 0.0 : at(x).phi_star_bound(s); }

  /// ψ(x, s) = (1/q') a(x)^{-1/(q-1)} s^{q'}; infinite where a = 0.
  double psi(const Vec<D>& x, double s) const {
    const double w = weight(x);
    if (w == 0.0) return s > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    const double qc = conjugate_exponent(q);
    return std::pow(w, -1.0 / (q - 1.0)) * std::pow(s, qc) / qc;
  }
};

/// p(x) from p⁻/p⁺ on the regime's cones (discontinuous) or p0 ∓ σ mixed by θ_p / ρ_a (continuous).
template <int D>
OrliczModel<D> variable_exponent_model(const FractalConfig& cfg, double p_minus, double p_plus,
                                       bool continuous = false, double kappa = 0.5) {
  OrliczModel<D> m;
  m.kind = ModelKind::VariableExponent;
  m.cfg = cfg;
  m.continuous = continuous;
  m.kappa = kappa;
  if (cfg.d != D) throw DomainError("configuration dimension does not match the model dimension");
  if (!continuous) {
    if (!(1.0 < p_minus && p_minus < cfg.p0 && cfg.p0 < p_plus))
      throw DomainError("variable exponent requires 1 < p- < p0 < p+");
    m.p_minus = p_minus;
    m.p_plus = p_plus;
    m.coupling_p0 = std::sqrt(p_minus * p_plus);
  } else {
    if (!(kappa > 0.0 && kappa < 1.0)) throw DomainError("continuous exponent requires 0 < kappa < 1");
    const double xmax = cfg.regime == Regime::Super ? std::sqrt(D - 1.0) : 1.0;
    const double smax = modulus_sigma(xmax, kappa);
    if (!(cfg.p0 - smax > 1.0)) throw DomainError("continuous exponent requires p0 - sigma(max|x^|) > 1");
    m.p_minus = cfg.p0 - smax;
    m.p_plus = cfg.p0 + smax;
    m.coupling_p0 = cfg.p0;
  }
  m.p = m.p_minus;
  m.delta2_exponent = m.p_plus;
  m.nabla2_exponent = m.p_minus;
  return m;
}

/// Single power t^p/p, the sanity model of the solver.
template <int D>
OrliczModel<D> power_model(double p) {
  if (!(p > 1.0)) throw DomainError("power model requires p > 1");
  OrliczModel<D> m;
  m.kind = ModelKind::VariableExponent;
  m.cfg = make_config(Regime::Matching, D, D);
  m.p_minus = m.p_plus = m.p = p;
  m.coupling_p0 = p;
  m.delta2_exponent = m.nabla2_exponent = p;
  return m;
}

/// Room in q > p + α max{1, (p-1)/(d-1)}.
inline double double_phase_slack(int d, double p, double q, double alpha) {
  return q - p - alpha * std::max(1.0, (p - 1.0) / (d - 1.0));
}

/// Double phase t^p/p + a(x) t^q/q; the regime follows from p0 = p + min(0.1, slack/2).
template <int D>
OrliczModel<D> double_phase_model(double p, double q, double alpha, double p0 = 0.0) {
  if (!(p > 1.0)) throw DomainError("double phase requires p > 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("double phase requires 0 < alpha <= 1");
  const double slack = double_phase_slack(D, p, q, alpha);
  if (!(slack > 0.0)) throw DomainError("double phase requires q > p + alpha max{1, (p-1)/(d-1)}");
  if (p0 == 0.0) p0 = p + std::min(0.1, 0.5 * slack);
  if (!(p0 > p && double_phase_slack(D, p0, q, alpha) > 0.0))
    throw DomainError("double phase requires p < p0 and q > p0 + alpha max{1, (p0-1)/(d-1)}");
  const Regime reg = std::abs(p0 - D) < 1e-12 ? Regime::Matching : (p0 < D ? Regime::Sub : Regime::Super);
  OrliczModel<D> m;
  m.kind = ModelKind::DoublePhase;
  m.cfg = make_config(reg, D, reg == Regime::Matching ? D : p0);
  m.p = p;
  m.q = q;
  m.alpha = alpha;
  m.coupling_p0 = m.cfg.p0;
  m.delta2_exponent = q;
  m.nabla2_exponent = p;
  return m;
}

/// γ of the weighted construction for the configured regime.
inline double weighted_gamma(const FractalConfig& cfg, double p) {
  switch (cfg.regime) {
    case Regime::Matching:
    case Regime::Sub: return 1.0 - cfg.p0 / p;
    case Regime::Super: return (cfg.d - 1.0) / (cfg.p0 - 1.0) * (1.0 - cfg.p0 / p);
  }
  return 0.0;
}

/// Weighted (ω(x) t)^p / p with ω between ε|x̂|^β and |x̂|^α.
template <int D>
OrliczModel<D> weighted_model(const FractalConfig& cfg, double p, double alpha, double beta, double eps) {
  if (cfg.d != D) throw DomainError("configuration dimension does not match the model dimension");
  if (!(p > 1.0)) throw DomainError("weighted model requires p > 1");
  const double gamma = weighted_gamma(cfg, p);
  const double scale = cfg.regime == Regime::Super ? (D - 1.0) : 1.0;
  const double lo = -scale / p, hi = scale / conjugate_exponent(p);
  if (!(lo < alpha && alpha < gamma && gamma < beta && beta < hi))
    throw DomainError("weighted model requires -c/p < alpha < gamma < beta < c/p' (gamma = " + std::to_string(gamma) +
                      ")");
  const double xmax = cfg.regime == Regime::Super ? std::sqrt(D - 1.0) : 1.0;
  if (!(eps > 0.0 && eps <= std::pow(xmax, alpha - beta)))
    throw DomainError("weighted model requires 0 < eps <= max|x^|^(alpha - beta)");
  OrliczModel<D> m;
  m.kind = ModelKind::Weighted;
  m.cfg = cfg;
  m.p = p;
  m.alpha = alpha;
  m.beta = beta;
  m.gamma = gamma;
  m.eps = eps;
  m.coupling_p0 = p;
  m.delta2_exponent = p;
  m.nabla2_exponent = p;
  return m;
}

template <int D>
double conjugate(const OrliczModel<D>& m, const Vec<D>& x, double s) {
  return m.phi_star(x, s);
}

/// Uniform cell-centered nodes on Ω = (-1, 1)^D, one per cell.
template <int D>
NodeSet<D> uniform_nodes(int n) {
  NodeSet<D> ns;
  const double h = 2.0 / n;
  const double w = std::pow(h, D);
  std::size_t total = 1;
  for (int i = 0; i < D; ++i) total *= static_cast<std::size_t>(n);
  for (std::size_t k = 0; k < total; ++k) {
    Vec<D> x{};
    std::size_t t = k;
    for (int i = 0; i < D; ++i) {
      x[i] = -1.0 + h * (static_cast<double>(t % n) + 0.5);
      t /= n;
    }
    ns.x.push_back(x);
    ns.w.push_back(w);
    ns.level.push_back(0);
    ns.shell.push_back(0);
  }
  ns.cells = total;
  return ns;
}

template <int D>
double modular(const OrliczModel<D>& m, const NodeSet<D>& nodes, std::span<const double> f, double scale = 1.0) {
  double s = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) s += nodes.w[i] * m.phi(nodes.x[i], std::abs(f[i]) * scale);
  return s;
}

struct NormResult {
  double value = 0.0;
  bool divergent = false;
};

/// inf{γ > 0 : ∫ φ(x, |f|/γ) <= 1} on the given nodes.
template <int D>
NormResult luxemburg_norm(const OrliczModel<D>& m, const NodeSet<D>& nodes, std::span<const double> f,
                          double tol = 1e-10) {
  auto mod = [&](double g) { return modular<D>(m, nodes, f, 1.0 / g); };
  double lo = 1.0, hi = 1.0;
  if (mod(1.0) > 1.0) {
    while (!(mod(hi) <= 1.0)) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e300) return {std::numeric_limits<double>::infinity(), true};
    }
  } else {
    while (mod(lo) <= 1.0) {
      hi = lo;
      lo *= 0.5;
      if (lo < 1e-300) return {0.0, false};
    }
  }
  while (hi - lo > tol * std::max(1.0, lo)) {
    const double mid = 0.5 * (lo + hi);
    if (mod(mid) <= 1.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return {hi, false};
}

struct WeakNorm {
  double value = 0.0;
  double level = 0.0;  ///< γ attaining the supremum
};

/// sup over γ ∈ [gmin, gmax] (ratio 2) of γ |{|f| > γ}|^{1/p}, level-set measure from node weights.
template <int D>
WeakNorm weak_lp_estimate(const NodeSet<D>& nodes, std::span<const double> f, double p, double gmin = 1e-3,
                          double gmax = 1e9) {
  if (!(p >= 1.0)) throw DomainError("weak norm requires p >= 1");
  std::vector<std::size_t> idx(nodes.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return std::abs(f[a]) > std::abs(f[b]); });
  std::vector<double> grid;
  for (double g = gmin; g <= gmax * (1 + 1e-12); g *= 2.0) grid.push_back(g);
  WeakNorm best;
  double measure = 0.0;
  std::size_t k = 0;
  for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
    const double g = *it;
    while (k < idx.size() && std::abs(f[idx[k]]) > g) measure += nodes.w[idx[k++]];
    const double v = g * std::pow(measure, 1.0 / p);
    if (v > best.value) best = {v, g};
  }
  return best;
}

struct MuckenhouptResult {
  double constant = 0.0;
  int worst_level = 0;
  bool infinite = false;
};

/// sup over dyadic subcubes of Ω up to max_level of ⟨a⟩ ⟨a^{-1/(p-1)}⟩^{p-1}; averages by
/// composite order-3 Gauss on cubes `resolve` levels finer.
template <int D, class W>
MuckenhouptResult muckenhoupt_check(W&& weight, double p, int max_level, int resolve = 2) {
  if (!(p > 1.0)) throw DomainError("Muckenhoupt check requires p > 1");
  if (max_level < 0) throw DomainError("Muckenhoupt check requires max_level >= 0");
  const int fine = max_level + resolve;
  const std::size_t n = std::size_t{1} << fine;
  std::size_t total = 1;
  for (int i = 0; i < D; ++i) total *= n;
  if (total > (std::size_t{1} << 24)) throw ResourceError("Muckenhoupt check: too many fine cells");
  const double h = 1.0 / static_cast<double>(n);  // half-width of a fine cell
  const double e = -1.0 / (p - 1.0);
  std::vector<double> Ia(total), Ir(total);
  bool infinite = false;
  for (std::size_t k = 0; k < total; ++k) {
    Vec<D> c{};
    std::size_t t = k;
    for (int i = 0; i < D; ++i) {
      c[i] = -1.0 + h * (2.0 * static_cast<double>(t % n) + 1.0);
      t /= n;
    }
    double sa = 0.0, sr = 0.0;
    detail::gauss_cell<D>(c, h, [&](const Vec<D>& x, double w) {
      const double a = weight(x);
      if (!(a > 0.0) || !std::isfinite(a)) infinite = true;
      sa += w * a;
      sr += w * std::pow(a, e);
    });
    Ia[k] = sa;
    Ir[k] = sr;
  }
  MuckenhouptResult res;
  if (infinite) {
    res.constant = std::numeric_limits<double>::infinity();
    res.infinite = true;
    return res;
  }
  std::size_t m = n;
  double vol = std::pow(2.0 * h, D);
  for (int level = fine; level >= 0; --level) {
    if (level <= max_level) {
      for (std::size_t k = 0; k < Ia.size(); ++k) {
        const double A = (Ia[k] / vol) * std::pow(Ir[k] / vol, p - 1.0);
        if (A > res.constant) {
          res.constant = A;
          res.worst_level = level;
        }
      }
    }
    if (level == 0) break;
    const std::size_t mh = m / 2;
    std::size_t coarse_total = 1;
    for (int i = 0; i < D; ++i) coarse_total *= mh;
    std::vector<double> Ja(coarse_total, 0.0), Jr(coarse_total, 0.0);
    for (std::size_t k = 0; k < Ia.size(); ++k) {
      std::size_t t = k, ck = 0, stride = 1;
      for (int i = 0; i < D; ++i) {
        ck += ((t % m) / 2) * stride;
        t /= m;
        stride *= mh;
      }
      Ja[ck] += Ia[k];
      Jr[ck] += Ir[k];
    }
    Ia.swap(Ja);
    Ir.swap(Jr);
    m = mh;
    vol *= std::pow(2.0, D);
  }
  return res;
}

}  // namespace lav
