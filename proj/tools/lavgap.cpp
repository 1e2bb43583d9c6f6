// lavgap: sample fields, verify the construction, scan the gap, certify and minimize.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lavrentiev/minimize.hpp"
#include "lavrentiev/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Command-line overrides; unset values keep the config file (or default) entry.
struct Overrides {
  std::string config_path;
  std::optional<std::string> regime, model, out;
  std::optional<int> dim, n, grid, k_min, k_max, max_iter;
  std::optional<double> p0, t;
  std::optional<std::uint64_t> seed;
};

json default_model(const std::string& kind, lav::Regime regime, double p0) {
  if (kind == "variable_exponent") {
    const double gap = regime == lav::Regime::Matching ? 0.1 : 0.2;
    return {{"kind", kind}, {"p_minus", p0 - gap}, {"p_plus", p0 + gap}, {"continuous", false}, {"kappa", 0.5}};
  }
  if (kind == "double_phase") return {{"kind", kind}, {"p", 1.8}, {"q", 3.2}, {"alpha", 0.5}};
  if (kind == "weighted") return {{"kind", kind}, {"p", 2.0}, {"alpha", -0.25}, {"beta", 0.25}, {"eps", nullptr}};
  throw ConfigError("unknown model kind '" + kind + "'");
}

double default_p0(lav::Regime r, int d) {
  switch (r) {
    case lav::Regime::Matching: return d;
    case lav::Regime::Sub: return d - 0.5;
    case lav::Regime::Super: return d + 1.0;
  }
  return d;
}

/// Fills every key so that the resolved config round-trips.
json resolve(json cfg, const Overrides& o) {
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  auto set = [&](const char* key, const auto& v) {
    if (v) cfg[key] = *v;
  };
  set("regime", o.regime);
  set("d", o.dim);
  set("seed", o.seed);
  set("output_dir", o.out);
  if (!cfg.contains("regime")) cfg["regime"] = "matching";
  if (!cfg.contains("d")) cfg["d"] = 2;
  const auto regime = lav::parse_regime(cfg["regime"].get<std::string>());
  const int d = cfg["d"].get<int>();
  if (d != 2 && d != 3) throw ConfigError("d must be 2 or 3");
  if (o.p0) cfg["p0"] = *o.p0;
  if (!cfg.contains("p0") || cfg["p0"].is_null()) cfg["p0"] = default_p0(regime, d);

  json model = cfg.value("model", json::object());
  if (o.model) model = json{{"kind", *o.model}};
  const std::string kind = model.value("kind", std::string("variable_exponent"));
  json full = default_model(kind, regime, cfg["p0"].get<double>());
  for (auto& [k, v] : model.items()) {
    if (!full.contains(k)) throw ConfigError("unknown model key '" + k + "' for " + kind);
    full[k] = v;
  }
  cfg["model"] = full;

  json gap = cfg.value("gap", json::object());
  if (o.k_min) gap["k_min"] = *o.k_min;
  if (o.k_max) gap["k_max"] = *o.k_max;
  if (!gap.contains("k_min")) gap["k_min"] = -10;
  if (!gap.contains("k_max")) gap["k_max"] = 0;
  cfg["gap"] = gap;

  const lav::SolverPolicy sp;
  json solver = cfg.value("solver", json::object());
  if (o.n) solver["n"] = *o.n;
  if (o.t) solver["t"] = *o.t;
  if (o.max_iter) solver["max_iter"] = *o.max_iter;
  if (!solver.contains("n")) solver["n"] = d == 2 ? 65 : 33;
  if (!solver.contains("t")) solver["t"] = nullptr;
  if (!solver.contains("max_iter")) solver["max_iter"] = sp.max_iter;
  if (!solver.contains("rel_tol")) solver["rel_tol"] = sp.rel_tol;
  if (!solver.contains("window")) solver["window"] = sp.window;
  cfg["solver"] = solver;

  json quad = cfg.value("quadrature", json::object());
  if (!quad.contains("far_depth")) quad["far_depth"] = 8;
  if (!quad.contains("budget")) quad["budget"] = 1'000'000;
  cfg["quadrature"] = quad;

  json sample = cfg.value("sample", json::object());
  if (o.grid) sample["grid"] = *o.grid;
  if (!sample.contains("grid")) sample["grid"] = 101;
  cfg["sample"] = sample;

  json norms = cfg.value("norms", json::object());
  if (!norms.contains("levels")) norms["levels"] = nullptr;
  cfg["norms"] = norms;

  if (!cfg.contains("seed")) cfg["seed"] = 0;
  if (!cfg.contains("output_dir")) cfg["output_dir"] = ".";
  return cfg;
}

lav::FractalConfig fractal_config(const json& cfg) {
  return lav::make_config(lav::parse_regime(cfg["regime"]), cfg["d"].get<int>(), cfg["p0"].get<double>());
}

template <int D>
lav::QuadPolicy modular_policy(const json& cfg, const lav::FractalConfig& fc) {
  auto pol = lav::modular_policy<D>(fc);
  pol.far_depth = cfg["quadrature"]["far_depth"].get<int>();
  pol.budget = cfg["quadrature"]["budget"].get<std::uint64_t>();
  return pol;
}

/// Builds the configured model; the double phase model picks its own regime.
template <int D>
lav::OrliczModel<D> build_model(const json& cfg) {
  const auto& m = cfg["model"];
  const auto kind = lav::parse_model_kind(m["kind"]);
  const auto fc = fractal_config(cfg);
  switch (kind) {
    case lav::ModelKind::VariableExponent:
      return lav::variable_exponent_model<D>(fc, m["p_minus"], m["p_plus"], m["continuous"], m["kappa"]);
    case lav::ModelKind::DoublePhase: return lav::double_phase_model<D>(m["p"], m["q"], m["alpha"]);
    case lav::ModelKind::Weighted:
      if (m["eps"].is_null())
        return lav::constructed_weighted_model<D>(fc, m["p"], m["alpha"], m["beta"], modular_policy<D>(cfg, fc));
      return lav::weighted_model<D>(fc, m["p"], m["alpha"], m["beta"], m["eps"]);
  }
  throw ConfigError("unknown model kind");
}

json record_json(const lav::CheckRecord& r) {
  return {{"claim", r.claim}, {"anchor", r.anchor}, {"measured", r.measured}, {"tolerance", r.tolerance},
          {"pass", r.pass}};
}

template <int D>
json model_summary(const lav::OrliczModel<D>& m) {
  json j{{"kind", lav::to_string(m.kind)},
         {"regime", lav::to_string(m.cfg.regime)},
         {"p0", m.cfg.p0},
         {"coupling_p0", m.coupling_p0}};
  if (m.kind == lav::ModelKind::Weighted) {
    j["eps"] = m.eps;
    j["gamma"] = m.gamma;
  }
  return j;
}

fs::path output_dir(const json& cfg) {
  fs::path p = cfg["output_dir"].get<std::string>();
  fs::create_directories(p);
  return p;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  f << j.dump(2) << '\n';
}

json report(const std::string& command, const json& cfg) { return {{"schema", 1}, {"command", command}, {"config", cfg}}; }

int finish(json rep, const std::vector<lav::CheckRecord>& records, const fs::path& path) {
  bool pass = true;
  json arr = json::array();
  for (const auto& r : records) {
    arr.push_back(record_json(r));
    pass = pass && r.pass;
  }
  rep["records"] = arr;
  rep["pass"] = pass;
  write_json(path, rep);
  for (const auto& r : records)
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.claim << ": " << r.measured << " (tolerance " << r.tolerance
              << ")\n";
  if (!pass)
    for (const auto& r : records)
      if (!r.pass) std::cerr << "failed: " << r.claim << " measured " << r.measured << '\n';
  return pass ? 0 : 1;
}

template <int D>
int cmd_sample_field(const json& cfg) {
  const auto fc = fractal_config(cfg);
  const int g = cfg["sample"]["grid"].get<int>();
  if (g < 2) throw ConfigError("sample grid needs at least 2 nodes per axis");
  const auto path = output_dir(cfg) / "fields.csv";
  std::ofstream f(path);
  for (int i = 0; i < D; ++i) f << 'x' << i + 1 << ',';
  f << 'u';
  for (int i = 0; i < D; ++i) f << ",du" << i + 1;
  for (int i = 0; i < D; ++i) f << ",b" << i + 1;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) f << ",A" << i + 1 << j + 1;
  f << '\n';
  f.precision(17);
  std::size_t total = 1;
  for (int i = 0; i < D; ++i) total *= static_cast<std::size_t>(g);
  for (std::size_t k = 0; k < total; ++k) {
    lav::Vec<D> x{};
    std::size_t t = k;
    for (int i = 0; i < D; ++i) {
      x[i] = -1.0 + 2.0 * static_cast<double>(t % g) / (g - 1);
      t /= g;
    }
    const auto s = lav::fractal_fields<D>(x, fc);
    for (int i = 0; i < D; ++i) f << x[i] << ',';
    f << s.u;
    for (int i = 0; i < D; ++i) f << ',' << s.grad_u[i];
    for (int i = 0; i < D; ++i) f << ',' << s.b[i];
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) f << ',' << s.A[i][j];
    f << '\n';
  }
  std::cout << "wrote " << total << " rows to " << path.string() << '\n';
  return 0;
}

template <int D>
int cmd_verify(const json& cfg) {
  const auto fc = fractal_config(cfg);
  const auto records = lav::field_checks<D>(fc, cfg["seed"].get<std::uint64_t>());
  return finish(report("verify", cfg), records, output_dir(cfg) / "verify.json");
}

template <int D>
int cmd_gap(const json& cfg) {
  const auto m = build_model<D>(cfg);
  const auto grid = lav::dyadic_grid(cfg["gap"]["k_min"], cfg["gap"]["k_max"]);
  const auto g = lav::gap_scan<D>(m, grid, modular_policy<D>(cfg, m.cfg));
  const auto dir = output_dir(cfg);
  {
    std::ofstream f(dir / "gap.csv");
    f.precision(17);
    f << "t,F,G\n";
    for (std::size_t i = 0; i < g.t_grid.size(); ++i) f << g.t_grid[i] << ',' << g.F_values[i] << ',' << g.G_values[i] << '\n';
  }
  double gmin = std::numeric_limits<double>::infinity();
  for (double v : g.G_values) gmin = std::min(gmin, v);
  json rep = report("gap", cfg);
  rep["model"] = model_summary(m);
  rep["S_circ_u_circ"] = g.S_circ_u_circ;
  rep["t_star"] = g.t_star ? json(*g.t_star) : json(nullptr);
  rep["min_G"] = gmin;
  rep["min_ratio"] = g.min_ratio;
  std::vector<lav::CheckRecord> rec{
      lav::below("G(t u°) below threshold", "G(t u°) = F(t u°) + t S°(u°) < 0", gmin, lav::kGapThreshold),
      lav::below("F(t u°)/t at the smallest t", "lim_{t->0} F(t w)/t = 0", g.min_ratio, 0.1)};
  return finish(rep, rec, dir / "gap.json");
}

template <int D>
int cmd_certify(const json& cfg) {
  const auto m = build_model<D>(cfg);
  const auto c = lav::duality_certificate<D>(m, modular_policy<D>(cfg, m.cfg));
  json rep = report("certify", cfg);
  rep["model"] = model_summary(m);
  rep["certificate"] = {{"t", c.best.t},          {"s", c.best.s},           {"F_tu", c.best.F_tu},
                        {"Fstar_sb", c.best.Fstar_sb}, {"margin", c.best.margin}, {"relative_margin", c.best.relative_margin()}};
  lav::CheckRecord r{"duality certificate margin", "F(tu) + F*(sb) < ts", c.best.relative_margin(), lav::kCertificateMargin,
                     c.found && c.best.relative_margin() >= lav::kCertificateMargin};
  return finish(rep, {r}, output_dir(cfg) / "certify.json");
}

template <int D>
int cmd_minimize(const json& cfg) {
  const auto m = build_model<D>(cfg);
  const auto& s = cfg["solver"];
  lav::SolverPolicy sp;
  sp.max_iter = s["max_iter"];
  sp.rel_tol = s["rel_tol"];
  sp.window = s["window"];
  double t = 1.0, bound = std::numeric_limits<double>::quiet_NaN();
  std::optional<lav::Certificate> cert;
  if (s["t"].is_null()) {
    const auto c = lav::duality_certificate<D>(m, modular_policy<D>(cfg, m.cfg));
    cert = lav::smallest_certified(c);
    if (cert) {
      t = cert->t;
      bound = cert->t * cert->s - cert->Fstar_sb;
    }
  } else {
    t = s["t"];
  }
  const auto start = lav::boundary_problem<D>(m.cfg, t, s["n"].get<int>());
  const double F_interp = lav::discrete_energy<D>(m, start);
  const auto r = lav::minimize_w<D>(m, start, sp);
  const auto dir = output_dir(cfg);
  {
    std::ofstream f(dir / "minimizer.csv");
    lav::write_csv<D>(f, r.w);
  }
  {
    std::ofstream f(dir / "energy_log.csv");
    f.precision(17);
    f << "iteration,energy\n";
    for (std::size_t i = 0; i < r.energy_log.size(); ++i) f << i << ',' << r.energy_log[i] << '\n';
  }
  json rep = report("minimize", cfg);
  rep["model"] = model_summary(m);
  rep["t"] = t;
  rep["energy"] = r.energy;
  rep["energy_interpolant"] = F_interp;
  rep["iterations"] = r.iterations;
  rep["converged"] = r.converged;
  rep["partial"] = r.partial;
  rep["grad_norm"] = r.grad_norm;
  std::vector<lav::CheckRecord> rec{
      lav::below("F(w_h) - F(t u interpolant)", "F(w_t) <= F(tu)", r.energy - F_interp, 1e-8)};
  if (cert) {
    rep["certificate_bound"] = bound;
    rec.push_back(lav::below("F(w_h) - (ts - F*(sb))", "F(h_W) < F(h_H)", r.energy - bound, 0.0));
  }
  return finish(rep, rec, dir / "minimize.json");
}

template <int D>
int cmd_norms(const json& cfg) {
  const auto fc = fractal_config(cfg);
  const auto m = build_model<D>(cfg);
  const auto& lv = cfg["norms"]["levels"];
  const auto levels = lv.is_null() ? lav::integrability_ladder<D>(fc) : lv.get<std::vector<int>>();
  const auto rows = lav::integrability_levels<D>(fc, levels);
  json rep = report("norms", cfg);
  rep["model"] = model_summary(m);
  json arr = json::array();
  for (const auto& r : rows) {
    const auto nodes = lav::uniform_nodes<D>(1 << r.level);
    std::vector<double> g(nodes.size());
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] = lav::norm<D>(lav::fractal_fields<D>(nodes.x[i], fc, lav::kFieldU).grad_u);
    const auto lux = lav::luxemburg_norm<D>(m, nodes, g);
    arr.push_back({{"level", r.level},
                   {"weak_grad_u", r.weak_grad_u},
                   {"modular_grad_u", r.modular_grad_u},
                   {"weak_b", r.weak_b},
                   {"modular_b", r.modular_b},
                   {"luxemburg_grad_u", lux.divergent ? json(nullptr) : json(lux.value)}});
  }
  rep["levels"] = arr;
  auto records = lav::integrability_checks(rows);
  if (m.kind == lav::ModelKind::Weighted && D == 2) {
    const auto mk = lav::muckenhoupt_ladder<D>(m);
    rep["muckenhoupt"] = {{"levels", mk.levels}, {"minus", mk.minus}, {"plus", mk.plus}, {"witness", mk.witness}};
    for (auto& r : lav::muckenhoupt_checks(mk)) records.push_back(r);
  }
  return finish(rep, records, output_dir(cfg) / "norms.json");
}

template <int D>
int dispatch(const std::string& command, const json& cfg) {
  if (command == "sample-field") return cmd_sample_field<D>(cfg);
  if (command == "verify") return cmd_verify<D>(cfg);
  if (command == "gap") return cmd_gap<D>(cfg);
  if (command == "certify") return cmd_certify<D>(cfg);
  if (command == "minimize") return cmd_minimize<D>(cfg);
  if (command == "norms") return cmd_norms<D>(cfg);
  throw ConfigError("unknown command " + command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractal Lavrentiev-gap constructions: fields, checks, gap scan, certificates, minimizer"};
  app.require_subcommand(1);
  Overrides o;
  std::string write_config;
  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config_path, "JSON config file");
    sub->add_option("--regime", o.regime, "matching | sub | super");
    sub->add_option("--dim", o.dim, "ambient dimension (2 or 3)");
    sub->add_option("--p0", o.p0, "target exponent");
    sub->add_option("--model", o.model, "variable_exponent | double_phase | weighted");
    sub->add_option("--seed", o.seed, "seed for random sample points");
    sub->add_option("-o,--out", o.out, "output directory");
    sub->add_option("--write-config", write_config, "write the resolved config to this file");
  };
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const char* name : {"sample-field", "verify", "gap", "certify", "minimize", "norms"}) {
    auto* sub = app.add_subcommand(name);
    common(sub);
    subs.emplace_back(name, sub);
  }
  app.get_subcommand("sample-field")->add_option("--grid", o.grid, "nodes per axis");
  app.get_subcommand("gap")->add_option("--k-min", o.k_min, "smallest t = 2^k");
  app.get_subcommand("gap")->add_option("--k-max", o.k_max, "largest t = 2^k");
  auto* mz = app.get_subcommand("minimize");
  mz->add_option("--n", o.n, "grid nodes per axis");
  mz->add_option("--t", o.t, "boundary data scale (default: certified t)");
  mz->add_option("--max-iter", o.max_iter, "iteration cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  std::string command;
  for (auto& [name, sub] : subs)
    if (sub->parsed()) command = name;

  json cfg;
  try {
    json file = json::object();
    if (!o.config_path.empty()) {
      std::ifstream f(o.config_path);
      if (!f) throw ConfigError("cannot open config " + o.config_path);
      file = json::parse(f);
    }
    cfg = resolve(file, o);
    fractal_config(cfg);
    if (!write_config.empty()) write_json(write_config, cfg);
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const lav::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    return cfg["d"].get<int>() == 2 ? dispatch<2>(command, cfg) : dispatch<3>(command, cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const lav::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
