#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "eiklab/eikonal.hpp"
#include "eiklab/eikonal_field.hpp"
#include "eiklab/helmholtz.hpp"
#include "eiklab/io.hpp"
#include "eiklab/verification.hpp"

namespace eiklab {

/// Configuration problems (bad keys, invalid values, broken preconditions,
/// unusable output locations) carry this type so the CLI can map them to its
/// dedicated exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SourceSpec {
  std::string kind = "gaussian";  // gaussian | shell
  double amplitude = 1.0;
  double width = 0.5;
  double radius = 0.0;  // shell center radius
};

struct SolverConfig {
  double tol = 1e-8;
  int max_iter = 0;  // 0 = solver default
  int ppw = 10;      // minimum points per wavelength
};

struct IdentityParams {
  double plateau = 1.5;
  double cutoff = 3.0;
  double r1 = 2.0;
  double smooth = 0.5;
  double window_lo = 2.8;
  double window_hi = 3.6;
};

struct DecayParams {
  double r_min = 4.0;
  double r_max = 32.0;
  bool raw_gauge = false;  // default: far-field gauge with the phase shift removed
};

struct Tolerances {
  double decay_margin = 0.3;     // fitted exponent may undershoot its target by this
  double identity_scale = 10.0;  // residual bound = scale * (h^2 + solver tol)
  double theorem_cap = 4.0;      // sup of the radiation ratio must stay below this
  double apriori_cap = 4.0;      // max energy ratio must stay below this
  double eps_stability = 0.2;    // relative sup change when absorption halves
  double lambda_scaling = 0.3;   // tolerance on the 1/lambda constant scaling
};

struct ExperimentConfig {
  std::string name = "experiment";
  PotentialSpec potential;
  std::vector<double> lambdas;
  std::vector<double> epsilons;
  std::vector<double> radii;
  double half_extent = 0.0;
  int cells = 0;
  SourceSpec source;
  std::vector<std::string> checks;
  std::string output;
  int workers = 0;  // 0 = hardware concurrency
  SolverConfig solver;
  IdentityParams identity;
  DecayParams decay;
  Tolerances tol;
  double trust_fraction = 0.75;  // 0 disables the trusted-radius clip
  double k_cap = 0.0;            // 0 disables the outer shell cap
  bool shell_weighted = false;
  bool dump_fields = false;

  Grid3 grid() const { return Grid3::cube(half_extent, cells); }
};

struct CheckResult {
  std::string id;
  bool pass = false;
  OrderedJson payload;
};

struct ReportBundle {
  OrderedJson summary;
  std::vector<CheckResult> checks;
  std::string out_dir;
  bool all_pass = true;
  // Direct-access mirrors so callers can compare orchestrated results against
  // standalone module invocations without JSON round-trips.
  std::vector<RatioReport> theorem_curves;
  std::vector<AprioriReport> apriori_reports;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& v) {
  const double x = parse_double(key, v);
  const int i = int(std::lround(x));
  if (std::abs(x - i) > 1e-9)
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
  return i;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& tok : split_list(v)) out.push_back(parse_double(key, tok));
  return out;
}

inline std::string format_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  std::size_t w = workers > 0 ? std::size_t(workers) : std::size_t(std::max(1u, std::thread::hardware_concurrency()));
  w = std::min(w, count);
  if (w <= 1) {
    for (std::size_t id = 0; id < count; ++id) fn(id);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (std::size_t id = next.fetch_add(1); id < count; id = next.fetch_add(1)) fn(id);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Canonical execution order, with `all` expanded and duplicates dropped.
inline std::vector<std::string> effective_checks(const ExperimentConfig& cfg) {
  const std::vector<std::string> canon = {"decay", "identities", "theorem", "apriori"};
  bool want[4] = {false, false, false, false};
  for (const auto& c : cfg.checks) {
    if (c == "all") {
      for (bool& b : want) b = true;
      continue;
    }
    const auto it = std::find(canon.begin(), canon.end(), c);
    if (it == canon.end()) throw ConfigError("config: unknown check '" + c + "'");
    want[it - canon.begin()] = true;
  }
  std::vector<std::string> out;
  for (std::size_t q = 0; q < canon.size(); ++q)
    if (want[q]) out.push_back(canon[q]);
  return out;
}

inline ComplexField make_source(const SourceSpec& spec, const Grid3& grid) {
  ComplexField f(grid);
  for (int k = 0; k < grid.n; ++k)
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i) {
        const double r = grid.radius(i, j, k);
        double v = 0.0;
        if (spec.kind == "gaussian") {
          const double t = r / spec.width;
          v = spec.amplitude * std::exp(-t * t);
        } else {  // shell
          const double t = (r - spec.radius) / spec.width;
          v = spec.amplitude * std::exp(-t * t);
        }
        f.at(i, j, k) = v;
      }
  return f;
}

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  bool saw_cells = false, saw_spacing = false;
  double spacing = 0.0;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));

    if (key == "name") cfg.name = val;
    else if (key == "potential.family") cfg.potential.family = val;
    else if (key == "potential.mu") cfg.potential.mu = detail::parse_double(key, val);
    else if (key == "potential.nu") cfg.potential.nu = detail::parse_double(key, val);
    else if (key == "potential.delta") cfg.potential.delta = detail::parse_double(key, val);
    else if (key == "potential.bound_constant")
      cfg.potential.bound_constant = detail::parse_double(key, val);
    else if (key == "lambda") cfg.lambdas = detail::parse_list(key, val);
    else if (key == "epsilon") cfg.epsilons = detail::parse_list(key, val);
    else if (key == "radii") cfg.radii = detail::parse_list(key, val);
    else if (key == "grid.half_extent") cfg.half_extent = detail::parse_double(key, val);
    else if (key == "grid.cells") { cfg.cells = detail::parse_int(key, val); saw_cells = true; }
    else if (key == "grid.spacing") { spacing = detail::parse_double(key, val); saw_spacing = true; }
    else if (key == "source.kind") cfg.source.kind = val;
    else if (key == "source.amplitude") cfg.source.amplitude = detail::parse_double(key, val);
    else if (key == "source.width") cfg.source.width = detail::parse_double(key, val);
    else if (key == "source.radius") cfg.source.radius = detail::parse_double(key, val);
    else if (key == "checks") cfg.checks = detail::split_list(val);
    else if (key == "output") cfg.output = val;
    else if (key == "workers") cfg.workers = detail::parse_int(key, val);
    else if (key == "solver.tol") cfg.solver.tol = detail::parse_double(key, val);
    else if (key == "solver.max_iter") cfg.solver.max_iter = detail::parse_int(key, val);
    else if (key == "solver.ppw") cfg.solver.ppw = detail::parse_int(key, val);
    else if (key == "trust.fraction") cfg.trust_fraction = detail::parse_double(key, val);
    else if (key == "shell.k_cap") cfg.k_cap = detail::parse_double(key, val);
    else if (key == "shell.weighted") cfg.shell_weighted = detail::parse_bool(key, val);
    else if (key == "decay.r_min") cfg.decay.r_min = detail::parse_double(key, val);
    else if (key == "decay.r_max") cfg.decay.r_max = detail::parse_double(key, val);
    else if (key == "decay.gauge") {
      if (val == "raw") cfg.decay.raw_gauge = true;
      else if (val == "asymptotic") cfg.decay.raw_gauge = false;
      else throw ConfigError("config: decay.gauge must be raw or asymptotic");
    }
    else if (key == "identity.plateau") cfg.identity.plateau = detail::parse_double(key, val);
    else if (key == "identity.cutoff") cfg.identity.cutoff = detail::parse_double(key, val);
    else if (key == "identity.r1") cfg.identity.r1 = detail::parse_double(key, val);
    else if (key == "identity.smooth") cfg.identity.smooth = detail::parse_double(key, val);
    else if (key == "identity.window_lo") cfg.identity.window_lo = detail::parse_double(key, val);
    else if (key == "identity.window_hi") cfg.identity.window_hi = detail::parse_double(key, val);
    else if (key == "tol.decay_margin") cfg.tol.decay_margin = detail::parse_double(key, val);
    else if (key == "tol.identity_scale") cfg.tol.identity_scale = detail::parse_double(key, val);
    else if (key == "tol.theorem_cap") cfg.tol.theorem_cap = detail::parse_double(key, val);
    else if (key == "tol.apriori_cap") cfg.tol.apriori_cap = detail::parse_double(key, val);
    else if (key == "tol.eps_stability") cfg.tol.eps_stability = detail::parse_double(key, val);
    else if (key == "tol.lambda_scaling") cfg.tol.lambda_scaling = detail::parse_double(key, val);
    else if (key == "dump.fields") cfg.dump_fields = detail::parse_bool(key, val);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  if (saw_cells && saw_spacing)
    throw ConfigError("config: give either grid.cells or grid.spacing, not both");
  if (saw_spacing) {
    if (!(spacing > 0.0) || !(cfg.half_extent > 0.0))
      throw ConfigError("config: grid.spacing needs a positive grid.half_extent first");
    const double cells = 2.0 * cfg.half_extent / spacing;
    cfg.cells = int(std::lround(cells));
    if (std::abs(cells - cfg.cells) > 1e-6 || cfg.cells % 2 != 0)
      throw ConfigError("config: grid.spacing must divide the box into an even cell count");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

inline void validate_config(const ExperimentConfig& cfg) {
  const auto checks = effective_checks(cfg);  // throws on unknown ids
  try {
    make_potential(cfg.potential);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!(cfg.half_extent > 0.0)) throw ConfigError("config: grid.half_extent must be positive");
  if (cfg.cells < 2 || cfg.cells % 2 != 0)
    throw ConfigError("config: grid.cells must be even and >= 2");
  if (cfg.workers < 0) throw ConfigError("config: workers must be >= 0");
  if (!(cfg.trust_fraction >= 0.0 && cfg.trust_fraction <= 1.0))
    throw ConfigError("config: trust.fraction must lie in [0, 1]");
  if (cfg.k_cap < 0.0) throw ConfigError("config: shell.k_cap must be >= 0");
  if (cfg.source.kind != "gaussian" && cfg.source.kind != "shell")
    throw ConfigError("config: unknown source.kind '" + cfg.source.kind + "'");
  if (!(cfg.source.width > 0.0)) throw ConfigError("config: source.width must be positive");
  if (cfg.source.kind == "shell" && !(cfg.source.radius > 0.0))
    throw ConfigError("config: source.radius must be positive for a shell source");
  if (!(cfg.solver.tol > 0.0)) throw ConfigError("config: solver.tol must be positive");
  if (cfg.solver.max_iter < 0) throw ConfigError("config: solver.max_iter must be >= 0");
  if (cfg.solver.ppw < 2) throw ConfigError("config: solver.ppw must be >= 2");
  for (double l : cfg.lambdas)
    if (!(l > 0.0)) throw ConfigError("config: lambda values must be positive");
  for (double e : cfg.epsilons)
    if (!(e > 0.0)) throw ConfigError("config: epsilon values must be positive");

  const bool solves = std::any_of(checks.begin(), checks.end(), [](const std::string& c) {
    return c == "identities" || c == "theorem" || c == "apriori";
  });
  const bool decays = std::find(checks.begin(), checks.end(), "decay") != checks.end();

  if (solves) {
    if (cfg.lambdas.empty()) throw ConfigError("config: solve checks need a lambda list");
    if (cfg.epsilons.empty()) throw ConfigError("config: solve checks need an epsilon list");
    const double h = 2.0 * cfg.half_extent / cfg.cells;
    for (double l : cfg.lambdas) {
      const double need = 2.0 * M_PI / std::sqrt(l) / cfg.solver.ppw;
      if (h > need + 1e-12)
        throw ConfigError("config: lambda=" + detail::format_num(l) +
                          " violates the minimum points per wavelength (needs spacing <= " +
                          detail::format_num(need) + ", grid has " + detail::format_num(h) + ")");
    }
  }
  if (std::find(checks.begin(), checks.end(), "theorem") != checks.end()) {
    if (cfg.radii.empty()) throw ConfigError("config: the theorem check needs a radii list");
    for (double r : cfg.radii)
      if (!(r >= 1.0)) throw ConfigError("config: theorem radii must be >= 1");
  }
  if (std::find(checks.begin(), checks.end(), "identities") != checks.end()) {
    try {
      Multiplier::bump(cfg.identity.plateau, cfg.identity.cutoff);
      Multiplier::k_radial(cfg.identity.r1, cfg.identity.smooth)
          .windowed(cfg.identity.window_lo, cfg.identity.window_hi);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (decays) {
    if (cfg.lambdas.empty()) throw ConfigError("config: the decay check needs a lambda list");
    const auto& fam = cfg.potential.family;
    if (fam != "long_range" && fam != "long_short" && fam != "tabulated")
      throw ConfigError("config: the decay check needs a family with a nonconstant long-range part");
    if (!(cfg.decay.r_min > 0.0) || !(cfg.decay.r_max > cfg.decay.r_min))
      throw ConfigError("config: decay radii must satisfy 0 < r_min < r_max");
    if (cfg.decay.r_min * 8.0 > cfg.decay.r_max * (1.0 + 1e-9))
      throw ConfigError("config: decay window must span at least three doublings");
    if (cfg.decay.r_max > cfg.half_extent)
      throw ConfigError("config: decay.r_max exceeds the grid half extent");
  }
}

namespace detail {

struct SolveOutcome {
  double lambda = 0.0, epsilon = 0.0;
  SolveStats stats;
  bool ok = false;
  std::string error;
  ConstantMultiplierReport constant;
  KeyIdentityReport key;
  RatioReport ratio;
  AprioriReport apriori;
};

struct DecayQuantity {
  std::string name;
  double target = 0.0;
  DecayFit fit;
  std::vector<double> radii, sups;
};

struct DecayOutcome {
  double lambda = 0.0;
  bool ok = false;
  std::string error;
  std::vector<DecayQuantity> quantities;
};

inline OrderedJson decay_check(const ExperimentConfig& cfg, const Potential& pot, bool& pass) {
  std::vector<std::pair<double, double>> annuli;
  for (double lo = cfg.decay.r_min; lo * 2.0 <= cfg.decay.r_max * (1.0 + 1e-9); lo *= 2.0)
    annuli.emplace_back(lo, lo * 2.0);
  const double delta = cfg.potential.delta;

  std::vector<DecayOutcome> outs(cfg.lambdas.size());
  parallel_for(cfg.lambdas.size(), cfg.workers, [&](std::size_t il) {
    DecayOutcome& out = outs[il];
    out.lambda = cfg.lambdas[il];
    try {
      const Grid3 grid = cfg.grid();
      auto prof = std::make_shared<RadialProfile>(pot, out.lambda, 2.0 * grid.half_extent());
      FieldBuildOptions opts;
      opts.gauge = cfg.decay.raw_gauge ? Gauge::raw : Gauge::asymptotic;
      opts.with_ladder = true;
      const EikonalField field = build_eikonal_field(prof, grid, opts);

      RealField radial_dg(grid);
      for (int k = 0; k < grid.n; ++k)
        for (int j = 0; j < grid.n; ++j)
          for (int i = 0; i < grid.n; ++i) {
            const double r = grid.radius(i, j, k);
            if (r == 0.0) continue;
            const auto x = grid.point(i, j, k);
            radial_dg.at(i, j, k) = (x[0] * field.dg[0].at(i, j, k) +
                                     x[1] * field.dg[1].at(i, j, k) +
                                     x[2] * field.dg[2].at(i, j, k)) / r;
          }

      auto measure = [&](const std::string& name, double target, auto&& sup_of) {
        DecayQuantity q;
        q.name = name;
        q.target = target;
        for (const auto& [lo, hi] : annuli) {
          q.radii.push_back(std::sqrt(lo * hi));
          q.sups.push_back(sup_of(lo, hi));
        }
        q.fit = fit_decay(q.radii, q.sups, target, cfg.tol.decay_margin);
        out.quantities.push_back(std::move(q));
      };
      measure("d_r_g", 3.0 + delta,
              [&](double lo, double hi) { return annulus_sup(field, radial_dg, lo, hi); });
      measure("grad_g", 3.0 + delta,
              [&](double lo, double hi) { return annulus_sup(field, field.dg, lo, hi); });
      measure("hessian_g", 4.0 + delta,
              [&](double lo, double hi) { return annulus_sup(field, field.d2g, lo, hi); });
      measure("correction_tensor", 2.0 + delta,
              [&](double lo, double hi) { return annulus_sup(field, field.F, lo, hi); });
      measure("grad_trace_correction", 3.0 + delta,
              [&](double lo, double hi) { return annulus_sup(field, field.grad_traceF, lo, hi); });
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  pass = true;
  OrderedJson check;
  check["id"] = "decay";
  check["gauge"] = cfg.decay.raw_gauge ? "raw" : "asymptotic";
  check["margin"] = cfg.tol.decay_margin;
  OrderedJson ja = OrderedJson::array();
  for (const auto& [lo, hi] : annuli) ja.push_back({lo, hi});
  check["annuli"] = ja;
  OrderedJson runs = OrderedJson::array();
  for (const auto& out : outs) {
    OrderedJson run;
    run["lambda"] = out.lambda;
    if (!out.ok) {
      run["error"] = out.error;
      pass = false;
      runs.push_back(run);
      continue;
    }
    OrderedJson qs = OrderedJson::array();
    for (const auto& q : out.quantities) {
      OrderedJson jq;
      jq["name"] = q.name;
      jq["target"] = q.target;
      jq["exponent"] = q.fit.exponent;
      jq["constant"] = q.fit.constant;
      jq["rms_log_residual"] = q.fit.rms_log_residual;
      jq["satisfied"] = q.fit.satisfied;
      jq["radii"] = q.radii;
      jq["sups"] = q.sups;
      qs.push_back(jq);
      pass = pass && q.fit.satisfied;
    }
    run["quantities"] = qs;
    runs.push_back(run);
  }
  check["runs"] = runs;

  // The extrapolated r = 1 constant of the radial slope scales like 1/lambda.
  OrderedJson scaling = OrderedJson::array();
  for (std::size_t a = 0; a < outs.size(); ++a)
    for (std::size_t b = a + 1; b < outs.size(); ++b) {
      if (!outs[a].ok || !outs[b].ok) continue;
      const double ca = outs[a].quantities[0].fit.constant;
      const double cb = outs[b].quantities[0].fit.constant;
      if (!(cb > 0.0)) continue;
      OrderedJson s;
      s["lambda_low"] = outs[a].lambda;
      s["lambda_high"] = outs[b].lambda;
      const double expected = outs[b].lambda / outs[a].lambda;
      const double measured = ca / cb;
      s["expected"] = expected;
      s["measured"] = measured;
      const bool ok = std::abs(measured / expected - 1.0) <= cfg.tol.lambda_scaling;
      s["satisfied"] = ok;
      pass = pass && ok;
      scaling.push_back(s);
    }
  check["scaling"] = scaling;
  check["status"] = pass ? "pass" : "fail";
  return check;
}

}  // namespace detail

inline ReportBundle run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto checks = effective_checks(cfg);
  const Grid3 grid = cfg.grid();
  const Potential pot = make_potential(cfg.potential);

  ReportBundle bundle;
  bundle.out_dir = cfg.output;
  const std::filesystem::path out_dir = cfg.output;
  if (!cfg.output.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const auto probe = out_dir / ".write_probe";
    std::ofstream probe_out(probe);
    if (ec || !probe_out)
      throw ConfigError("harness: output directory " + cfg.output + " is not writable");
    probe_out.close();
    std::filesystem::remove(probe, ec);
  }

  const bool want_identity = std::find(checks.begin(), checks.end(), "identities") != checks.end();
  const bool want_theorem = std::find(checks.begin(), checks.end(), "theorem") != checks.end();
  const bool want_apriori = std::find(checks.begin(), checks.end(), "apriori") != checks.end();

  // Shared immutable geometry, one build per lambda, before the job pool.
  std::vector<std::shared_ptr<const EikonalField>> fields(cfg.lambdas.size());
  if (want_identity || want_theorem) {
    for (std::size_t il = 0; il < cfg.lambdas.size(); ++il) {
      auto prof = std::make_shared<RadialProfile>(pot, cfg.lambdas[il], 2.0 * grid.half_extent());
      fields[il] =
          std::make_shared<const EikonalField>(build_eikonal_field(prof, grid, {}));
    }
  }

  std::vector<detail::SolveOutcome> outcomes;
  if (want_identity || want_theorem || want_apriori) {
    outcomes.resize(cfg.lambdas.size() * cfg.epsilons.size());
    detail::parallel_for(outcomes.size(), cfg.workers, [&](std::size_t jid) {
      auto& out = outcomes[jid];
      const std::size_t il = jid / cfg.epsilons.size();
      const std::size_t ie = jid % cfg.epsilons.size();
      out.lambda = cfg.lambdas[il];
      out.epsilon = cfg.epsilons[ie];
      try {
        const ComplexField f = make_source(cfg.source, grid);
        SolveOptions sopt;
        sopt.tol = cfg.solver.tol;
        sopt.max_iter = cfg.solver.max_iter;
        sopt.min_points_per_wavelength = cfg.solver.ppw;
        const auto sol = solve_helmholtz(pot, out.lambda, out.epsilon, f, sopt);
        out.stats = sol.stats;
        if (!sol.stats.converged)
          throw std::runtime_error("solver did not converge in " +
                                   std::to_string(sol.stats.iterations) + " iterations");
        if (want_identity) {
          const auto phi = Multiplier::bump(cfg.identity.plateau, cfg.identity.cutoff);
          const auto psi = Multiplier::k_radial(cfg.identity.r1, cfg.identity.smooth)
                               .windowed(cfg.identity.window_lo, cfg.identity.window_hi);
          out.constant = constant_multiplier_residuals(sol.u, f, phi, pot, out.lambda, out.epsilon, *fields[il]);
          out.key = key_identity_residual(sol.u, f, psi, *fields[il], pot, out.lambda, out.epsilon);
        }
        if (want_theorem) {
          RadiationOptions ropt;
          ropt.slowness_weight = cfg.shell_weighted;
          if (cfg.k_cap > 0.0) ropt.k_cap = cfg.k_cap;
          if (cfg.trust_fraction > 0.0) ropt.trust_radius = cfg.trust_fraction * cfg.half_extent;
          out.ratio = theorem_ratio(sol.u, f, *fields[il], out.lambda, cfg.radii, ropt);
          out.ratio.epsilon = out.epsilon;
          out.ratio.potential_id = cfg.potential.family;
        }
        if (want_apriori) out.apriori = apriori_ratio(sol.u, f, out.lambda, out.epsilon);
        if (cfg.dump_fields && !cfg.output.empty())
          io::dump_complex_field(out_dir,
                                 "u_lambda" + detail::format_num(out.lambda) + "_eps" +
                                     detail::format_num(out.epsilon),
                                 sol.u);
        out.ok = true;
      } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
      }
    });
  }

  // Merge, single-threaded, in canonical check order and job index order.
  for (const auto& id : checks) {
    CheckResult res;
    res.id = id;
    if (id == "decay") {
      res.payload = detail::decay_check(cfg, pot, res.pass);
    } else if (id == "identities") {
      const double h = grid.h;
      const double bound = cfg.tol.identity_scale * (h * h + cfg.solver.tol);
      res.pass = true;
      OrderedJson check;
      check["id"] = "identities";
      check["bound"] = bound;
      OrderedJson jobs = OrderedJson::array();
      for (const auto& out : outcomes) {
        OrderedJson j;
        j["lambda"] = out.lambda;
        j["epsilon"] = out.epsilon;
        j["iterations"] = out.stats.iterations;
        j["converged"] = out.stats.converged;
        if (!out.ok) {
          j["error"] = out.error;
          res.pass = false;
        } else {
          j["constant_real"] = out.constant.real_residual;
          j["constant_imag"] = out.constant.imag_residual;
          j["key_residual"] = out.key.residual;
          j["interface_nodes"] = out.key.interface_nodes;
          const bool ok = out.constant.real_residual <= bound &&
                          out.constant.imag_residual <= bound && out.key.residual <= bound;
          j["pass"] = ok;
          res.pass = res.pass && ok;
        }
        jobs.push_back(j);
      }
      check["jobs"] = jobs;
      check["status"] = res.pass ? "pass" : "fail";
      res.payload = check;
    } else if (id == "theorem") {
      res.pass = true;
      OrderedJson check;
      check["id"] = "theorem";
      check["cap"] = cfg.tol.theorem_cap;
      double overall = 0.0;
      OrderedJson jobs = OrderedJson::array();
      for (const auto& out : outcomes) {
        OrderedJson j;
        j["lambda"] = out.lambda;
        j["epsilon"] = out.epsilon;
        j["iterations"] = out.stats.iterations;
        j["converged"] = out.stats.converged;
        if (!out.ok) {
          j["error"] = out.error;
          res.pass = false;
        } else {
          j["rhs"] = out.ratio.rhs;
          j["sup_ratio"] = out.ratio.sup_ratio;
          j["min_slowness_sq"] = out.ratio.min_slowness_sq;
          j["n_norm_power_of_two"] = out.ratio.n_norm_power_of_two;
          OrderedJson curve;
          curve["R"] = out.ratio.radii;
          curve["lhs"] = out.ratio.lhs;
          curve["ratio"] = out.ratio.ratio;
          j["curve"] = curve;
          overall = std::max(overall, out.ratio.sup_ratio);
          bundle.theorem_curves.push_back(out.ratio);
        }
        jobs.push_back(j);
      }
      check["jobs"] = jobs;
      check["sup_ratio"] = overall;
      res.pass = res.pass && overall <= cfg.tol.theorem_cap;

      // Halving the absorption must leave the sup nearly fixed.
      OrderedJson stab = OrderedJson::array();
      for (std::size_t il = 0; il < cfg.lambdas.size(); ++il)
        for (std::size_t ie = 0; ie < cfg.epsilons.size(); ++ie)
          for (std::size_t ih = 0; ih < cfg.epsilons.size(); ++ih) {
            if (std::abs(cfg.epsilons[ih] - 0.5 * cfg.epsilons[ie]) > 1e-12) continue;
            const auto& full = outcomes[il * cfg.epsilons.size() + ie];
            const auto& half = outcomes[il * cfg.epsilons.size() + ih];
            if (!full.ok || !half.ok) continue;
            OrderedJson s;
            s["lambda"] = full.lambda;
            s["epsilon"] = full.epsilon;
            s["epsilon_half"] = half.epsilon;
            const double base = full.ratio.sup_ratio;
            const double change =
                base > 0.0 ? std::abs(half.ratio.sup_ratio - base) / base
                           : (half.ratio.sup_ratio > 0.0 ? std::numeric_limits<double>::infinity()
                                                         : 0.0);
            s["relative_change"] = change;
            const bool ok = change <= cfg.tol.eps_stability;
            s["satisfied"] = ok;
            res.pass = res.pass && ok;
            stab.push_back(s);
          }
      check["stability"] = stab;
      check["status"] = res.pass ? "pass" : "fail";
      res.payload = check;
    } else if (id == "apriori") {
      res.pass = true;
      OrderedJson check;
      check["id"] = "apriori";
      check["cap"] = cfg.tol.apriori_cap;
      double max_ratio = 0.0;
      OrderedJson jobs = OrderedJson::array();
      for (const auto& out : outcomes) {
        OrderedJson j;
        j["lambda"] = out.lambda;
        j["epsilon"] = out.epsilon;
        j["iterations"] = out.stats.iterations;
        j["converged"] = out.stats.converged;
        if (!out.ok) {
          j["error"] = out.error;
          res.pass = false;
        } else {
          j["defined"] = out.apriori.defined;
          j["ratio"] = out.apriori.defined ? OrderedJson(out.apriori.ratio) : OrderedJson(nullptr);
          j["triple_u"] = out.apriori.triple_u;
          j["triple_grad"] = out.apriori.triple_grad;
          j["n1"] = out.apriori.n1;
          if (!out.apriori.defined) res.pass = false;
          else max_ratio = std::max(max_ratio, out.apriori.ratio);
          bundle.apriori_reports.push_back(out.apriori);
        }
        jobs.push_back(j);
      }
      check["jobs"] = jobs;
      check["max_ratio"] = max_ratio;
      res.pass = res.pass && max_ratio <= cfg.tol.apriori_cap;
      check["status"] = res.pass ? "pass" : "fail";
      res.payload = check;
    }
    bundle.all_pass = bundle.all_pass && res.pass;
    bundle.checks.push_back(std::move(res));
  }

  OrderedJson summary;
  summary["schema_version"] = 1;
  summary["name"] = cfg.name;
  OrderedJson jpot;
  jpot["family"] = cfg.potential.family;
  jpot["mu"] = cfg.potential.mu;
  jpot["nu"] = cfg.potential.nu;
  jpot["delta"] = cfg.potential.delta;
  summary["potential"] = jpot;
  OrderedJson jgrid;
  jgrid["half_extent"] = cfg.half_extent;
  jgrid["cells"] = cfg.cells;
  jgrid["spacing"] = grid.h;
  summary["grid"] = jgrid;
  summary["lambda"] = cfg.lambdas;
  summary["epsilon"] = cfg.epsilons;
  summary["radii"] = cfg.radii;
  OrderedJson jsrc;
  jsrc["kind"] = cfg.source.kind;
  jsrc["amplitude"] = cfg.source.amplitude;
  jsrc["width"] = cfg.source.width;
  jsrc["radius"] = cfg.source.radius;
  summary["source"] = jsrc;
  OrderedJson jsolver;
  jsolver["tol"] = cfg.solver.tol;
  jsolver["max_iter"] = cfg.solver.max_iter;
  jsolver["min_points_per_wavelength"] = cfg.solver.ppw;
  summary["solver"] = jsolver;
  summary["trust_fraction"] = cfg.trust_fraction;
  OrderedJson jchecks = OrderedJson::array();
  for (const auto& c : bundle.checks) jchecks.push_back(c.payload);
  summary["checks"] = jchecks;
  summary["status"] = bundle.all_pass ? "pass" : "fail";
  bundle.summary = std::move(summary);

  if (!cfg.output.empty()) io::write_json(out_dir / "summary.json", bundle.summary);
  return bundle;
}

/// Emits plot-data CSVs (and a gnuplot script referencing them) from a
/// summary.  `which` is one of all | ratio | decay | eps; `all` writes
/// whatever curves the summary holds and is content with none.
inline std::vector<std::string> emit_plots(const OrderedJson& summary,
                                           const std::filesystem::path& dir,
                                           const std::string& which = "all") {
  if (which != "all" && which != "ratio" && which != "decay" && which != "eps")
    throw ConfigError("plots: unknown curve id '" + which + "'");
  const OrderedJson* theorem = nullptr;
  const OrderedJson* decay = nullptr;
  for (const auto& c : summary.at("checks")) {
    const auto id = c.at("id").get<std::string>();
    if (id == "theorem") theorem = &c;
    if (id == "decay") decay = &c;
  }
  if (which == "ratio" && !theorem) throw ConfigError("plots: summary has no ratio curve");
  if (which == "eps" && !theorem) throw ConfigError("plots: summary has no epsilon curve");
  if (which == "decay" && !decay) throw ConfigError("plots: summary has no decay curve");

  std::vector<std::string> written;
  std::string script = "# gnuplot script for the eiklab plot data\nset datafile separator ','\n";

  if (theorem && (which == "all" || which == "ratio")) {
    bool first = true;
    for (const auto& j : theorem->at("jobs")) {
      if (!j.contains("curve")) continue;
      const auto& curve = j.at("curve");
      std::vector<std::vector<double>> rows;
      for (std::size_t q = 0; q < curve.at("R").size(); ++q)
        rows.push_back({curve.at("R")[q].get<double>(), curve.at("lhs")[q].get<double>(),
                        curve.at("ratio")[q].get<double>()});
      const std::string tag = "lambda" + detail::format_num(j.at("lambda").get<double>()) +
                              "_eps" + detail::format_num(j.at("epsilon").get<double>());
      const std::string name = "ratio_vs_R_" + tag + ".csv";
      io::write_csv(dir / name, "R,lhs,ratio", rows);
      written.push_back(name);
      if (first) {
        io::write_csv(dir / "ratio_vs_R.csv", "R,lhs,ratio", rows);
        written.push_back("ratio_vs_R.csv");
        first = false;
      }
    }
    if (first && which == "ratio") throw ConfigError("plots: summary has no ratio curve");
    script += "\nset output 'ratio_vs_R.png'\nset term pngcairo\nunset logscale\n"
              "set xlabel 'R'\nset ylabel 'ratio'\n"
              "plot 'ratio_vs_R.csv' skip 1 using 1:3 with linespoints title 'ratio'\n";
  }

  if (decay && (which == "all" || which == "decay")) {
    std::string text = "quantity,lambda,r,value\n";
    for (const auto& run : decay->at("runs")) {
      if (!run.contains("quantities")) continue;
      for (const auto& q : run.at("quantities")) {
        for (std::size_t t = 0; t < q.at("radii").size(); ++t)
          text += q.at("name").get<std::string>() + "," +
                  io::num(run.at("lambda").get<double>()) + "," +
                  io::num(q.at("radii")[t].get<double>()) + "," +
                  io::num(q.at("sups")[t].get<double>()) + "\n";
      }
    }
    io::write_text(dir / "decay_loglog.csv", text);
    written.push_back("decay_loglog.csv");
    script += "\nset output 'decay_loglog.png'\nset term pngcairo\nset logscale xy\n"
              "set xlabel 'r'\nset ylabel 'annulus sup'\n"
              "plot 'decay_loglog.csv' skip 1 using 3:4 with points title 'ladder quantities'\n";
  }

  if (theorem && (which == "all" || which == "eps")) {
    std::vector<std::vector<double>> rows;
    for (const auto& j : theorem->at("jobs")) {
      if (!j.contains("sup_ratio")) continue;
      rows.push_back({j.at("lambda").get<double>(), j.at("epsilon").get<double>(),
                      j.at("sup_ratio").get<double>()});
    }
    io::write_csv(dir / "eps_convergence.csv", "lambda,epsilon,sup_ratio", rows);
    written.push_back("eps_convergence.csv");
    script += "\nset output 'eps_convergence.png'\nset term pngcairo\nset logscale x\n"
              "set xlabel 'epsilon'\nset ylabel 'sup ratio'\n"
              "plot 'eps_convergence.csv' skip 1 using 2:3 with linespoints title 'sup vs eps'\n";
  }

  if (!written.empty()) {
    io::write_text(dir / "plots.gp", script);
    written.push_back("plots.gp");
  }
  return written;
}

inline std::vector<std::string> emit_plots(const ReportBundle& bundle,
                                           const std::string& which = "all") {
  if (bundle.out_dir.empty()) throw ConfigError("plots: the bundle has no output directory");
  return emit_plots(bundle.summary, bundle.out_dir, which);
}

}  // namespace eiklab
