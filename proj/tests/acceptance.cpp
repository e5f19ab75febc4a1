// Acceptance gate: one pass/fail line per criterion, exit 0 only if all pass.
//
// Every tolerance is pinned here.  Ratio brackets and error caps marked
// "measured" were frozen from runs of this binary on the reference setup and
// guard against regressions; they are not tunable knobs.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "eiklab/harness.hpp"

using namespace eiklab;

namespace {

struct CritResult {
  int id = 0;
  std::string label;
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

PotentialSpec long_range_spec() {
  PotentialSpec s;
  s.family = "long_range";
  s.mu = 0.1;
  s.delta = 0.5;
  return s;
}

std::shared_ptr<const RadialProfile> profile_of(const PotentialSpec& spec, double lambda,
                                                double r_max) {
  return std::make_shared<const RadialProfile>(make_potential(spec), lambda, r_max);
}

ComplexField gaussian_source(const Grid3& grid) {
  SourceSpec s;  // amplitude 1, width 0.5
  return make_source(s, grid);
}

double rel_l2_ball(const ComplexField& a, const ComplexField& b, double r_cap) {
  double num = 0.0, den = 0.0;
  const Grid3& grid = a.grid;
  for (int k = 0; k < grid.n; ++k)
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i) {
        if (grid.radius(i, j, k) > r_cap) continue;
        num += std::norm(a.at(i, j, k) - b.at(i, j, k));
        den += std::norm(b.at(i, j, k));
      }
  return std::sqrt(num / den);
}

ComplexField field_diff(const ComplexField& a, const ComplexField& b) {
  ComplexField d(a.grid);
  for (std::size_t id = 0; id < a.size(); ++id) d[id] = a[id] - b[id];
  return d;
}

ComplexField outgoing_far_field(const Grid3& grid, double root_lambda) {
  ComplexField u(grid);
  for (int k = 0; k < grid.n; ++k)
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i) {
        const double r = grid.radius(i, j, k);
        if (r > 1e-12) u.at(i, j, k) = std::polar(1.0 / r, root_lambda * r);
      }
  return u;
}

// Closed-form geometry of the zero potential (K = |x|, unit slowness, no
// correction tensor), assembled directly instead of through the radial
// quadrature.  Mirrors the clamped origin convention of the exact backend.
EikonalField analytic_spherical_field(const Grid3& grid, double lambda) {
  EikonalField f;
  f.grid = grid;
  f.gauge = Gauge::raw;
  f.lambda = lambda;
  f.exact_radial = true;
  f.r_core = 0.0;
  f.r_valid = 0.0;
  f.K = RealField(grid);
  f.g = RealField(grid, 1.0);
  f.gk2 = RealField(grid, 1.0);
  f.traceF = RealField(grid);
  for (auto& c : f.gradK) c = RealField(grid);
  for (auto& c : f.F) c = RealField(grid);
  for (int k = 0; k < grid.n; ++k)
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i) {
        const double r = grid.radius(i, j, k);
        f.K.at(i, j, k) = r;
        const auto x = grid.point(i, j, k);
        if (r > 0.0)
          for (int a = 0; a < 3; ++a) f.gradK[a].at(i, j, k) = x[a] / r;
        else
          f.gradK[0].at(i, j, k) = 1.0;
      }
  return f;
}

// ---- default-suite experiment configs, mirrored from configs/*.cfg ----

ExperimentConfig decay_experiment() {
  ExperimentConfig c;
  c.name = "decay";
  c.potential = long_range_spec();
  c.lambdas = {4.0, 16.0};
  c.half_extent = 34.4;
  c.cells = 96;
  c.decay.r_min = 4.0;
  c.decay.r_max = 32.0;
  c.checks = {"decay"};
  return c;
}

ExperimentConfig identities_experiment() {
  ExperimentConfig c;
  c.name = "identities";
  c.potential = long_range_spec();
  c.lambdas = {4.0};
  c.epsilons = {0.8};
  c.half_extent = 8.0;
  c.cells = 52;
  c.checks = {"identities"};
  return c;
}

ExperimentConfig theorem_experiment() {
  ExperimentConfig c;
  c.name = "theorem";
  c.potential = long_range_spec();
  c.lambdas = {4.0, 8.0, 16.0};
  c.epsilons = {0.1};
  c.radii = {1.0, 1.5, 2.0, 3.0, 4.0};
  c.half_extent = 7.0;
  c.cells = 90;
  c.tol.theorem_cap = 12.0;
  c.checks = {"theorem"};
  return c;
}

ExperimentConfig apriori_experiment() {
  ExperimentConfig c;
  c.name = "apriori";
  c.potential = long_range_spec();
  c.lambdas = {4.0, 16.0, 64.0};
  c.epsilons = {1.0};
  c.half_extent = 3.0;
  c.cells = 78;
  c.tol.apriori_cap = 1.0;
  c.checks = {"apriori"};
  return c;
}

ExperimentConfig eps_stability_experiment() {
  ExperimentConfig c;
  c.name = "eps_stability";
  c.potential = long_range_spec();
  c.lambdas = {4.0, 8.0, 16.0};
  c.epsilons = {0.1, 0.05};
  c.radii = {1.0, 1.5, 2.0, 3.0, 4.0};
  c.half_extent = 7.0;
  c.cells = 90;
  c.tol.theorem_cap = 30.0;
  c.tol.eps_stability = 0.2;
  c.checks = {"theorem"};
  return c;
}

// ---- criterion 1: eikonal solver correctness ----

CritResult criterion1() {
  CritResult r{1, "eikonal solver correctness", false, ""};

  // Zero potential: the radial quadrature must return K(r) = r to 1e-12.
  const RadialProfile zero_prof(make_potential(PotentialSpec{}), 4.0, 16.0);
  double worst_lin = 0.0;
  for (double rr = 0.01; rr <= 16.0; rr += 0.0173)
    worst_lin = std::max(worst_lin, std::abs(zero_prof(rr) - rr) / std::max(1.0, rr));
  const bool lin_ok = worst_lin <= 1e-12;

  // Long-range family: fast-marching grid solve against an independent
  // high-resolution radial quadrature; first-order error, halving with h.
  const auto pot = make_potential(long_range_spec());
  const RadialProfile oracle(pot, 4.0, std::sqrt(3.0) * 4.0 + 1.0, 16384);
  double errs[2] = {0.0, 0.0};
  const int cells[2] = {64, 128};
  for (int g = 0; g < 2; ++g) {
    const auto grid = Grid3::cube(4.0, cells[g]);
    const auto sol = solve_eikonal_grid(pot, 4.0, grid, 1.0);
    double worst = 0.0;
    for (int k = 0; k < grid.n; ++k)
      for (int j = 0; j < grid.n; ++j)
        for (int i = 0; i < grid.n; ++i) {
          const double rr = grid.radius(i, j, k);
          if (rr < 1.0 || rr > 4.0) continue;
          worst = std::max(worst, std::abs(sol.K.at(i, j, k) - oracle(rr)) / oracle(rr));
        }
    errs[g] = worst;
  }
  const double ratio = errs[0] / errs[1];
  const bool fmm_ok = errs[1] <= 0.02;
  const bool halve_ok = ratio >= 1.2 && ratio <= 2.8;  // first order: ~2.0

  r.pass = lin_ok && fmm_ok && halve_ok;
  r.detail = fmt("max|K-r| %.1e (<=1e-12); fmm rel err %.2f%% -> %.2f%% (fine <=2%%), ratio %.2f in [1.2,2.8]",
                 worst_lin, 100.0 * errs[0], 100.0 * errs[1], ratio);
  return r;
}

// ---- criterion 2: Hessian identity residual ----

CritResult criterion2() {
  CritResult r{2, "Hessian identity residual", false, ""};

  // Long-range family, exact geometry, origin-aligned subgrid of the fine
  // grid so refinement compares identical physical points.
  const auto spec = long_range_spec();
  double res[2] = {0.0, 0.0};
  const int cells[2] = {40, 80};
  for (int g = 0; g < 2; ++g) {
    const auto grid = Grid3::cube(4.0, cells[g]);
    const auto field = build_eikonal_field(profile_of(spec, 4.0, 8.0), grid, {});
    res[g] = hessian_identity_residual(field, 1.0, g == 0 ? 1 : 2, 3.0).max_abs;
  }
  const double ratio = res[0] / res[1];
  const bool order_ok = ratio >= 3.5 && ratio <= 4.5;

  // Zero potential: the residual must be exactly the finite-difference error
  // of the second derivatives of |x|, reproduced here independently.
  const auto grid = Grid3::cube(4.0, 40);
  const auto zero_field = build_eikonal_field(profile_of(PotentialSpec{}, 4.0, 8.0), grid, {});
  const double res_zero = hessian_identity_residual(zero_field, 1.0, 1, 3.0).max_abs;

  double res_direct = 0.0;
  {
    const int n = grid.n;
    const double h = grid.h, ih2 = 1.0 / (h * h), i4h2 = 1.0 / (4.0 * h * h);
    auto rad = [&](int i, int j, int k) { return grid.radius(i, j, k); };
    const int II[6] = {0, 1, 2, 0, 0, 1}, JJ[6] = {0, 1, 2, 1, 2, 2};
    for (int k = 2; k <= n - 3; ++k)
      for (int j = 2; j <= n - 3; ++j)
        for (int i = 2; i <= n - 3; ++i) {
          const double rr = rad(i, j, k);
          if (rr < 1.0 || rr > 3.0) continue;
          double d2[6];
          d2[0] = (rad(i + 1, j, k) - 2.0 * rr + rad(i - 1, j, k)) * ih2;
          d2[1] = (rad(i, j + 1, k) - 2.0 * rr + rad(i, j - 1, k)) * ih2;
          d2[2] = (rad(i, j, k + 1) - 2.0 * rr + rad(i, j, k - 1)) * ih2;
          d2[3] = (rad(i + 1, j + 1, k) - rad(i + 1, j - 1, k) - rad(i - 1, j + 1, k) +
                   rad(i - 1, j - 1, k)) * i4h2;
          d2[4] = (rad(i + 1, j, k + 1) - rad(i + 1, j, k - 1) - rad(i - 1, j, k + 1) +
                   rad(i - 1, j, k - 1)) * i4h2;
          d2[5] = (rad(i, j + 1, k + 1) - rad(i, j + 1, k - 1) - rad(i, j - 1, k + 1) +
                   rad(i, j - 1, k - 1)) * i4h2;
          const auto x = grid.point(i, j, k);
          const double gK[3] = {x[0] / rr, x[1] / rr, x[2] / rr};
          double worst = 0.0;
          for (int t = 0; t < 6; ++t) {
            const double rhs = ((II[t] == JJ[t] ? 1.0 : 0.0) - gK[II[t]] * gK[JJ[t]]) / rr;
            worst = std::max(worst, std::abs(d2[t] - rhs));
          }
          res_direct = std::max(res_direct, worst);
        }
  }
  const bool zero_ok = std::abs(res_zero - res_direct) <= 1e-8 * res_direct;

  r.pass = order_ok && zero_ok;
  r.detail = fmt("long-range residual %.3e -> %.3e, ratio %.2f in [3.5,4.5]; p=0 residual %.3e vs direct fd error of d2|x| %.3e (agree to %.1e rel)",
                 res[0], res[1], ratio, res_zero, res_direct,
                 std::abs(res_zero - res_direct) / res_direct);
  return r;
}

// ---- criterion 3: geometry decay ladder (from the default decay bundle) ----

CritResult criterion3(const ReportBundle& decay_bundle) {
  CritResult r{3, "geometry decay ladder", false, ""};
  const auto& check = decay_bundle.checks.at(0).payload;
  bool fits_ok = true;
  std::string worst_name;
  double worst_gap = 1e9;
  for (const auto& run : check.at("runs")) {
    for (const auto& q : run.at("quantities")) {
      const double gap = q.at("exponent").get<double>() -
                         (q.at("target").get<double>() - 0.3);
      if (!q.at("satisfied").get<bool>()) fits_ok = false;
      if (gap < worst_gap) {
        worst_gap = gap;
        worst_name = q.at("name").get<std::string>();
      }
    }
  }
  bool scale_ok = true;
  double measured_scale = 0.0;
  for (const auto& s : check.at("scaling")) {
    measured_scale = s.at("measured").get<double>();
    if (!s.at("satisfied").get<bool>()) scale_ok = false;
  }
  r.pass = fits_ok && scale_ok && decay_bundle.checks.at(0).pass;
  r.detail = fmt("all slopes above target-0.3 (tightest: %s, margin %.3f); 1/lambda constant scaling %.3f vs 4.0 within 30%%",
                 worst_name.c_str(), worst_gap, measured_scale);
  return r;
}

// ---- criterion 4: free-space solver oracle ----

CritResult criterion4() {
  CritResult r{4, "free-space solver oracle", false, ""};
  const auto pot = make_potential(PotentialSpec{});
  const double he = 20.0 * M_PI / 12.0;  // 12 points per wavelength at 40 cells

  double errs[2] = {0.0, 0.0};
  const int cells[2] = {40, 80};
  for (int g = 0; g < 2; ++g) {
    const auto grid = Grid3::cube(he, cells[g]);
    BumpSource bump;
    const auto f = sample_source(bump, grid);
    const auto bnd = greens_boundary(f, 4.0, 0.1, true);
    SolveOptions o;
    o.boundary = BoundaryRule::dirichlet_lift;
    o.boundary_values = &bnd;
    o.min_points_per_wavelength = 12;
    const auto sol = solve_helmholtz(pot, 4.0, 0.1, f, o);
    const auto oracle = greens_reference_if(
        f, 4.0, 0.1, [&](int i, int j, int k) { return grid.radius(i, j, k) <= 2.0; }, true);
    errs[g] = rel_l2_ball(sol.u, oracle, 2.0);
  }
  const double ratio = errs[0] / errs[1];
  const bool err_ok = errs[0] <= 0.02;
  const bool order_ok = ratio >= 3.3 && ratio <= 4.8;

  // Radiation functional of the analytic outgoing far field: compose nested
  // grids scaled with R (extents 4R -> 16R -> 64R -> 256R) plus the closed-form
  // tail; the uncapped functional is 4 pi at every R.
  bool four_pi_ok = true;
  double four_pi_worst = 0.0;
  for (double R : {1.0, 2.0, 4.0}) {
    double total = 0.0, prev_cap = R;
    for (double scale : {4.0, 16.0, 64.0, 256.0}) {
      const double ext = scale * R;
      const auto grid = Grid3::cube(ext, 96);
      const double cap = ext - 3.0 * grid.h;
      const auto field = build_eikonal_field(
          profile_of(PotentialSpec{}, 4.0, std::sqrt(3.0) * ext + 1.0), grid, {});
      const auto u = outgoing_far_field(grid, 2.0);
      RadiationOptions o;
      o.k_cap = cap;
      total += radiation_functional(u, field, 4.0, prev_cap, o) * (R / prev_cap);
      prev_cap = cap;
    }
    total += 4.0 * M_PI * R / prev_cap;
    const double defect = std::abs(total - 4.0 * M_PI) / (4.0 * M_PI);
    four_pi_worst = std::max(four_pi_worst, defect);
    if (defect > 0.01) four_pi_ok = false;
  }

  r.pass = err_ok && order_ok && four_pi_ok;
  r.detail = fmt("greens rel err %.2f%% -> %.2f%% (coarse <=2%%), ratio %.2f in [3.3,4.8]; far-field functional within %.2f%% of 4pi over R in {1,2,4}",
                 100.0 * errs[0], 100.0 * errs[1], ratio, 100.0 * four_pi_worst);
  if (!err_ok) {
    // Second-order 7-point stencils carry an axis phase error of k^3 h^2 / 24
    // per unit distance; at 12 points per wavelength and k = 2 that is 2.3% of
    // a cycle per unit, or about 4.6% field error at radius 2. The measured
    // coarse error sits on that floor (the oracle itself contributes < 0.6%),
    // so the 2% target is unreachable for this stencil at 12 points per
    // wavelength; the refinement ratio confirms the error is pure truncation.
    r.detail += fmt("; coarse error matches the stencil dispersion floor k^3 h^2 / 24 * r = %.1f%% at r=2",
                    100.0 * 8.0 * (M_PI / 12.0) * (M_PI / 12.0) / 24.0 * 2.0);
  }
  return r;
}

// ---- criterion 5: integral identity residuals on real solves ----

CritResult criterion5() {
  CritResult r{5, "integral identity residuals", false, ""};
  const auto phi = Multiplier::bump(1.5, 3.0);
  const auto psi = Multiplier::k_radial(2.0, 0.5).windowed(2.8, 3.6);

  struct Case {
    const char* name;
    PotentialSpec spec;
    double real_res[2], imag_res[2], key_res[2];
  } cases[2] = {{"free", PotentialSpec{}, {0, 0}, {0, 0}, {0, 0}},
                {"long", long_range_spec(), {0, 0}, {0, 0}, {0, 0}}};

  const int cells[2] = {52, 104};
  bool bounds_ok = true;
  double key_zero_52 = 0.0;  // saved for the spherical-path comparison
  ComplexField u_zero_52, f_zero_52;

  for (auto& c : cases) {
    const auto pot = make_potential(c.spec);
    for (int g = 0; g < 2; ++g) {
      const auto grid = Grid3::cube(8.0, cells[g]);
      const auto f = gaussian_source(grid);
      SolveOptions o;
      const auto sol = solve_helmholtz(pot, 4.0, 0.8, f, o);
      const auto field = build_eikonal_field(profile_of(c.spec, 4.0, 16.0), grid, {});
      const auto lem = constant_multiplier_residuals(sol.u, f, phi, pot, 4.0, 0.8, field);
      const auto key = key_identity_residual(sol.u, f, psi, field, pot, 4.0, 0.8);
      c.real_res[g] = lem.real_residual;
      c.imag_res[g] = lem.imag_residual;
      c.key_res[g] = key.residual;
      const double bound = 10.0 * (grid.h * grid.h + o.tol);
      bounds_ok = bounds_ok && lem.real_residual <= bound && lem.imag_residual <= bound &&
                  key.residual <= bound;
      if (c.spec.family == "zero" && g == 0) {
        key_zero_52 = key.residual;
        u_zero_52 = sol.u;
        f_zero_52 = f;
      }
    }
  }

  // Order-2 refinement of the dominant residuals (imaginary-part residuals sit
  // near the solver floor and are only bounded, not ratio-checked).
  const double ratio_real_free = cases[0].real_res[0] / cases[0].real_res[1];
  const double ratio_real_long = cases[1].real_res[0] / cases[1].real_res[1];
  const double ratio_key_free = cases[0].key_res[0] / cases[0].key_res[1];
  const double ratio_key_long = cases[1].key_res[0] / cases[1].key_res[1];
  auto in = [](double x, double lo, double hi) { return x >= lo && x <= hi; };
  const bool order_ok = in(ratio_real_free, 3.2, 4.8) && in(ratio_real_long, 3.2, 4.8) &&
                        in(ratio_key_free, 3.2, 4.8) && in(ratio_key_long, 3.2, 4.8);

  // p = 0: evaluating the identity through the quadrature-built geometry and
  // through the closed-form spherical geometry must agree to rounding on the
  // same solve.
  const auto grid52 = Grid3::cube(8.0, 52);
  const auto sph = analytic_spherical_field(grid52, 4.0);
  const auto pot0 = make_potential(PotentialSpec{});
  const double key_sph =
      key_identity_residual(u_zero_52, f_zero_52, psi, sph, pot0, 4.0, 0.8).residual;
  const bool paths_ok = std::abs(key_zero_52 - key_sph) <= 1e-9;

  r.pass = bounds_ok && order_ok && paths_ok;
  r.detail = fmt("residuals under 10(h^2+tol) on both families; ratios real %.2f/%.2f key %.2f/%.2f in [3.2,4.8]; p=0 paths differ %.1e",
                 ratio_real_free, ratio_real_long, ratio_key_free, ratio_key_long,
                 std::abs(key_zero_52 - key_sph));
  return r;
}

// ---- criterion 6: radiation-bound ratio (from the eps-stability bundle) ----

CritResult criterion6(const ReportBundle& eps_bundle) {
  CritResult r{6, "radiation-bound ratio", false, ""};
  const auto& check = eps_bundle.checks.at(0).payload;
  const double sup = check.at("sup_ratio").get<double>();
  const bool bounded_ok = sup <= 30.0;
  bool stable_ok = true;
  std::string changes;
  for (const auto& s : check.at("stability")) {
    const double ch = s.at("relative_change").get<double>();
    if (!changes.empty()) changes += "/";
    changes += fmt("%.2f", ch);
    if (ch > 0.2) stable_ok = false;
  }
  r.pass = bounded_ok && stable_ok;
  r.detail = fmt("sup over R,lambda = %.2f (cap 30) %s; eps 0.1->0.05 sup changes %s vs 0.20 allowed%s",
                 sup, bounded_ok ? "holds" : "EXCEEDED", changes.c_str(),
                 stable_ok ? "" : " (hard-wall truncation: box quasi-resonances grow as absorption shrinks; see eps_stability.cfg)");
  return r;
}

// ---- criterion 7: energy a-priori bound ----

CritResult criterion7(const ReportBundle& apriori_bundle) {
  CritResult r{7, "energy a-priori bound", false, ""};
  const auto& check = apriori_bundle.checks.at(0).payload;
  const double max_ratio = check.at("max_ratio").get<double>();
  const bool bounded_ok = apriori_bundle.checks.at(0).pass && max_ratio <= 1.0;

  // Scaling the source must leave the ratio fixed to rounding.
  const auto grid = Grid3::cube(3.0, 78);
  const auto pot = make_potential(long_range_spec());
  const auto f = gaussian_source(grid);
  ComplexField cf(grid);
  for (std::size_t id = 0; id < f.size(); ++id) cf[id] = 2.5 * f[id];
  SolveOptions o;
  const auto u1 = solve_helmholtz(pot, 4.0, 1.0, f, o);
  const auto u2 = solve_helmholtz(pot, 4.0, 1.0, cf, o);
  const double q1 = apriori_ratio(u1.u, f, 4.0, 1.0).ratio;
  const double q2 = apriori_ratio(u2.u, cf, 4.0, 1.0).ratio;
  // The scaled solve iterates on different rounding noise, so the quotient is
  // identical only to solver precision, not to machine precision.
  const bool scale_ok = std::abs(q2 - q1) <= 1e-8 * q1;

  r.pass = bounded_ok && scale_ok;
  r.detail = fmt("max ratio %.4f over lambda in {4,16,64} (cap 1.0); f -> 2.5f ratio drift %.1e (<=1e-8 rel)",
                 max_ratio, std::abs(q2 - q1) / q1);
  return r;
}

// ---- criterion 8: absorption limit probe ----

CritResult criterion8() {
  CritResult r{8, "absorption limit probe", false, ""};
  const auto pot = make_potential(PotentialSpec{});
  const auto grid = Grid3::cube(2.0 * M_PI, 96);  // 24 points per wavelength
  BumpSource bump;
  const auto f = sample_source(bump, grid);

  const double eps[4] = {0.4, 0.2, 0.1, 0.05};
  std::vector<ComplexField> u;
  for (double e : eps) {
    const auto bnd = greens_boundary(f, 4.0, e, true);
    SolveOptions o;
    o.boundary = BoundaryRule::dirichlet_lift;
    o.boundary_values = &bnd;
    u.push_back(solve_helmholtz(pot, 4.0, e, f, o).u);
  }
  double diffs[3];
  for (int t = 0; t < 3; ++t) diffs[t] = triple_norm(field_diff(u[t + 1], u[t]), 1.0);
  const bool mono_ok = diffs[0] > diffs[1] && diffs[1] > diffs[2];

  // Linear-in-eps extrapolation to zero absorption against the limiting
  // Green's kernel.
  ComplexField extrap(grid);
  for (std::size_t id = 0; id < extrap.size(); ++id) extrap[id] = 2.0 * u[3][id] - u[2][id];
  const auto limit = greens_reference(f, 4.0, 0.0, true);
  const double rel =
      triple_norm(field_diff(extrap, limit), 1.0) / triple_norm(limit, 1.0);
  const bool limit_ok = rel <= 0.03;

  r.pass = mono_ok && limit_ok;
  r.detail = fmt("|||u_eps/2 - u_eps||| = %.3e > %.3e > %.3e monotone; extrapolated limit off by %.2f%% (<=3%%)",
                 diffs[0], diffs[1], diffs[2], 100.0 * rel);
  if (!limit_ok) {
    // The residual is the discrete interior spectrum reacting to the grid
    // truncation error: the box supports near-resonant modes close to the
    // operating frequency, and extrapolating toward zero absorption removes
    // their damping, so the amplified stencil defect survives. Measured sweeps
    // put the floor at 3.2-5% across box sizes and at both 24 and 32 points
    // per wavelength; higher-order extrapolation in the absorption does not
    // move it, so the residual is not an absorption-order effect.
    r.detail += "; residual is resonance-amplified grid truncation, not absorption order";
  }
  return r;
}

// ---- criterion 9: harness determinism and budget ----

CritResult criterion9(double suite_seconds, const std::string& configs_dir) {
  CritResult r{9, "harness determinism and budget", false, ""};

  ExperimentConfig tiny;
  tiny.name = "tiny";
  tiny.potential = long_range_spec();
  tiny.lambdas = {4.0};
  tiny.epsilons = {0.3};
  tiny.radii = {1.0, 2.0};
  tiny.half_extent = 5.0;
  tiny.cells = 40;
  tiny.checks = {"theorem"};
  const auto b1 = run_experiment(tiny);
  const auto b2 = run_experiment(tiny);
  const bool bits_ok = b1.summary.dump(2) == b2.summary.dump(2);

  const Grid3 grid = tiny.grid();
  const auto pot = make_potential(tiny.potential);
  const auto f = gaussian_source(grid);
  const auto field = build_eikonal_field(profile_of(tiny.potential, 4.0, 10.0), grid, {});
  SolveOptions so;
  const auto sol = solve_helmholtz(pot, 4.0, 0.3, f, so);
  RadiationOptions ro;
  ro.trust_radius = 0.75 * 5.0;
  const auto direct = theorem_ratio(sol.u, f, field, 4.0, tiny.radii, ro);
  bool direct_ok = b1.theorem_curves.size() == 1 &&
                   b1.theorem_curves[0].rhs == direct.rhs &&
                   b1.theorem_curves[0].sup_ratio == direct.sup_ratio;
  if (direct_ok)
    for (std::size_t q = 0; q < direct.lhs.size(); ++q)
      direct_ok = direct_ok && b1.theorem_curves[0].lhs[q] == direct.lhs[q];

  const bool time_ok = suite_seconds < 900.0;
  bool grids_ok = true;
  int parsed = 0;
  std::string cfg_note;
  if (std::filesystem::is_directory(configs_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(configs_dir)) {
      if (entry.path().extension() != ".cfg") continue;
      try {
        const auto cfg = load_config(entry.path());
        validate_config(cfg);
        if (cfg.cells > 96) grids_ok = false;
        ++parsed;
      } catch (const std::exception& e) {
        grids_ok = false;
        cfg_note = fmt(" (%s: %s)", entry.path().filename().c_str(), e.what());
      }
    }
  } else {
    cfg_note = " (configs dir not found; in-code replicas timed)";
  }

  r.pass = bits_ok && direct_ok && time_ok && grids_ok;
  r.detail = fmt("summaries bit-identical %s; orchestrated==direct %s; default suite %.0fs single-core (<900s); %d config files, grids <=96^3 %s%s",
                 bits_ok ? "yes" : "NO", direct_ok ? "yes" : "NO", suite_seconds, parsed,
                 grids_ok ? "yes" : "NO", cfg_note.c_str());
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string configs_dir = argc > 1 ? argv[1] : "configs";
  std::vector<CritResult> results;

  // Timed pass over the default experiment suite (in-memory bundles); the
  // bundles double as inputs for criteria 3, 6 and 7.
  const auto t0 = std::chrono::steady_clock::now();
  std::printf("running default suite: decay");
  std::fflush(stdout);
  const auto decay_bundle = run_experiment(decay_experiment());
  std::printf(" identities");
  std::fflush(stdout);
  const auto identities_bundle = run_experiment(identities_experiment());
  std::printf(" theorem");
  std::fflush(stdout);
  const auto theorem_bundle = run_experiment(theorem_experiment());
  std::printf(" apriori");
  std::fflush(stdout);
  const auto apriori_bundle = run_experiment(apriori_experiment());
  std::printf(" eps_stability");
  std::fflush(stdout);
  const auto eps_bundle = run_experiment(eps_stability_experiment());
  const double suite_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf(" done (%.0fs)\n", suite_seconds);

  // The green defaults must actually be green.
  if (!decay_bundle.all_pass || !identities_bundle.all_pass || !theorem_bundle.all_pass ||
      !apriori_bundle.all_pass)
    std::printf("note: a default experiment reported FAIL; see the criteria below\n");

  std::printf("criteria:\n");
  results.push_back(criterion1());
  results.push_back(criterion2());
  results.push_back(criterion3(decay_bundle));
  results.push_back(criterion4());
  results.push_back(criterion5());
  results.push_back(criterion6(eps_bundle));
  results.push_back(criterion7(apriori_bundle));
  results.push_back(criterion8());
  results.push_back(criterion9(suite_seconds, configs_dir));

  int failed = 0;
  for (const auto& res : results) {
    std::printf("criterion %d [%s]: %s  %s\n", res.id, res.label.c_str(),
                res.pass ? "PASS" : "FAIL", res.detail.c_str());
    if (!res.pass) ++failed;
  }
  std::printf("%zu/%zu criteria passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : 1;
}
