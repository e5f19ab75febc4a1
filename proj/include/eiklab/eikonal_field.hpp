#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "eiklab/eikonal.hpp"
#include "eiklab/grid.hpp"

namespace eiklab {

/// Gauge of the phase carried by a field build.
///   raw         K(0) = 0 (the cumulative radial integral); g = K/|x| is smooth
///               through the origin.
///   asymptotic  K - c_inf |x| -> 0 at infinity (the cumulative value minus the
///               recorded phase shift); the far-field decay rates of g's
///               derivatives hold in this gauge only.
/// Derivatives of K are identical in both; only K, g and the fields derived
/// from g's absolute value differ.
enum class Gauge { raw, asymptotic };

struct FieldBuildOptions {
  Gauge gauge = Gauge::raw;
  bool with_ladder = false;        // store dg/d2g and the third-derivative fields
  bool finite_difference = false;  // derive everything from centered differences of sampled K
  double core_radius = 0.0;        // origin exclusion; 0 = default (4h on FD builds, 0 on exact builds)
};

/// Eikonal geometry on a grid: K, g = K/|x|, |grad K|^2, the correction tensor
/// F from the Hessian identity
///   d2_ij K = (|grad K|^2 delta_ij - d_i K d_j K + F_ij) / K,
/// its trace, and (optionally) the derivative ladder of g.  Symmetric tensors
/// are stored as [xx, yy, zz, xy, xz, yz].
struct EikonalField {
  Grid3 grid;
  Gauge gauge = Gauge::raw;
  double lambda = 0.0;
  double phase_shift = 0.0;   // subtracted from K when gauge == asymptotic
  double r_core = 0.0;        // origin ball excluded from valid nodes
  double r_valid = 0.0;       // r_core plus the FD stencil margin
  bool exact_radial = false;  // derivatives are closed-form radial expressions
  bool has_ladder = false;
  double c0 = 0.0, c1 = 0.0;  // min/max of K/|x| over the valid region

  RealField K, g, gk2;
  std::array<RealField, 3> gradK;
  RealField traceF;
  std::array<RealField, 6> F;

  // Ladder (present when has_ladder):
  std::array<RealField, 3> dg;
  std::array<RealField, 6> d2g;
  std::array<RealField, 3> d_r_dg;        // radial derivative of d_i g
  std::array<RealField, 3> grad_lap_g;
  std::array<RealField, 3> grad_traceF;         // product-rule / closed form
  std::array<RealField, 3> grad_traceF_direct;  // centered gradient of the trace field
  double grad_traceF_discrepancy = 0.0;         // max |closed - direct| over valid nodes

  std::shared_ptr<const RadialProfile> profile;  // set on radial-backed builds

  /// Nodes where every stored derivative is trustworthy: outside the origin
  /// ball and at least two cells from the walls.
  bool valid(int i, int j, int k) const {
    if (i < 2 || j < 2 || k < 2 || i > grid.n - 3 || j > grid.n - 3 || k > grid.n - 3) return false;
    return grid.radius(i, j, k) >= r_valid;
  }
};

namespace detail {

struct RadialDerivs {
  double G, G1, G2, G3;  // g and its first three radial derivatives
  double s, s1;          // K' and K''
};

// Closed-form radial derivatives of g = (K - shift)/r from the profile's
// analytic slope s = sqrt(1 + p/lambda).
inline RadialDerivs radial_derivs(const RadialProfile& prof, double r, double shift) {
  const Potential& pot = prof.potential();
  const double lam = prof.lambda();
  RadialDerivs d{};
  const double Kv = prof(r) - shift;
  d.s = prof.slowness(r);
  const double p1 = pot.dp_of_r(r), p2 = pot.d2p_of_r(r);
  d.s1 = p1 / (2.0 * lam * d.s);
  const double s2 = p2 / (2.0 * lam * d.s) - p1 * p1 / (4.0 * lam * lam * d.s * d.s * d.s);
  d.G = Kv / r;
  d.G1 = d.s / r - Kv / (r * r);
  d.G2 = d.s1 / r - 2.0 * d.s / (r * r) + 2.0 * Kv / (r * r * r);
  d.G3 = s2 / r - 3.0 * d.s1 / (r * r) + 6.0 * d.s / (r * r * r) - 6.0 * Kv / (r * r * r * r);
  return d;
}

inline void second_diffs(const RealField& f, int i, int j, int k, double out[6]) {
  const double h = f.grid.h, ih2 = 1.0 / (h * h), i4h2 = 1.0 / (4.0 * h * h);
  out[0] = (f.at(i + 1, j, k) - 2.0 * f.at(i, j, k) + f.at(i - 1, j, k)) * ih2;
  out[1] = (f.at(i, j + 1, k) - 2.0 * f.at(i, j, k) + f.at(i, j - 1, k)) * ih2;
  out[2] = (f.at(i, j, k + 1) - 2.0 * f.at(i, j, k) + f.at(i, j, k - 1)) * ih2;
  out[3] = (f.at(i + 1, j + 1, k) - f.at(i + 1, j - 1, k) - f.at(i - 1, j + 1, k) + f.at(i - 1, j - 1, k)) * i4h2;
  out[4] = (f.at(i + 1, j, k + 1) - f.at(i + 1, j, k - 1) - f.at(i - 1, j, k + 1) + f.at(i - 1, j, k - 1)) * i4h2;
  out[5] = (f.at(i, j + 1, k + 1) - f.at(i, j + 1, k - 1) - f.at(i, j - 1, k + 1) + f.at(i, j - 1, k - 1)) * i4h2;
}

// F_ij from pointwise g, dg, d2g at x (the algebraic identity needs exactly these):
// F_ij = -delta_ij (|x|^2 |dg|^2 + 2 g x.dg) + |x|^2 dg_i dg_j
//        + 2 x_i g dg_j + 2 x_j g dg_i + g |x|^2 d2g_ij.
inline void f_tensor(const std::array<double, 3>& x, double g, const double dg[3],
                     const double d2g[6], double out[6]) {
  const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  const double xdg = x[0] * dg[0] + x[1] * dg[1] + x[2] * dg[2];
  const double dg2 = dg[0] * dg[0] + dg[1] * dg[1] + dg[2] * dg[2];
  const double common = r2 * dg2 + 2.0 * g * xdg;
  const int II[6] = {0, 1, 2, 0, 0, 1}, JJ[6] = {0, 1, 2, 1, 2, 2};
  for (int t = 0; t < 6; ++t) {
    const int i = II[t], j = JJ[t];
    double v = r2 * dg[i] * dg[j] + 2.0 * x[i] * g * dg[j] + 2.0 * x[j] * g * dg[i] +
               g * r2 * d2g[t];
    if (i == j) v -= common;
    out[t] = v;
  }
}

}  // namespace detail

/// Builds the geometry from a radial profile.  Default backend evaluates the
/// closed-form radial derivatives (exact); `finite_difference` samples K on the
/// grid and derives everything by centered differences instead.
inline EikonalField build_eikonal_field(std::shared_ptr<const RadialProfile> prof,
                                        const Grid3& grid, const FieldBuildOptions& opts = {});

/// Same, from a fast-marching grid solution (always the FD backend; the profile
/// supplies the origin-ball extension and the phase shift).
inline EikonalField build_eikonal_field(const EikonalGridSolution& fmm,
                                        std::shared_ptr<const RadialProfile> prof,
                                        const FieldBuildOptions& opts = {});

/// Spherical reference build: K = |x| assigned directly, then the same FD
/// pipeline.  Cross-check path for the p = 0 reductions.
inline EikonalField make_spherical_field(const Grid3& grid, bool with_ladder = false);

namespace detail {

inline void finish_fd_build(EikonalField& f, const FieldBuildOptions& opts) {
  const Grid3& grid = f.grid;
  const int n = grid.n;

  // g from K with the origin ball extended by the clamped radial value.
  f.g = RealField(grid);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double r = grid.radius(i, j, k);
        if (r >= f.r_core && r > 0.0) {
          f.g.at(i, j, k) = f.K.at(i, j, k) / r;
        } else if (f.profile) {
          const double rc = std::max(f.r_core, grid.h);
          f.g.at(i, j, k) = ((*f.profile)(rc) - f.phase_shift) / rc;
        } else {
          f.g.at(i, j, k) = 1.0;
        }
      }

  f.gradK = gradient(f.K);
  f.gk2 = RealField(grid);
  for (std::size_t id = 0; id < grid.size(); ++id)
    f.gk2[id] = f.gradK[0][id] * f.gradK[0][id] + f.gradK[1][id] * f.gradK[1][id] +
                f.gradK[2][id] * f.gradK[2][id];

  auto dg = gradient(f.g);
  std::array<RealField, 6> d2g;
  for (auto& c : d2g) c = RealField(grid);
  for (int k = 1; k < n - 1; ++k)
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) {
        double out[6];
        second_diffs(f.g, i, j, k, out);
        for (int t = 0; t < 6; ++t) d2g[t].at(i, j, k) = out[t];
      }

  f.traceF = RealField(grid);
  for (auto& c : f.F) c = RealField(grid);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const auto x = grid.point(i, j, k);
        const double dgv[3] = {dg[0].at(i, j, k), dg[1].at(i, j, k), dg[2].at(i, j, k)};
        double d2v[6], out[6];
        for (int t = 0; t < 6; ++t) d2v[t] = d2g[t].at(i, j, k);
        f_tensor(x, f.g.at(i, j, k), dgv, d2v, out);
        for (int t = 0; t < 6; ++t) f.F[t].at(i, j, k) = out[t];
        f.traceF.at(i, j, k) = out[0] + out[1] + out[2];
      }

  if (opts.with_ladder) {
    f.has_ladder = true;
    f.dg = dg;
    f.d2g = d2g;
    RealField lap(f.grid), drg(f.grid);
    for (std::size_t id = 0; id < grid.size(); ++id)
      lap[id] = d2g[0][id] + d2g[1][id] + d2g[2][id];
    f.grad_lap_g = gradient(lap);
    // Radial derivative of each gradient component.
    std::array<std::array<RealField, 3>, 3> ddg;
    for (int a = 0; a < 3; ++a) ddg[a] = gradient(dg[a]);
    for (auto& c : f.d_r_dg) c = RealField(grid);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const auto x = grid.point(i, j, k);
          const double r = grid.radius(i, j, k);
          if (r == 0.0) continue;
          for (int a = 0; a < 3; ++a)
            f.d_r_dg[a].at(i, j, k) =
                (x[0] * ddg[a][0].at(i, j, k) + x[1] * ddg[a][1].at(i, j, k) +
                 x[2] * ddg[a][2].at(i, j, k)) / r;
          drg.at(i, j, k) = (x[0] * dg[0].at(i, j, k) + x[1] * dg[1].at(i, j, k) +
                             x[2] * dg[2].at(i, j, k)) / r;
        }
    f.grad_traceF_direct = gradient(f.traceF);
    // Product-rule form of grad(trace F):
    //   -(d-1)(grad p / lambda - 2 g grad g) + 2 x g lap g + |x|^2 grad g lap g
    //   + |x|^2 g grad(lap g) + 2 grad g |x| d_r g + 2 g xhat d_r g + 2 g |x| grad(d_r g)
    auto grad_drg = gradient(drg);
    const Potential* pot = f.profile ? &f.profile->potential() : nullptr;
    for (auto& c : f.grad_traceF) c = RealField(grid);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const auto x = grid.point(i, j, k);
          const double r = grid.radius(i, j, k);
          if (r == 0.0) continue;
          const double gv = f.g.at(i, j, k), lapv = lap.at(i, j, k), drgv = drg.at(i, j, k);
          std::array<double, 3> gp{0.0, 0.0, 0.0};
          if (pot && f.lambda > 0.0) {
            gp = pot->grad_p(x);
            for (auto& c : gp) c /= f.lambda;
          }
          for (int a = 0; a < 3; ++a) {
            const double dgv = dg[a].at(i, j, k);
            f.grad_traceF[a].at(i, j, k) =
                -2.0 * (gp[a] - 2.0 * gv * dgv) + 2.0 * x[a] * gv * lapv +
                r * r * dgv * lapv + r * r * gv * f.grad_lap_g[a].at(i, j, k) +
                2.0 * dgv * r * drgv + 2.0 * gv * (x[a] / r) * drgv +
                2.0 * gv * r * grad_drg[a].at(i, j, k);
          }
        }
    double disc = 0.0;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          if (f.valid(i, j, k))
            for (int a = 0; a < 3; ++a)
              disc = std::max(disc, std::abs(f.grad_traceF[a].at(i, j, k) -
                                             f.grad_traceF_direct[a].at(i, j, k)));
    f.grad_traceF_discrepancy = disc;
  }

  double c0 = std::numeric_limits<double>::infinity(), c1 = 0.0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (f.valid(i, j, k)) {
          const double gv = f.g.at(i, j, k);
          c0 = std::min(c0, gv);
          c1 = std::max(c1, gv);
        }
  f.c0 = c0;
  f.c1 = c1;
}

}  // namespace detail

inline EikonalField build_eikonal_field(std::shared_ptr<const RadialProfile> prof,
                                        const Grid3& grid, const FieldBuildOptions& opts) {
  if (!prof) throw std::invalid_argument("eikonal field: null profile");
  const double corner = std::sqrt(3.0) * grid.half_extent();
  if (prof->r_max() < corner)
    throw std::invalid_argument("eikonal field: profile does not cover the grid corner");

  EikonalField f;
  f.grid = grid;
  f.gauge = opts.gauge;
  f.lambda = prof->lambda();
  f.phase_shift = (opts.gauge == Gauge::asymptotic) ? prof->phase_shift() : 0.0;
  f.profile = prof;
  f.exact_radial = !opts.finite_difference;
  f.r_core = opts.core_radius > 0.0 ? opts.core_radius
                                    : (opts.finite_difference ? 4.0 * grid.h : 0.0);
  if (opts.gauge == Gauge::asymptotic) f.r_core = std::max(f.r_core, 4.0 * grid.h);
  f.r_valid = f.r_core + (opts.finite_difference ? 2.5 * grid.h : 0.0);

  const int n = grid.n;
  f.K = RealField(grid);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        f.K.at(i, j, k) = (*prof)(grid.radius(i, j, k)) - f.phase_shift;

  if (opts.finite_difference) {
    detail::finish_fd_build(f, opts);
    return f;
  }

  // Exact radial backend.
  f.g = RealField(grid);
  f.gk2 = RealField(grid);
  f.traceF = RealField(grid);
  for (auto& c : f.gradK) c = RealField(grid);
  for (auto& c : f.F) c = RealField(grid);
  if (opts.with_ladder) {
    f.has_ladder = true;
    for (auto& c : f.dg) c = RealField(grid);
    for (auto& c : f.d2g) c = RealField(grid);
    for (auto& c : f.d_r_dg) c = RealField(grid);
    for (auto& c : f.grad_lap_g) c = RealField(grid);
    for (auto& c : f.grad_traceF) c = RealField(grid);
  }
  const double rc = std::max(f.r_core, 1e-8);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const auto x = grid.point(i, j, k);
        double r = grid.radius(i, j, k);
        const bool core = r < std::max(rc, 1e-12);
        std::array<double, 3> xh{0.0, 0.0, 0.0};
        if (core) {
          // Origin ball: extend radially (clamped argument along +x).
          r = std::max(rc, grid.h);
          xh = {1.0, 0.0, 0.0};
        } else {
          xh = {x[0] / r, x[1] / r, x[2] / r};
        }
        const auto d = detail::radial_derivs(*prof, r, f.phase_shift);
        f.g.at(i, j, k) = d.G;
        f.gk2.at(i, j, k) = d.s * d.s;
        const std::size_t id = grid.idx(i, j, k);
        for (int a = 0; a < 3; ++a) f.gradK[a][id] = d.s * xh[a];
        const double tF = r * r * (d.G * d.G2 - 2.0 * d.G1 * d.G1);
        f.traceF[id] = tF;
        const int II[6] = {0, 1, 2, 0, 0, 1}, JJ[6] = {0, 1, 2, 1, 2, 2};
        const double diag = -r * r * d.G1 * d.G1 - r * d.G * d.G1;
        const double rank1 = r * r * d.G1 * d.G1 + 3.0 * r * d.G * d.G1 + r * r * d.G * d.G2;
        for (int t = 0; t < 6; ++t) {
          const int a = II[t], b = JJ[t];
          f.F[t][id] = rank1 * xh[a] * xh[b] + (a == b ? diag : 0.0);
        }
        if (opts.with_ladder) {
          for (int a = 0; a < 3; ++a) f.dg[a][id] = d.G1 * xh[a];
          for (int t = 0; t < 6; ++t) {
            const int a = II[t], b = JJ[t];
            f.d2g[t][id] = d.G2 * xh[a] * xh[b] + (d.G1 / r) * ((a == b ? 1.0 : 0.0) - xh[a] * xh[b]);
          }
          const double dlap = d.G3 + 2.0 * d.G2 / r - 2.0 * d.G1 / (r * r);
          const double dtF = 2.0 * r * (d.G * d.G2 - 2.0 * d.G1 * d.G1) +
                             r * r * (d.G * d.G3 - 3.0 * d.G1 * d.G2);
          for (int a = 0; a < 3; ++a) {
            f.d_r_dg[a][id] = d.G2 * xh[a];
            f.grad_lap_g[a][id] = dlap * xh[a];
            f.grad_traceF[a][id] = dtF * xh[a];
          }
        }
      }
  if (opts.with_ladder) {
    f.grad_traceF_direct = gradient(f.traceF);
    double disc = 0.0;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          if (f.valid(i, j, k))
            for (int a = 0; a < 3; ++a)
              disc = std::max(disc, std::abs(f.grad_traceF[a].at(i, j, k) -
                                             f.grad_traceF_direct[a].at(i, j, k)));
    f.grad_traceF_discrepancy = disc;
  }
  double c0 = std::numeric_limits<double>::infinity(), c1 = 0.0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (f.valid(i, j, k)) {
          c0 = std::min(c0, f.g.at(i, j, k));
          c1 = std::max(c1, f.g.at(i, j, k));
        }
  f.c0 = c0;
  f.c1 = c1;
  return f;
}

inline EikonalField build_eikonal_field(const EikonalGridSolution& fmm,
                                        std::shared_ptr<const RadialProfile> prof,
                                        const FieldBuildOptions& opts) {
  if (!prof) throw std::invalid_argument("eikonal field: null profile");
  EikonalField f;
  f.grid = fmm.K.grid;
  f.gauge = opts.gauge;
  f.lambda = prof->lambda();
  f.phase_shift = (opts.gauge == Gauge::asymptotic) ? prof->phase_shift() : 0.0;
  f.profile = prof;
  f.exact_radial = false;
  f.r_core = std::max(opts.core_radius, 4.0 * f.grid.h);
  f.r_valid = f.r_core + 2.5 * f.grid.h;
  f.K = fmm.K;
  if (f.phase_shift != 0.0)
    for (auto& v : f.K.v) v -= f.phase_shift;
  detail::finish_fd_build(f, opts);
  return f;
}

inline EikonalField make_spherical_field(const Grid3& grid, bool with_ladder) {
  EikonalField f;
  f.grid = grid;
  f.gauge = Gauge::raw;
  f.lambda = 0.0;
  f.exact_radial = false;
  f.r_core = 4.0 * grid.h;
  f.r_valid = f.r_core + 2.5 * grid.h;
  f.K = RealField(grid);
  for (int k = 0; k < grid.n; ++k)
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i)
        f.K.at(i, j, k) = grid.radius(i, j, k);
  FieldBuildOptions opts;
  opts.with_ladder = with_ladder;
  opts.finite_difference = true;
  detail::finish_fd_build(f, opts);
  return f;
}

/// Pointwise defect of the Hessian identity
///   d2_ij K = (|grad K|^2 delta_ij - d_i K d_j K + F_ij) / K
/// with the Hessian of K by centered differences; max/mean of the max-abs
/// component over valid nodes with |x| >= r_min.
struct HessianResidual {
  double max_abs = 0.0;
  double mean_abs = 0.0;
  std::size_t nodes = 0;
};

inline HessianResidual hessian_identity_residual(const EikonalField& f, double r_min = 0.0,
                                       int stride = 1,
                                       double r_max = std::numeric_limits<double>::infinity()) {
  const Grid3& grid = f.grid;
  const int n = grid.n;
  const int c = grid.center();
  const double lo = std::max(r_min, f.r_valid);
  HessianResidual res;
  double sum = 0.0;
  for (int k = 1; k < n - 1; ++k)
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) {
        // stride > 1 restricts to the origin-aligned subgrid, so refinement
        // ratios compare residuals at identical physical points.
        if ((i - c) % stride || (j - c) % stride || (k - c) % stride) continue;
        if (!f.valid(i, j, k)) continue;
        const double r = grid.radius(i, j, k);
        if (r < lo || r > r_max) continue;
        double d2K[6];
        detail::second_diffs(f.K, i, j, k, d2K);
        const double Kv = f.K.at(i, j, k);
        const double gk2 = f.gk2.at(i, j, k);
        const double gK[3] = {f.gradK[0].at(i, j, k), f.gradK[1].at(i, j, k),
                              f.gradK[2].at(i, j, k)};
        const int II[6] = {0, 1, 2, 0, 0, 1}, JJ[6] = {0, 1, 2, 1, 2, 2};
        double worst = 0.0;
        for (int t = 0; t < 6; ++t) {
          const int a = II[t], b = JJ[t];
          const double rhs =
              ((a == b ? gk2 : 0.0) - gK[a] * gK[b] + f.F[t].at(i, j, k)) / Kv;
          worst = std::max(worst, std::abs(d2K[t] - rhs));
        }
        res.max_abs = std::max(res.max_abs, worst);
        sum += worst;
        ++res.nodes;
      }
  res.mean_abs = res.nodes ? sum / double(res.nodes) : 0.0;
  return res;
}

/// Sup of |values| over valid nodes with radius in [r_lo, r_hi].
inline double annulus_sup(const EikonalField& f, const RealField& values, double r_lo,
                          double r_hi) {
  double sup = 0.0;
  const int n = f.grid.n;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (!f.valid(i, j, k)) continue;
        const double r = f.grid.radius(i, j, k);
        if (r < r_lo || r > r_hi) continue;
        sup = std::max(sup, std::abs(values.at(i, j, k)));
      }
  return sup;
}

template <std::size_t N>
inline double annulus_sup(const EikonalField& f, const std::array<RealField, N>& comps,
                          double r_lo, double r_hi) {
  double sup = 0.0;
  for (const auto& c : comps) sup = std::max(sup, annulus_sup(f, c, r_lo, r_hi));
  return sup;
}

/// Least-squares power-law fit: log(sup) vs log(r) gives |field| ~ C r^-m.
struct DecayFit {
  double exponent = 0.0;        // m
  double constant = 0.0;        // C (value extrapolated to r = 1)
  double rms_log_residual = 0.0;
  double target_exponent = 0.0;
  double margin = 0.0;
  bool satisfied = false;       // exponent >= target - margin
  int points = 0;
};

inline DecayFit fit_decay(const std::vector<double>& radii, const std::vector<double>& sups,
                          double target_exponent, double margin = 0.3) {
  if (radii.size() != sups.size() || radii.size() < 2)
    throw std::invalid_argument("fit_decay: need matching radius/sup samples, at least two");
  DecayFit fit;
  fit.points = int(radii.size());
  fit.target_exponent = target_exponent;
  fit.margin = margin;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int m = fit.points;
  for (int i = 0; i < m; ++i) {
    if (!(radii[i] > 0.0) || !(sups[i] > 0.0))
      throw std::invalid_argument("fit_decay: radii and sups must be positive");
    const double x = std::log(radii[i]), y = std::log(sups[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double den = m * sxx - sx * sx;
  const double slope = (m * sxy - sx * sy) / den;
  const double intercept = (sy - slope * sx) / m;
  fit.exponent = -slope;
  fit.constant = std::exp(intercept);
  double ss = 0.0;
  for (int i = 0; i < m; ++i) {
    const double pred = intercept + slope * std::log(radii[i]);
    const double d = std::log(sups[i]) - pred;
    ss += d * d;
  }
  fit.rms_log_residual = std::sqrt(ss / m);
  fit.satisfied = fit.exponent >= target_exponent - margin;
  return fit;
}

}  // namespace eiklab
