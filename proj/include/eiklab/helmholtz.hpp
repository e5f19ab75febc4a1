#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "eiklab/grid.hpp"
#include "eiklab/potential.hpp"

namespace eiklab {

/// Treatment of the cube walls for the absorbed problem
///   laplace(u) + (lambda + i eps + p + Q) u = f,   eps > 0.
///   dirichlet_zero  u = 0 on the walls (truncation of the free problem; wall
///                   reflections decay like exp(-eps dist / sqrt(lambda))).
///   dirichlet_lift  u = given values on the walls, moved to the right-hand
///                   side; with oracle wall data the remaining error is pure
///                   interior discretization.
enum class BoundaryRule { dirichlet_zero, dirichlet_lift };

struct SolveOptions {
  double tol = 1e-8;                     // relative residual target, |r|/|b|
  int max_iter = 0;                      // 0 = 40 * nodes-per-axis
  BoundaryRule boundary = BoundaryRule::dirichlet_zero;
  const ComplexField* boundary_values = nullptr;  // required for dirichlet_lift
  int min_points_per_wavelength = 10;
};

struct SolveStats {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
  bool breakdown = false;
};

struct HelmholtzSolution {
  ComplexField u;   // full field; walls carry the boundary values (0 or lifted)
  SolveStats stats;
};

namespace detail {

inline void check_resolution(double lambda, const Grid3& grid, int ppw) {
  const double wavelength = 2.0 * M_PI / std::sqrt(lambda);
  if (grid.h > wavelength / ppw + 1e-12)
    throw std::invalid_argument(
        "helmholtz: grid spacing under-resolves the wavelength (need >= " +
        std::to_string(ppw) + " points per wavelength)");
}

}  // namespace detail

/// Applies the interior 7-point operator to a full-size field, reading the
/// field's own wall values in the stencil.  Wall rows of the output are zero.
inline ComplexField apply_helmholtz(const Potential& pot, double lambda, double epsilon,
                                    const ComplexField& u) {
  const Grid3& grid = u.grid;
  const int n = grid.n;
  const double ih2 = 1.0 / (grid.h * grid.h);
  ComplexField out(grid);
  for (int k = 1; k < n - 1; ++k)
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) {
        const double r = grid.radius(i, j, k);
        const Complex diag(lambda + pot.p_of_r(r) + pot.q_of_r(r) - 6.0 * ih2, epsilon);
        out.at(i, j, k) =
            diag * u.at(i, j, k) +
            ih2 * (u.at(i - 1, j, k) + u.at(i + 1, j, k) + u.at(i, j - 1, k) +
                   u.at(i, j + 1, k) + u.at(i, j, k - 1) + u.at(i, j, k + 1));
      }
  return out;
}

/// Conjugate-orthogonal CG on the complex-symmetric system.  Zero initial
/// guess, Jacobi (true operator diagonal) preconditioning, serial
/// deterministic reductions.  Convergence is the conjugated residual norm
/// |r|_2 / |b|_2 <= tol.
inline HelmholtzSolution solve_helmholtz(const Potential& pot, double lambda, double epsilon,
                                         const ComplexField& f, const SolveOptions& opts = {}) {
  const Grid3& grid = f.grid;
  if (!(lambda > 0.0)) throw std::invalid_argument("helmholtz: lambda must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("helmholtz: absorption must be positive");
  detail::check_resolution(lambda, grid, opts.min_points_per_wavelength);
  if (opts.boundary == BoundaryRule::dirichlet_lift) {
    if (!opts.boundary_values)
      throw std::invalid_argument("helmholtz: dirichlet_lift needs boundary values");
    if (!opts.boundary_values->grid.same_as(grid))
      throw std::invalid_argument("helmholtz: boundary values on a different grid");
  }

  const int n = grid.n;
  const double ih2 = 1.0 / (grid.h * grid.h);
  const std::size_t total = grid.size();

  // Interior mask and diagonal.
  std::vector<Complex> diag(total, Complex(1.0, 0.0));
  std::vector<uint8_t> interior(total, 0);
  for (int k = 1; k < n - 1; ++k)
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) {
        const std::size_t id = grid.idx(i, j, k);
        interior[id] = 1;
        const double r = grid.radius(i, j, k);
        diag[id] = Complex(lambda + pot.p_of_r(r) + pot.q_of_r(r) - 6.0 * ih2, epsilon);
      }

  // Right-hand side: f minus lifted wall contributions.
  ComplexField b(grid);
  for (std::size_t id = 0; id < total; ++id)
    if (interior[id]) b[id] = f[id];
  const ComplexField* lift = opts.boundary == BoundaryRule::dirichlet_lift
                                 ? opts.boundary_values
                                 : nullptr;
  if (lift) {
    auto wall = [&](int i, int j, int k) {
      return i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1;
    };
    for (int k = 1; k < n - 1; ++k)
      for (int j = 1; j < n - 1; ++j)
        for (int i = 1; i < n - 1; ++i) {
          Complex s = 0.0;
          if (wall(i - 1, j, k)) s += lift->at(i - 1, j, k);
          if (wall(i + 1, j, k)) s += lift->at(i + 1, j, k);
          if (wall(i, j - 1, k)) s += lift->at(i, j - 1, k);
          if (wall(i, j + 1, k)) s += lift->at(i, j + 1, k);
          if (wall(i, j, k - 1)) s += lift->at(i, j, k - 1);
          if (wall(i, j, k + 1)) s += lift->at(i, j, k + 1);
          if (s != 0.0) b.at(i, j, k) -= ih2 * s;
        }
  }

  // Matrix-free apply on interior unknowns (walls held at zero inside the
  // Krylov iteration; lifted values are already in b).
  auto apply = [&](const std::vector<Complex>& x, std::vector<Complex>& out) {
    for (int k = 1; k < n - 1; ++k)
      for (int j = 1; j < n - 1; ++j) {
        const std::size_t row = grid.idx(0, j, k);
        for (int i = 1; i < n - 1; ++i) {
          const std::size_t id = row + i;
          out[id] = diag[id] * x[id] +
                    ih2 * (x[id - 1] + x[id + 1] + x[id - n] + x[id + n] +
                           x[id - std::size_t(n) * n] + x[id + std::size_t(n) * n]);
        }
      }
  };

  HelmholtzSolution sol;
  sol.u = ComplexField(grid);

  double bnorm2 = 0.0;
  for (std::size_t id = 0; id < total; ++id)
    if (interior[id]) bnorm2 += std::norm(b[id]);
  const double bnorm = std::sqrt(bnorm2);
  if (bnorm == 0.0) {
    sol.stats.converged = true;  // zero data, zero solution
    if (lift) sol.u = *lift;
    return sol;
  }

  std::vector<Complex> x(total, 0.0), r(total, 0.0), z(total, 0.0), p(total, 0.0),
      Ap(total, 0.0);
  for (std::size_t id = 0; id < total; ++id)
    if (interior[id]) r[id] = b[id];

  auto precond = [&](const std::vector<Complex>& in, std::vector<Complex>& out) {
    for (std::size_t id = 0; id < total; ++id) out[id] = interior[id] ? in[id] / diag[id] : 0.0;
  };
  auto dot_unconj = [&](const std::vector<Complex>& a, const std::vector<Complex>& c) {
    Complex s = 0.0;
    for (std::size_t id = 0; id < total; ++id)
      if (interior[id]) s += a[id] * c[id];
    return s;
  };

  precond(r, z);
  p = z;
  Complex rz = dot_unconj(r, z);
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 40 * n;
  const double tiny = 1e-280;

  for (int it = 1; it <= max_iter; ++it) {
    apply(p, Ap);
    const Complex pAp = dot_unconj(p, Ap);
    if (std::abs(pAp) < tiny || std::abs(rz) < tiny) {
      sol.stats.breakdown = true;
      break;
    }
    const Complex alpha = rz / pAp;
    double rnorm2 = 0.0;
    for (std::size_t id = 0; id < total; ++id)
      if (interior[id]) {
        x[id] += alpha * p[id];
        r[id] -= alpha * Ap[id];
        rnorm2 += std::norm(r[id]);
      }
    sol.stats.iterations = it;
    sol.stats.rel_residual = std::sqrt(rnorm2) / bnorm;
    if (sol.stats.rel_residual <= opts.tol) {
      sol.stats.converged = true;
      break;
    }
    precond(r, z);
    const Complex rz_new = dot_unconj(r, z);
    const Complex beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t id = 0; id < total; ++id)
      if (interior[id]) p[id] = z[id] + beta * p[id];
  }

  for (std::size_t id = 0; id < total; ++id) sol.u[id] = x[id];
  if (lift) {
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          if (i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1)
            sol.u.at(i, j, k) = lift->at(i, j, k);
  }
  return sol;
}

inline HelmholtzSolution solve_helmholtz(const Potential& pot, double lambda, double epsilon,
                                         const RealField& f, const SolveOptions& opts = {}) {
  ComplexField fc(f.grid);
  for (std::size_t id = 0; id < f.size(); ++id) fc[id] = f[id];
  return solve_helmholtz(pot, lambda, epsilon, fc, opts);
}

/// Principal square root of lambda + i eps; Im k >= 0, so exp(ik r) decays.
inline Complex absorbed_wavenumber(double lambda, double epsilon) {
  return std::sqrt(Complex(lambda, epsilon));
}

/// Free-space reference for p = Q = 0: u = -(Phi * f) with
/// Phi(r) = exp(ikr) / (4 pi r), summed over the source support by midpoint
/// rule; the self-cell uses the exact kernel integral over the volume-matched
/// ball, int_{|y|<rho} Phi dy = exp(ik rho)(1/k^2 - i rho/k) - 1/k^2.
///
/// `epsilon` may be zero here (the limiting kernel), unlike the solver.
/// Evaluation is restricted to nodes where `member(i,j,k)` holds; other nodes
/// stay zero.  With `octahedral = true` the source must be invariant under the
/// 48-element cube symmetry group about the origin node (a radial source
/// centered at the origin is); targets are then memoized per symmetry class,
/// a ~48x saving.
template <class Member>
ComplexField greens_reference_if(const RealField& f, double lambda, double epsilon,
                                 Member&& member, bool octahedral = false) {
  const Grid3& grid = f.grid;
  if (!(lambda > 0.0)) throw std::invalid_argument("greens: lambda must be positive");
  if (epsilon < 0.0) throw std::invalid_argument("greens: absorption must be non-negative");
  const Complex k = absorbed_wavenumber(lambda, epsilon);
  const double h3 = grid.h * grid.h * grid.h;
  const double rho = std::cbrt(3.0 * h3 / (4.0 * M_PI));
  const Complex self = std::exp(Complex(0.0, 1.0) * k * rho) *
                           (1.0 / (k * k) - Complex(0.0, 1.0) * rho / k) -
                       1.0 / (k * k);

  struct Src {
    double x, y, z, w;
  };
  std::vector<Src> support;
  for (int k2 = 0; k2 < grid.n; ++k2)
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i)
        if (f.at(i, j, k2) != 0.0) {
          const auto pt = grid.point(i, j, k2);
          support.push_back({pt[0], pt[1], pt[2], f.at(i, j, k2)});
        }

  const Complex ik(0.0, 1.0);
  auto eval_at = [&](const std::array<double, 3>& pt) {
    Complex acc = 0.0;
    for (const auto& s : support) {
      const double dx = pt[0] - s.x, dy = pt[1] - s.y, dz = pt[2] - s.z;
      const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
      if (r < 0.5 * grid.h) {
        acc += s.w * self;  // volume-matched self cell replaces the h^3 weight
      } else {
        acc += s.w * h3 * std::exp(ik * k * r) / (4.0 * M_PI * r);
      }
    }
    return -acc;
  };

  ComplexField u(grid);
  std::unordered_map<std::uint64_t, Complex> memo;
  const int c = grid.center();
  for (int kk = 0; kk < grid.n; ++kk)
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i) {
        if (!member(i, j, kk)) continue;
        if (!octahedral) {
          u.at(i, j, kk) = eval_at(grid.point(i, j, kk));
          continue;
        }
        int a = std::abs(i - c), b = std::abs(j - c), d = std::abs(kk - c);
        if (a > b) std::swap(a, b);
        if (b > d) std::swap(b, d);
        if (a > b) std::swap(a, b);
        const std::uint64_t key =
            (std::uint64_t(a) << 42) | (std::uint64_t(b) << 21) | std::uint64_t(d);
        auto it = memo.find(key);
        if (it == memo.end())
          it = memo.emplace(key, eval_at({a * grid.h, b * grid.h, d * grid.h})).first;
        u.at(i, j, kk) = it->second;
      }
  return u;
}

inline ComplexField greens_reference(const RealField& f, double lambda, double epsilon,
                                     bool octahedral = false) {
  return greens_reference_if(f, lambda, epsilon, [](int, int, int) { return true; },
                             octahedral);
}

/// Green's values on the six walls only (interior zero): the oracle data for
/// BoundaryRule::dirichlet_lift.
inline ComplexField greens_boundary(const RealField& f, double lambda, double epsilon,
                                    bool octahedral = false) {
  const int n = f.grid.n;
  return greens_reference_if(
      f, lambda, epsilon,
      [n](int i, int j, int k) {
        return i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1;
      },
      octahedral);
}

}  // namespace eiklab
