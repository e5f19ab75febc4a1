#pragma once

// Direct sparse factorization fallback for small systems; kept out of the core
// headers so Eigen is only a dependency of the targets that want it.

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "eiklab/helmholtz.hpp"

namespace eiklab {

/// Solves the same interior system as solve_helmholtz with Eigen's SparseLU.
/// Intended as an independent check on the iterative path; refuses interiors
/// of 40^3 unknowns or more.
inline HelmholtzSolution solve_helmholtz_direct(const Potential& pot, double lambda,
                                                double epsilon, const ComplexField& f,
                                                const SolveOptions& opts = {}) {
  const Grid3& grid = f.grid;
  if (!(lambda > 0.0)) throw std::invalid_argument("helmholtz: lambda must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("helmholtz: absorption must be positive");
  detail::check_resolution(lambda, grid, opts.min_points_per_wavelength);
  const int n = grid.n, m = n - 2;
  if (std::size_t(m) * m * m >= 40u * 40u * 40u)
    throw std::invalid_argument("helmholtz direct: interior too large for the dense fallback");
  const ComplexField* lift = nullptr;
  if (opts.boundary == BoundaryRule::dirichlet_lift) {
    if (!opts.boundary_values)
      throw std::invalid_argument("helmholtz: dirichlet_lift needs boundary values");
    if (!opts.boundary_values->grid.same_as(grid))
      throw std::invalid_argument("helmholtz: boundary values on a different grid");
    lift = opts.boundary_values;
  }

  const double ih2 = 1.0 / (grid.h * grid.h);
  auto unknown = [&](int i, int j, int k) {
    return (std::size_t(k - 1) * m + (j - 1)) * m + (i - 1);
  };

  using Triplet = Eigen::Triplet<std::complex<double>>;
  std::vector<Triplet> trips;
  trips.reserve(std::size_t(m) * m * m * 7);
  Eigen::VectorXcd rhs(std::size_t(m) * m * m);
  for (int k = 1; k < n - 1; ++k)
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) {
        const auto row = unknown(i, j, k);
        const double r = grid.radius(i, j, k);
        trips.emplace_back(row, row,
                           std::complex<double>(
                               lambda + pot.p_of_r(r) + pot.q_of_r(r) - 6.0 * ih2, epsilon));
        std::complex<double> b = f.at(i, j, k);
        const int di[6] = {-1, 1, 0, 0, 0, 0};
        const int dj[6] = {0, 0, -1, 1, 0, 0};
        const int dk[6] = {0, 0, 0, 0, -1, 1};
        for (int t = 0; t < 6; ++t) {
          const int ii = i + di[t], jj = j + dj[t], kk = k + dk[t];
          if (ii == 0 || jj == 0 || kk == 0 || ii == n - 1 || jj == n - 1 || kk == n - 1) {
            if (lift) b -= ih2 * lift->at(ii, jj, kk);
          } else {
            trips.emplace_back(row, unknown(ii, jj, kk), std::complex<double>(ih2, 0.0));
          }
        }
        rhs[row] = b;
      }

  Eigen::SparseMatrix<std::complex<double>> A(rhs.size(), rhs.size());
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<std::complex<double>>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("helmholtz direct: factorization failed");
  Eigen::VectorXcd xs = lu.solve(rhs);

  HelmholtzSolution sol;
  sol.u = ComplexField(grid);
  for (int k = 1; k < n - 1; ++k)
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) sol.u.at(i, j, k) = xs[unknown(i, j, k)];
  if (lift) {
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          if (i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1)
            sol.u.at(i, j, k) = lift->at(i, j, k);
  }
  sol.stats.converged = true;
  sol.stats.rel_residual = (A * xs - rhs).norm() / rhs.norm();
  return sol;
}

inline HelmholtzSolution solve_helmholtz_direct(const Potential& pot, double lambda,
                                                double epsilon, const RealField& f,
                                                const SolveOptions& opts = {}) {
  ComplexField fc(f.grid);
  for (std::size_t id = 0; id < f.size(); ++id) fc[id] = f[id];
  return solve_helmholtz_direct(pot, lambda, epsilon, fc, opts);
}

}  // namespace eiklab
