#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace eiklab {

using Complex = std::complex<double>;

/// Uniform node-centered cube grid on [-R, R]^3 with an odd node count per
/// axis, so the origin falls on a node.  Node i has coordinate (i - c) * h
/// with c = (n - 1) / 2; region membership everywhere in the library is
/// decided by the node (cell center) coordinate.
struct Grid3 {
  int n = 0;     // nodes per axis, odd
  double h = 0.0;

  Grid3() = default;
  Grid3(int n_, double h_) : n(n_), h(h_) {
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("Grid3: node count must be odd and >= 3");
    if (!(h > 0.0)) throw std::invalid_argument("Grid3: spacing must be positive");
  }

  /// Grid covering [-half_extent, half_extent] with `cells` cells per axis
  /// (cells must be even so the origin is a node).
  static Grid3 cube(double half_extent, int cells) {
    if (cells < 2 || cells % 2 != 0) throw std::invalid_argument("Grid3::cube: cell count must be even and >= 2");
    return Grid3(cells + 1, 2.0 * half_extent / cells);
  }

  int center() const { return (n - 1) / 2; }
  double half_extent() const { return center() * h; }
  std::size_t size() const { return std::size_t(n) * n * n; }

  double coord(int i) const { return (i - center()) * h; }
  std::size_t idx(int i, int j, int k) const {
    return (std::size_t(k) * n + j) * n + i;
  }
  std::array<double, 3> point(int i, int j, int k) const {
    return {coord(i), coord(j), coord(k)};
  }
  double radius(int i, int j, int k) const {
    const double x = coord(i), y = coord(j), z = coord(k);
    return std::sqrt(x * x + y * y + z * z);
  }
  bool interior(int i, int j, int k) const {
    return i > 0 && j > 0 && k > 0 && i < n - 1 && j < n - 1 && k < n - 1;
  }
  bool same_as(const Grid3& o) const { return n == o.n && h == o.h; }
};

template <class T>
struct GridField {
  Grid3 grid;
  std::vector<T> v;

  GridField() = default;
  explicit GridField(const Grid3& g, T fill = T{}) : grid(g), v(g.size(), fill) {}

  T& at(int i, int j, int k) { return v[grid.idx(i, j, k)]; }
  const T& at(int i, int j, int k) const { return v[grid.idx(i, j, k)]; }
  T& operator[](std::size_t id) { return v[id]; }
  const T& operator[](std::size_t id) const { return v[id]; }
  std::size_t size() const { return v.size(); }
};

using RealField = GridField<double>;
using ComplexField = GridField<Complex>;

namespace detail {

// Centered first difference along one axis; second-order one-sided at the
// walls, so the gradient is exact on quadratics everywhere.
template <class T>
inline T diff1(const GridField<T>& f, int i, int j, int k, int axis) {
  const int n = f.grid.n;
  const double inv2h = 1.0 / (2.0 * f.grid.h);
  auto shift = [&](int d) {
    int a = i, b = j, c = k;
    (axis == 0 ? a : axis == 1 ? b : c) += d;
    return f.at(a, b, c);
  };
  const int p = (axis == 0 ? i : axis == 1 ? j : k);
  if (p == 0) return (-3.0 * f.at(i, j, k) + 4.0 * shift(1) - shift(2)) * inv2h;
  if (p == n - 1) return (3.0 * f.at(i, j, k) - 4.0 * shift(-1) + shift(-2)) * inv2h;
  return (shift(1) - shift(-1)) * inv2h;
}

}  // namespace detail

/// Centered-difference gradient (one-sided on the walls).
template <class T>
std::array<GridField<T>, 3> gradient(const GridField<T>& f) {
  std::array<GridField<T>, 3> g{GridField<T>(f.grid), GridField<T>(f.grid), GridField<T>(f.grid)};
  const int n = f.grid.n;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < 3; ++a)
          g[a].at(i, j, k) = detail::diff1(f, i, j, k, a);
  return g;
}

/// Midpoint-rule volume integral of `f * weight(i,j,k)` over nodes where
/// `member(i,j,k)` holds.  All quadrature in the library is this rule.
template <class T, class Member, class Weight>
T integrate_if(const GridField<T>& f, Member&& member, Weight&& weight) {
  const int n = f.grid.n;
  const double h3 = f.grid.h * f.grid.h * f.grid.h;
  T acc{};
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (member(i, j, k)) acc += f.at(i, j, k) * weight(i, j, k);
  return acc * h3;
}

/// Midpoint-rule volume integral of `integrand(i,j,k)` over nodes where
/// `member(i,j,k)` holds; the integrand's return type decides the accumulator.
template <class Member, class Integrand>
auto integrate_region(const Grid3& grid, Member&& member, Integrand&& integrand) {
  using T = decltype(integrand(0, 0, 0));
  const int n = grid.n;
  const double h3 = grid.h * grid.h * grid.h;
  T acc{};
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (member(i, j, k)) acc += integrand(i, j, k);
  return acc * h3;
}

}  // namespace eiklab
