#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "eiklab/eikonal_field.hpp"
#include "eiklab/grid.hpp"

namespace eiklab {

namespace detail {

inline double abs2(double x) { return x * x; }
inline double abs2(const Complex& z) { return std::norm(z); }

}  // namespace detail

/// Dyadic annulus bookkeeping for the block norm.  J is the index with
/// 2^{J-1} < R0 < 2^J; blocks are the ball {|x| <= R0}, the partial annulus
/// {R0 < |x| < 2^J} (index J-1, clipped below at R0), and the full annuli
/// {2^j <= |x| < 2^{j+1}} for j >= J.  Together they tile space with no gap,
/// which is what makes the duality inequality against the sup-average norm
/// hold block by block.  When R0 is exactly a power of two the defining
/// inequalities pin nothing down; we take J = log2(R0) (the clipped annulus
/// is then empty) and flag it.
struct DyadicDecomposition {
  double r0 = 0.0;
  int J = 0;
  bool power_of_two = false;

  static DyadicDecomposition make(double r0) {
    if (!(r0 > 0.0) || !std::isfinite(r0))
      throw std::invalid_argument("dyadic decomposition: R0 must be positive and finite");
    DyadicDecomposition d;
    d.r0 = r0;
    int e = 0;
    const double m = std::frexp(r0, &e);  // r0 = m * 2^e, m in [0.5, 1)
    d.power_of_two = (m == 0.5);
    d.J = d.power_of_two ? e - 1 : e;
    return d;
  }

  /// Block containing radius r: -1 for the ball, else the annulus index
  /// (half-open intervals, so shared dyadic boundaries count upward).
  int block_of(double r) const {
    if (r <= r0) return -1;
    return int(std::floor(std::log2(r)));
  }

  double weight(int j) const { return std::ldexp(1.0, j + 1); }
};

/// Sup-average norm report: the value, the radius attaining the sup, and the
/// whole sampled curve.
struct SupAverageReport {
  double value = 0.0;
  double arg_radius = 0.0;
  std::vector<double> radii;
  std::vector<double> values;
};

namespace detail {

// Sample radii for the sup over R: geometric grid (ratio 1.05) from r0 to the
// corner radius, all dyadic radii in range, r0 and the corner itself.  Dyadic
// radii are included so the block-norm duality inequality is exact on the
// samples; the corner radius closes the range (for the field extended by zero
// the average decays beyond it, so no sup hides there).
inline std::vector<double> sup_sample_radii(const Grid3& grid, double r0) {
  // Slightly above the corner radius so the corner nodes always land in the
  // last bucket despite rounding in the per-node radius.
  const double r_top = std::sqrt(3.0) * grid.half_extent() * (1.0 + 1e-12);
  std::vector<double> rs;
  for (double r = r0; r < r_top; r *= 1.05) rs.push_back(r);
  rs.push_back(r_top);
  for (int j = -40; j <= 40; ++j) {
    const double d = std::ldexp(1.0, j);
    if (d > r0 && d < r_top) rs.push_back(d);
  }
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
  return rs;
}

}  // namespace detail

/// Sup over R >= R0 of ((1/R) int_{|x|<=R} |u|^2)^{1/2}, midpoint quadrature,
/// R sampled per sup_sample_radii.  The field is implicitly extended by zero
/// outside the domain.
template <class T>
SupAverageReport triple_norm_report(const GridField<T>& u, double r0) {
  const Grid3& grid = u.grid;
  if (!(r0 >= grid.h))
    throw std::invalid_argument("sup-average norm: R0 must be at least the grid spacing");
  if (r0 > grid.half_extent())
    throw std::invalid_argument("sup-average norm: R0 exceeds the domain half-extent");

  SupAverageReport rep;
  rep.radii = detail::sup_sample_radii(grid, r0);
  const int m = int(rep.radii.size());

  // Bucket each node's |u|^2 h^3 into the smallest sample radius covering it,
  // then prefix-sum to get the cumulative ball integrals.
  std::vector<double> bucket(m, 0.0);
  const double h3 = grid.h * grid.h * grid.h;
  for (int k = 0; k < grid.n; ++k)
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i) {
        const double r = grid.radius(i, j, k);
        const auto it = std::lower_bound(rep.radii.begin(), rep.radii.end(), r);
        if (it == rep.radii.end()) continue;  // cannot happen: corner radius closes the list
        bucket[it - rep.radii.begin()] += detail::abs2(u.at(i, j, k)) * h3;
      }
  rep.values.resize(m);
  double cum = 0.0;
  for (int t = 0; t < m; ++t) {
    cum += bucket[t];
    rep.values[t] = std::sqrt(cum / rep.radii[t]);
    if (rep.values[t] > rep.value) {
      rep.value = rep.values[t];
      rep.arg_radius = rep.radii[t];
    }
  }
  if (rep.value == 0.0) rep.arg_radius = r0;
  return rep;
}

template <class T>
double triple_norm(const GridField<T>& u, double r0) {
  return triple_norm_report(u, r0).value;
}

/// Block norm report: the compact term, one term per dyadic annulus, and the
/// tie-break flag for power-of-two R0.
struct BlockNormReport {
  double value = 0.0;
  double compact_term = 0.0;
  int J = 0;
  bool power_of_two = false;
  std::vector<int> block_indices;
  std::vector<double> block_terms;
};

/// sum_j (2^{j+1} int_{C(j)} |f|^2)^{1/2} + (R0 int_{|x|<=R0} |f|^2)^{1/2}
/// over the gap-free dyadic blocks (annuli clipped at the domain boundary).
template <class T>
BlockNormReport n_norm_report(const GridField<T>& f, double r0) {
  const Grid3& grid = f.grid;
  if (!(r0 >= grid.h))
    throw std::invalid_argument("block norm: R0 must be at least the grid spacing");
  if (r0 > grid.half_extent())
    throw std::invalid_argument("block norm: R0 exceeds the domain half-extent");
  const auto dec = DyadicDecomposition::make(r0);

  const int j_top = dec.block_of(std::sqrt(3.0) * grid.half_extent() * (1.0 + 1e-12));
  const int j_lo = dec.J - 1;
  std::vector<double> sums(std::size_t(j_top - j_lo + 1), 0.0);
  double ball = 0.0;
  const double h3 = grid.h * grid.h * grid.h;
  for (int k = 0; k < grid.n; ++k)
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i) {
        const double a2 = detail::abs2(f.at(i, j, k)) * h3;
        const int b = dec.block_of(grid.radius(i, j, k));
        if (b < 0)
          ball += a2;
        else
          sums[std::size_t(b - j_lo)] += a2;
      }

  BlockNormReport rep;
  rep.J = dec.J;
  rep.power_of_two = dec.power_of_two;
  rep.compact_term = std::sqrt(r0 * ball);
  rep.value = rep.compact_term;
  for (int b = j_lo; b <= j_top; ++b) {
    const double s = sums[std::size_t(b - j_lo)];
    if (s == 0.0) continue;
    const double term = std::sqrt(dec.weight(b) * s);
    rep.block_indices.push_back(b);
    rep.block_terms.push_back(term);
    rep.value += term;
  }
  return rep;
}

template <class T>
double n_norm(const GridField<T>& f, double r0) {
  return n_norm_report(f, r0).value;
}

/// int |x|^power |f|^2 by midpoint quadrature; power 3 or 4 (the two weights
/// used by the radiation bound and its absorbed variant).
template <class T>
double weighted_source_norm(const GridField<T>& f, int power) {
  if (power != 3 && power != 4)
    throw std::invalid_argument("weighted source norm: power must be 3 or 4");
  const Grid3& grid = f.grid;
  return integrate_region(
      grid, [](int, int, int) { return true; },
      [&](int i, int j, int k) {
        const double r = grid.radius(i, j, k);
        double w = r * r * r;
        if (power == 4) w *= r;
        return w * detail::abs2(f.at(i, j, k));
      });
}

/// Gradient of u split along and across the eikonal rays: radial part
/// e.grad u with e = grad K/|grad K|, tangential part grad u - e (e.grad u).
/// |grad u|^2 = |radial|^2 + |tangential|^2 and grad K . tangential = 0 hold
/// pointwise to rounding at every node.
struct GradientSplit {
  ComplexField radial;
  std::array<ComplexField, 3> tangential;
  std::array<ComplexField, 3> grad;  // the unsplit centered-difference gradient
  double min_slowness = 0.0;         // min |grad K| encountered
};

inline GradientSplit gradient_split(const ComplexField& u, const EikonalField& field,
                                    double threshold = 1e-8) {
  if (!u.grid.same_as(field.grid))
    throw std::invalid_argument("gradient split: field and grid disagree");
  GradientSplit s;
  s.grad = gradient(u);
  s.radial = ComplexField(u.grid);
  for (auto& c : s.tangential) c = ComplexField(u.grid);
  s.min_slowness = std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < u.grid.size(); ++id) {
    const double kx = field.gradK[0][id], ky = field.gradK[1][id], kz = field.gradK[2][id];
    const double mag = std::sqrt(kx * kx + ky * ky + kz * kz);
    s.min_slowness = std::min(s.min_slowness, mag);
    if (mag < threshold)
      throw std::domain_error("gradient split: |grad K| below threshold");
    const Complex r = (kx * s.grad[0][id] + ky * s.grad[1][id] + kz * s.grad[2][id]) / mag;
    s.radial[id] = r;
    s.tangential[0][id] = s.grad[0][id] - (kx / mag) * r;
    s.tangential[1][id] = s.grad[1][id] - (ky / mag) * r;
    s.tangential[2][id] = s.grad[2][id] - (kz / mag) * r;
  }
  return s;
}

struct RadiationOptions {
  bool slowness_weight = false;  // multiply the integrand by |grad K|^2
  double k_cap = std::numeric_limits<double>::infinity();        // restrict to K <= k_cap
  double trust_radius = std::numeric_limits<double>::infinity(); // restrict to |x| <= trust_radius
};

/// R * int_{K >= R} |grad(e^{-i sqrt(lambda) K} u)|^2 over the trusted
/// interior (wall margin and origin core excluded via field.valid).  The
/// gradient acts on the demodulated field, so a pure outgoing phase gives
/// exactly zero.  Options restrict the shell (K <= k_cap, |x| <= trust_radius)
/// and switch on the |grad K|^2 weight of the absorbed-variant functional.
inline double radiation_functional(const ComplexField& u, const EikonalField& field,
                                   double lambda, double R,
                                   const RadiationOptions& opts = {}) {
  if (!u.grid.same_as(field.grid))
    throw std::invalid_argument("radiation functional: field and grid disagree");
  if (!(R >= 1.0)) throw std::invalid_argument("radiation functional: R must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("radiation functional: lambda must be positive");
  const Grid3& grid = u.grid;
  const double rt = std::sqrt(lambda);

  ComplexField v(grid);
  for (std::size_t id = 0; id < grid.size(); ++id)
    v[id] = std::polar(1.0, -rt * field.K[id]) * u[id];

  auto member = [&](int i, int j, int k) {
    if (!field.valid(i, j, k)) return false;
    const double K = field.K.at(i, j, k);
    if (K < R || K > opts.k_cap) return false;
    return grid.radius(i, j, k) <= opts.trust_radius;
  };
  std::size_t count = 0;
  const double total = integrate_region(grid, member, [&](int i, int j, int k) {
    ++count;
    double a2 = 0.0;
    for (int a = 0; a < 3; ++a) a2 += std::norm(detail::diff1(v, i, j, k, a));
    if (opts.slowness_weight) a2 *= field.gk2.at(i, j, k);
    return a2;
  });
  if (count == 0) throw std::domain_error("radiation functional: trusted shell is empty");
  return R * total;
}

/// int_{K <= R} |grad K|^2 K |e.grad u - i sqrt(lambda)|grad K| u
///                            + (1/K)|grad K| u|^2
/// with e = grad K/|grad K| (three dimensions, so (d-1)/2 = 1).  The origin
/// cell is dropped: the integrand is integrable there and the cell contributes
/// at second order, below the quadrature floor.
inline double interior_functional(const ComplexField& u, const EikonalField& field,
                                  double lambda, double R,
                                  double trust_radius = std::numeric_limits<double>::infinity()) {
  if (!u.grid.same_as(field.grid))
    throw std::invalid_argument("interior functional: field and grid disagree");
  if (!(R > 0.0)) throw std::invalid_argument("interior functional: R must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("interior functional: lambda must be positive");
  const Grid3& grid = u.grid;
  const double rt = std::sqrt(lambda);
  const double k_floor = 0.5 * grid.h;

  auto member = [&](int i, int j, int k) {
    if (!field.valid(i, j, k)) return false;
    const double K = field.K.at(i, j, k);
    if (K < k_floor || K > R) return false;
    return grid.radius(i, j, k) <= trust_radius;
  };
  std::size_t count = 0;
  const double total = integrate_region(grid, member, [&](int i, int j, int k) {
    ++count;
    const std::size_t id = grid.idx(i, j, k);
    const double kx = field.gradK[0][id], ky = field.gradK[1][id], kz = field.gradK[2][id];
    const double mag = std::sqrt(kx * kx + ky * ky + kz * kz);
    const double K = field.K[id];
    const Complex du[3] = {detail::diff1(u, i, j, k, 0), detail::diff1(u, i, j, k, 1),
                           detail::diff1(u, i, j, k, 2)};
    const Complex radial = (kx * du[0] + ky * du[1] + kz * du[2]) / mag;
    const Complex bracket = radial - Complex(0.0, rt * mag) * u[id] + (mag / K) * u[id];
    return mag * mag * K * std::norm(bracket);
  });
  if (count == 0) throw std::domain_error("interior functional: trusted region is empty");
  return total;
}

}  // namespace eiklab
