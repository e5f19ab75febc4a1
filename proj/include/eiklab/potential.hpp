#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "eiklab/grid.hpp"

namespace eiklab {

/// Declarative description of an electric potential V = p + Q.
///
/// Built-in families (all radial, globally smooth):
///   "zero"        p = 0, Q = 0
///   "constant"    p = mu, Q = 0
///   "long_range"  p(x) = mu * (1 + |x|^2)^(-(2+delta)/2), Q = 0
///   "short_range" p = 0, Q(x) = nu * (1 + |x|^2)^(-(3+delta)/2)
///   "long_short"  long_range p plus short_range Q
///   "tabulated"   p interpolated from radial samples (table_r, table_p), Q = 0
struct PotentialSpec {
  std::string family = "zero";
  double mu = 0.0;      // long-range amplitude
  double nu = 0.0;      // short-range amplitude
  double delta = 0.5;   // decay margin, must be > 0
  int dim = 3;          // must be >= 3
  double bound_constant = 0.0;  // optional C in the decay bounds; 0 = derive from amplitudes
  std::vector<double> table_r, table_p;
};

class Potential {
 public:
  explicit Potential(const PotentialSpec& spec) : spec_(spec) {
    if (spec.dim < 3) throw std::invalid_argument("potential: dimension must be >= 3");
    if (!(spec.delta > 0.0)) throw std::invalid_argument("potential: delta must be positive");
    if (spec.family == "zero") fam_ = Fam::zero;
    else if (spec.family == "constant") fam_ = Fam::constant;
    else if (spec.family == "long_range") fam_ = Fam::long_range;
    else if (spec.family == "short_range") fam_ = Fam::short_range;
    else if (spec.family == "long_short") fam_ = Fam::long_short;
    else if (spec.family == "tabulated") fam_ = Fam::tabulated;
    else throw std::invalid_argument("potential: unknown family id '" + spec.family + "'");
    if (fam_ == Fam::tabulated) init_table();
  }

  const PotentialSpec& spec() const { return spec_; }
  bool is_radial() const { return true; }  // every built-in family is radial
  double p_infinity() const { return fam_ == Fam::constant ? spec_.mu : 0.0; }

  // Radial profile of the long-range part and its first three derivatives.
  double p_of_r(double r) const;
  double dp_of_r(double r) const;
  double d2p_of_r(double r) const;
  double d3p_of_r(double r) const;
  double q_of_r(double r) const;

  double p(const std::array<double, 3>& x) const { return p_of_r(norm(x)); }
  double q(const std::array<double, 3>& x) const { return q_of_r(norm(x)); }
  std::array<double, 3> grad_p(const std::array<double, 3>& x) const {
    const double r = norm(x);
    if (r == 0.0) return {0.0, 0.0, 0.0};
    const double s = dp_of_r(r) / r;
    return {s * x[0], s * x[1], s * x[2]};
  }

  /// Supremum-scale constant for the decay bounds: explicit bound_constant if
  /// given, otherwise the family amplitude.
  double decay_constant() const {
    if (spec_.bound_constant > 0.0) return spec_.bound_constant;
    return std::max({std::abs(spec_.mu), std::abs(spec_.nu), 1e-300});
  }

 private:
  enum class Fam { zero, constant, long_range, short_range, long_short, tabulated };

  static double norm(const std::array<double, 3>& x) {
    return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  }

  void init_table() {
    const auto& r = spec_.table_r;
    const auto& p = spec_.table_p;
    if (r.size() < 4 || r.size() != p.size())
      throw std::invalid_argument("potential: tabulated family needs >= 4 matching samples");
    if (r.front() != 0.0) throw std::invalid_argument("potential: table must start at r = 0");
    for (std::size_t i = 1; i < r.size(); ++i)
      if (!(r[i] > r[i - 1])) throw std::invalid_argument("potential: table radii must increase");
    slopes_.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i == 0) slopes_[i] = (p[1] - p[0]) / (r[1] - r[0]);
      else if (i + 1 == r.size()) slopes_[i] = (p[i] - p[i - 1]) / (r[i] - r[i - 1]);
      else slopes_[i] = (p[i + 1] - p[i - 1]) / (r[i + 1] - r[i - 1]);
    }
  }

  double table_eval(double r) const {
    const auto& rs = spec_.table_r;
    const auto& ps = spec_.table_p;
    if (r >= rs.back()) {  // power-law continuation with the declared delta
      const double q = std::pow(rs.back() / r, 2.0 + spec_.delta);
      return ps.back() * q;
    }
    auto it = std::upper_bound(rs.begin(), rs.end(), r);
    const std::size_t i = std::max<std::size_t>(1, it - rs.begin()) - 1;
    const double w = rs[i + 1] - rs[i], t = (r - rs[i]) / w;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * ps[i] + (t3 - 2 * t2 + t) * w * slopes_[i] +
           (-2 * t3 + 3 * t2) * ps[i + 1] + (t3 - t2) * w * slopes_[i + 1];
  }

  double table_deriv(double r, int order) const {
    // Interpolant derivatives by central differences on the table scale.
    const double step = 0.25 * (spec_.table_r[1] - spec_.table_r[0]);
    if (order == 1) return (table_eval(r + step) - table_eval(r - std::min(step, r))) /
                           (step + std::min(step, r));
    if (order == 2) return (table_deriv(r + step, 1) - table_deriv(r, 1)) / step;
    return (table_deriv(r + step, 2) - table_deriv(r, 2)) / step;
  }

  PotentialSpec spec_;
  Fam fam_;
  std::vector<double> slopes_;
};

inline double Potential::p_of_r(double r) const {
  switch (fam_) {
    case Fam::zero: case Fam::short_range: return 0.0;
    case Fam::constant: return spec_.mu;
    case Fam::tabulated: return table_eval(r);
    default: {
      const double a = 0.5 * (2.0 + spec_.delta);
      return spec_.mu * std::pow(1.0 + r * r, -a);
    }
  }
}

inline double Potential::dp_of_r(double r) const {
  switch (fam_) {
    case Fam::zero: case Fam::short_range: case Fam::constant: return 0.0;
    case Fam::tabulated: return table_deriv(r, 1);
    default: {
      const double a = 0.5 * (2.0 + spec_.delta), w = 1.0 + r * r;
      return -2.0 * a * spec_.mu * r * std::pow(w, -a - 1.0);
    }
  }
}

inline double Potential::d2p_of_r(double r) const {
  switch (fam_) {
    case Fam::zero: case Fam::short_range: case Fam::constant: return 0.0;
    case Fam::tabulated: return table_deriv(r, 2);
    default: {
      const double a = 0.5 * (2.0 + spec_.delta), w = 1.0 + r * r;
      return -2.0 * a * spec_.mu *
             (std::pow(w, -a - 1.0) - 2.0 * (a + 1.0) * r * r * std::pow(w, -a - 2.0));
    }
  }
}

inline double Potential::d3p_of_r(double r) const {
  switch (fam_) {
    case Fam::zero: case Fam::short_range: case Fam::constant: return 0.0;
    case Fam::tabulated: return table_deriv(r, 3);
    default: {
      const double a = 0.5 * (2.0 + spec_.delta), w = 1.0 + r * r;
      return -2.0 * a * (a + 1.0) * spec_.mu * r *
             (-6.0 * std::pow(w, -a - 2.0) + 4.0 * (a + 2.0) * r * r * std::pow(w, -a - 3.0));
    }
  }
}

inline double Potential::q_of_r(double r) const {
  if (fam_ != Fam::short_range && fam_ != Fam::long_short) return 0.0;
  const double b = 0.5 * (3.0 + spec_.delta);
  return spec_.nu * std::pow(1.0 + r * r, -b);
}

inline Potential make_potential(const PotentialSpec& spec) { return Potential(spec); }

/// One measured row of the decay audit: sup over sampled directions of
/// |d^beta p| * r^(2+k+delta) at radius r for derivative order k = |beta|
/// (for Q the weight is r^(3+delta) and k = 0).
struct DecayReport {
  struct Row {
    int order = 0;
    double radius = 0.0;
    double value = 0.0;
  };
  std::vector<Row> p_rows;
  std::vector<Row> q_rows;
  bool violation = false;      // weighted sup grows with r instead of staying bounded
  double worst_trend = 0.0;    // max log-log slope over the outer radii
};

namespace detail {

inline const std::vector<std::array<double, 3>>& sample_directions() {
  static const std::vector<std::array<double, 3>> dirs = [] {
    std::vector<std::array<double, 3>> d;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c) {
          if (!a && !b && !c) continue;
          const double n = std::sqrt(double(a * a + b * b + c * c));
          d.push_back({a / n, b / n, c / n});
        }
    // Fixed quasi-random extras so the audit is not blind between lattice rays.
    double u = 0.5, v = 0.25;
    for (int i = 0; i < 24; ++i) {
      u = std::fmod(u + 0.6180339887498949, 1.0);
      v = std::fmod(v + 0.7548776662466927, 1.0);
      const double z = 2.0 * u - 1.0, t = 2.0 * M_PI * v, s = std::sqrt(std::max(0.0, 1.0 - z * z));
      d.push_back({s * std::cos(t), s * std::sin(t), z});
    }
    return d;
  }();
  return dirs;
}

// Nested central differences for a multi-index derivative of order <= 3.
inline double partial_p(const Potential& pot, std::array<double, 3> x,
                        std::array<int, 3> beta, double step) {
  for (int a = 0; a < 3; ++a) {
    if (beta[a] > 0) {
      auto bm = beta;
      bm[a] -= 1;
      auto xp = x, xm = x;
      xp[a] += step;
      xm[a] -= step;
      return (partial_p(pot, xp, bm, step) - partial_p(pot, xm, bm, step)) / (2.0 * step);
    }
  }
  return pot.p(x);
}

}  // namespace detail

/// Audits the declared decay: reports the weighted sups and flags a violation
/// when they keep growing with radius (log-log trend above 0.15 over the
/// outer half of the sampled radii, i.e. the value is not levelling off).
inline DecayReport validate_decay(const Potential& pot, const std::vector<int>& orders,
                                  const std::vector<double>& radii) {
  for (int k : orders)
    if (k < 0 || k > 3) throw std::invalid_argument("validate_decay: derivative orders must be in [0, 3]");
  for (double r : radii)
    if (!(r > 0.0)) throw std::invalid_argument("validate_decay: radii must be positive");
  const double delta = pot.spec().delta;
  DecayReport rep;
  std::vector<std::array<int, 3>> multis[4];
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      for (int k = j; k < 3; ++k) {
        std::array<int, 3> b{0, 0, 0};
        ++b[i]; ++b[j]; ++b[k];
        multis[3].push_back(b);
      }
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      std::array<int, 3> b{0, 0, 0};
      ++b[i]; ++b[j];
      multis[2].push_back(b);
    }
  for (int i = 0; i < 3; ++i) {
    std::array<int, 3> b{0, 0, 0};
    ++b[i];
    multis[1].push_back(b);
  }
  multis[0].push_back({0, 0, 0});

  auto radii_sorted = radii;
  std::sort(radii_sorted.begin(), radii_sorted.end());

  for (int k : orders) {
    for (double r : radii_sorted) {
      const double step = 0.05 * std::max(1.0, r);
      double sup = 0.0;
      for (const auto& dir : detail::sample_directions()) {
        const std::array<double, 3> x{r * dir[0], r * dir[1], r * dir[2]};
        for (const auto& beta : multis[k])
          sup = std::max(sup, std::abs(detail::partial_p(pot, x, beta, step)));
      }
      rep.p_rows.push_back({k, r, sup * std::pow(r, 2.0 + k + delta)});
    }
  }
  for (double r : radii_sorted) {
    double sup = 0.0;
    for (const auto& dir : detail::sample_directions())
      sup = std::max(sup, std::abs(pot.q({r * dir[0], r * dir[1], r * dir[2]})));
    rep.q_rows.push_back({0, r, sup * std::pow(r, 3.0 + delta)});
  }

  // Trend over the outer half of the radii, per order.
  auto trend = [&](const std::vector<DecayReport::Row>& rows, int order) {
    std::vector<double> lr, lv;
    for (const auto& row : rows)
      if (row.order == order && row.value > 0.0) {
        lr.push_back(std::log(row.radius));
        lv.push_back(std::log(row.value));
      }
    if (lr.size() < 3) return 0.0;
    const std::size_t i0 = lr.size() / 2 - 1;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = i0; i < lr.size(); ++i, ++m) {
      sx += lr[i]; sy += lv[i]; sxx += lr[i] * lr[i]; sxy += lr[i] * lv[i];
    }
    const double den = m * sxx - sx * sx;
    return den > 0 ? (m * sxy - sx * sy) / den : 0.0;
  };
  for (int k : orders) rep.worst_trend = std::max(rep.worst_trend, trend(rep.p_rows, k));
  rep.worst_trend = std::max(rep.worst_trend, trend(rep.q_rows, 0));
  rep.violation = rep.worst_trend > 0.15;
  return rep;
}

/// Compactly supported bump source: a Gaussian of scale `radius` hard-cut at
/// 4.5 * radius (the jump there is ~1.6e-9 of the peak, far below every
/// tolerance in the suite).
struct BumpSource {
  double amplitude = 1.0;
  double radius = 0.5;
  std::array<double, 3> center{0.0, 0.0, 0.0};

  double cutoff() const { return 4.5 * radius; }
  double operator()(const std::array<double, 3>& x) const {
    const double dx = x[0] - center[0], dy = x[1] - center[1], dz = x[2] - center[2];
    const double r2 = dx * dx + dy * dy + dz * dz, c = cutoff();
    if (r2 > c * c) return 0.0;
    return amplitude * std::exp(-r2 / (radius * radius));
  }
};

inline RealField sample_source(const BumpSource& s, const Grid3& g) {
  RealField f(g);
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i)
        f.at(i, j, k) = s(g.point(i, j, k));
  return f;
}

}  // namespace eiklab
