#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "eiklab/norms.hpp"
#include "eiklab/potential.hpp"

namespace eiklab {

/// Weight function for the integral identities.  Two kinds:
///   constant  a radial C^2 bump phi(|x|): amplitude on [0, plateau], quintic
///             roll-off to zero at cutoff.
///   k_radial  psi given through psi'(K): K^2 below the switch radius r1,
///             r1*K above, continuous at r1.  psi'' is its derivative, taken
///             one-sided from below at the kink.  An optional smoothing width
///             replaces the psi'' jump on [r1-w, r1+w] by a linear ramp (then
///             psi'(K) = r1*K - w^2 beyond), and an optional outer window
///             rolls psi' to zero on [window_start, window_end] so that every
///             integration-by-parts boundary term dies inside the domain.
/// psi'/K is computed branch-wise (it is exactly K below the kink), never as
/// a 0/0 quotient.
struct Multiplier {
  enum class Kind { constant, k_radial };
  Kind kind = Kind::k_radial;

  double r1 = 0.0;
  double smooth_width = 0.0;
  double window_start = std::numeric_limits<double>::infinity();
  double window_end = std::numeric_limits<double>::infinity();

  double plateau = 0.0;
  double cutoff = 0.0;
  double amplitude = 1.0;

  static Multiplier k_radial(double r1, double smooth_width = 0.0) {
    if (!(r1 > 0.0)) throw std::invalid_argument("multiplier: switch radius must be positive");
    if (smooth_width < 0.0 || smooth_width >= r1)
      throw std::invalid_argument("multiplier: smoothing width must lie in [0, r1)");
    Multiplier m;
    m.kind = Kind::k_radial;
    m.r1 = r1;
    m.smooth_width = smooth_width;
    return m;
  }

  Multiplier windowed(double start, double end) const {
    if (kind != Kind::k_radial)
      throw std::invalid_argument("multiplier: only the K-radial kind takes a window");
    if (!(start > 0.0) || !(end > start))
      throw std::invalid_argument("multiplier: window must satisfy 0 < start < end");
    Multiplier m = *this;
    m.window_start = start;
    m.window_end = end;
    return m;
  }

  static Multiplier bump(double plateau, double cutoff, double amplitude = 1.0) {
    if (!(plateau > 0.0) || !(cutoff > plateau))
      throw std::invalid_argument("multiplier: bump needs 0 < plateau < cutoff");
    Multiplier m;
    m.kind = Kind::constant;
    m.plateau = plateau;
    m.cutoff = cutoff;
    m.amplitude = amplitude;
    return m;
  }

  // C^2 quintic step on [0,1], clamped outside.
  static double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
  }
  static double d_smoothstep(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return 30.0 * t * t * (1.0 + t * (-2.0 + t));
  }

  double psi_prime(double K) const { return base_prime(K) * roll(K); }
  double psi_pp(double K) const { return base_pp(K) * roll(K) + base_prime(K) * d_roll(K); }
  double psi_prime_over_k(double K) const { return base_over_k(K) * roll(K); }

  double phi(double r) const {
    if (r <= plateau) return amplitude;
    if (r >= cutoff) return 0.0;
    return amplitude * (1.0 - smoothstep((r - plateau) / (cutoff - plateau)));
  }
  double dphi(double r) const {
    if (r <= plateau || r >= cutoff) return 0.0;
    return -amplitude * d_smoothstep((r - plateau) / (cutoff - plateau)) / (cutoff - plateau);
  }

  bool interface_node(double K, double h) const {
    return kind == Kind::k_radial && smooth_width == 0.0 && std::abs(K - r1) <= h;
  }

 private:
  double base_prime(double K) const {
    const double w = smooth_width;
    if (K <= r1 - w) return K * K;
    if (w > 0.0 && K < r1 + w) {
      const double a = r1 - w, t = K - a;
      return a * a + 2.0 * a * t + (r1 - 2.0 * a) * t * t / (4.0 * w);
    }
    return r1 * K - w * w;
  }
  double base_pp(double K) const {
    const double w = smooth_width;
    if (K <= r1 - w) return 2.0 * K;
    if (w > 0.0 && K < r1 + w) {
      const double a = r1 - w;
      return 2.0 * a + (r1 - 2.0 * a) * (K - a) / (2.0 * w);
    }
    return r1;
  }
  double base_over_k(double K) const {
    const double w = smooth_width;
    if (K <= r1 - w) return K;
    return base_prime(K) / K;  // K >= r1 - w > 0 here
  }
  double roll(double K) const {
    if (!(window_end < std::numeric_limits<double>::infinity())) return 1.0;
    return 1.0 - smoothstep((K - window_start) / (window_end - window_start));
  }
  double d_roll(double K) const {
    if (!(window_end < std::numeric_limits<double>::infinity())) return 0.0;
    return -d_smoothstep((K - window_start) / (window_end - window_start)) /
           (window_end - window_start);
  }
};

namespace detail {

// The weight must vanish on the wall shell the valid() margin excludes;
// otherwise the identity's discarded boundary terms are not actually zero.
template <class Weight>
void require_window_clear(const EikonalField& field, Weight&& weight, const char* what) {
  const int n = field.grid.n;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const bool wall = i < 2 || j < 2 || k < 2 || i > n - 3 || j > n - 3 || k > n - 3;
        if (!wall) continue;
        if (weight(i, j, k) != 0.0) throw std::invalid_argument(what);
      }
}

inline double max_abs(std::initializer_list<double> xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Residuals of the two constant-multiplier identities
///   int phi lambda(1+p/lambda)|u|^2 - int phi |grad u|^2 + int phi Q |u|^2
///     - Re int grad phi . grad u conj(u) = Re int phi f conj(u)
///   eps int phi |u|^2 - Im int grad phi . grad u conj(u) = Im int phi f conj(u)
/// each normalized by its largest constituent term.
struct ConstantMultiplierReport {
  double real_residual = 0.0;
  double imag_residual = 0.0;
  std::array<double, 5> real_terms{};  // weighted L2, -gradient, Q, -transport, -source
  std::array<double, 3> imag_terms{};  // eps mass, -transport, -source
  double max_real_term = 0.0;
  double max_imag_term = 0.0;
};

inline ConstantMultiplierReport constant_multiplier_residuals(const ComplexField& u, const ComplexField& f,
                                     const Multiplier& phi, const Potential& pot,
                                     double lambda, double epsilon,
                                     const EikonalField& field) {
  if (phi.kind != Multiplier::Kind::constant)
    throw std::invalid_argument("constant-multiplier identity: weight must be the bump kind");
  if (!u.grid.same_as(f.grid) || !u.grid.same_as(field.grid))
    throw std::invalid_argument("constant-multiplier identity: grids disagree");
  const Grid3& grid = u.grid;
  detail::require_window_clear(
      field, [&](int i, int j, int k) { return phi.phi(grid.radius(i, j, k)); },
      "constant-multiplier identity: weight support touches the wall layer");

  double a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, b1 = 0, b2 = 0, b3 = 0;
  const int n = grid.n;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (!field.valid(i, j, k)) continue;
        const double r = grid.radius(i, j, k);
        const double w = phi.phi(r);
        const double dw = phi.dphi(r);
        if (w == 0.0 && dw == 0.0) continue;
        const Complex uv = u.at(i, j, k), fv = f.at(i, j, k);
        const double u2 = std::norm(uv);
        const Complex du[3] = {detail::diff1(u, i, j, k, 0), detail::diff1(u, i, j, k, 1),
                               detail::diff1(u, i, j, k, 2)};
        const double du2 = std::norm(du[0]) + std::norm(du[1]) + std::norm(du[2]);
        const auto x = grid.point(i, j, k);
        Complex transport{};  // grad phi . grad u conj(u)
        if (dw != 0.0 && r > 0.0)
          transport = (dw / r) * (x[0] * du[0] + x[1] * du[1] + x[2] * du[2]) * std::conj(uv);
        const Complex fu = fv * std::conj(uv);
        a1 += w * lambda * field.gk2.at(i, j, k) * u2;
        a2 -= w * du2;
        a3 += w * pot.q_of_r(r) * u2;
        a4 -= transport.real();
        a5 -= w * fu.real();
        b1 += epsilon * w * u2;
        b2 -= transport.imag();
        b3 -= w * fu.imag();
      }
  const double h3 = grid.h * grid.h * grid.h;
  ConstantMultiplierReport rep;
  rep.real_terms = {a1 * h3, a2 * h3, a3 * h3, a4 * h3, a5 * h3};
  rep.imag_terms = {b1 * h3, b2 * h3, b3 * h3};
  rep.max_real_term = detail::max_abs({rep.real_terms[0], rep.real_terms[1], rep.real_terms[2],
                                       rep.real_terms[3], rep.real_terms[4]});
  rep.max_imag_term =
      detail::max_abs({rep.imag_terms[0], rep.imag_terms[1], rep.imag_terms[2]});
  double rsum = 0, isum = 0;
  for (double t : rep.real_terms) rsum += t;
  for (double t : rep.imag_terms) isum += t;
  rep.real_residual = rep.max_real_term > 0.0 ? std::abs(rsum) / rep.max_real_term : 0.0;
  rep.imag_residual = rep.max_imag_term > 0.0 ? std::abs(isum) / rep.max_imag_term : 0.0;
  return rep;
}

/// Residual of the K-radial multiplier identity: thirteen left-hand terms
/// (the squared radial flux against psi'', the tangential block, the geometry
/// gradients, the Q and grad p couplings, the F contractions, and the epsilon
/// block) against the four source terms.  Gradients of assembled K-radial
/// scalars are taken by the same centered differences as grad u, so the whole
/// check is a discrete integration-by-parts consistency statement; it
/// converges at second order for smooth data.  Coefficients are the
/// three-dimensional ones ((d-1)/2 = 1).
struct KeyIdentityReport {
  double residual = 0.0;
  std::array<double, 13> lhs_terms{};
  std::array<double, 4> rhs_terms{};
  double lhs_sum = 0.0, rhs_sum = 0.0;
  double max_term = 0.0;
  std::size_t nodes = 0;
  std::size_t interface_nodes = 0;  // kinked multiplier cells straddling r1
};

inline KeyIdentityReport key_identity_residual(const ComplexField& u, const ComplexField& f,
                                               const Multiplier& psi, const EikonalField& field,
                                               const Potential& pot, double lambda,
                                               double epsilon) {
  if (psi.kind != Multiplier::Kind::k_radial)
    throw std::invalid_argument("key identity: multiplier must be the K-radial kind");
  if (!u.grid.same_as(f.grid) || !u.grid.same_as(field.grid))
    throw std::invalid_argument("key identity: grids disagree");
  if (field.gauge != Gauge::raw)
    throw std::invalid_argument("key identity: field must carry the raw gauge");
  if (field.K.v.empty() || field.F[0].v.empty() || field.gk2.v.empty())
    throw std::invalid_argument("key identity: field tensors missing");
  if (!(lambda > 0.0)) throw std::invalid_argument("key identity: lambda must be positive");
  const Grid3& grid = u.grid;
  detail::require_window_clear(
      field, [&](int i, int j, int k) { return psi.psi_prime(field.K.at(i, j, k)); },
      "key identity: multiplier reaches the wall layer");

  const auto grad_u = gradient(u);
  const double rt = std::sqrt(lambda);
  const double eps_blk = epsilon / (2.0 * rt);

  // Nodal K-radial scalars whose centered gradients the identity consumes.
  RealField w_geom(grid), w_trace(grid), w_prime(grid);
  for (std::size_t id = 0; id < grid.size(); ++id) {
    const double K = field.K[id];
    const double pok = psi.psi_prime_over_k(K);
    w_geom[id] = pok * field.gk2[id];
    w_trace[id] = pok * field.traceF[id];
    w_prime[id] = psi.psi_prime(K);
  }
  const auto d_geom = gradient(w_geom);
  const auto d_trace = gradient(w_trace);
  const auto d_prime = gradient(w_prime);
  const auto d_gk2 = gradient(field.gk2);

  KeyIdentityReport rep;
  std::array<double, 13> T{};
  std::array<double, 4> S{};
  const int n = grid.n;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (!field.valid(i, j, k)) continue;
        const std::size_t id = grid.idx(i, j, k);
        const double K = field.K[id];
        const double pp = psi.psi_pp(K);
        const double pr = w_prime[id];
        const double pok = psi.psi_prime_over_k(K);
        const double gk2v = field.gk2[id];
        const double kx = field.gradK[0][id], ky = field.gradK[1][id], kz = field.gradK[2][id];
        const double mag = std::sqrt(kx * kx + ky * ky + kz * kz);
        if (mag < 1e-12) continue;  // degenerate direction, weightless in any sane field
        const Complex uv = u[id], fv = f[id];
        const Complex g0 = grad_u[0][id], g1 = grad_u[1][id], g2 = grad_u[2][id];
        const Complex rad = (kx * g0 + ky * g1 + kz * g2) / mag;
        const double r = grid.radius(i, j, k);
        const double Q = pot.q_of_r(r);
        const auto gp = pot.grad_p(grid.point(i, j, k));
        const double u2 = std::norm(uv);
        const Complex fu = fv * std::conj(uv);
        ++rep.nodes;
        if (psi.interface_node(K, grid.h)) ++rep.interface_nodes;

        T[0] += 0.5 * gk2v * pp * std::norm(rad - Complex(0.0, rt * mag) * uv);
        double tang2 = 0.0;
        tang2 += std::norm(g0 - (kx / mag) * rad);
        tang2 += std::norm(g1 - (ky / mag) * rad);
        tang2 += std::norm(g2 - (kz / mag) * rad);
        T[1] += (pok - 0.5 * pp) * gk2v * tang2;
        const Complex geom_dot = d_geom[0][id] * g0 + d_geom[1][id] * g1 + d_geom[2][id] * g2;
        T[2] += (geom_dot * std::conj(uv)).real();
        T[3] += -pok * gk2v * Q * u2;
        const Complex psigrad_du =
            pr * (kx * std::conj(g0) + ky * std::conj(g1) + kz * std::conj(g2));
        T[4] += -Q * (uv * psigrad_du).real();
        T[5] += -rt * ((d_gk2[0][id] * g0 + d_gk2[1][id] * g1 + d_gk2[2][id] * g2) * pr *
                       std::conj(uv))
                          .imag();
        T[6] += 0.5 * pr * (kx * gp[0] + ky * gp[1] + kz * gp[2]) * u2;
        const double fq = field.F[0][id] * std::norm(g0) + field.F[1][id] * std::norm(g1) +
                          field.F[2][id] * std::norm(g2) +
                          2.0 * field.F[3][id] * (g0 * std::conj(g1)).real() +
                          2.0 * field.F[4][id] * (g0 * std::conj(g2)).real() +
                          2.0 * field.F[5][id] * (g1 * std::conj(g2)).real();
        T[7] += pok * fq;
        T[8] += 0.5 * ((d_trace[0][id] * g0 + d_trace[1][id] * g1 + d_trace[2][id] * g2) *
                       std::conj(uv))
                          .real();
        T[9] += -0.5 * pok * field.traceF[id] * Q * u2;
        double flux2 = 0.0;
        flux2 += std::norm(g0 - Complex(0.0, rt * kx) * uv);
        flux2 += std::norm(g1 - Complex(0.0, rt * ky) * uv);
        flux2 += std::norm(g2 - Complex(0.0, rt * kz) * uv);
        T[10] += eps_blk * pr * flux2;
        T[11] += -eps_blk * pr * Q * u2;
        T[12] += eps_blk * ((d_prime[0][id] * g0 + d_prime[1][id] * g1 + d_prime[2][id] * g2) *
                            std::conj(uv))
                               .real();

        S[0] += -(fv * psigrad_du).real();
        S[1] += -0.5 * (fu.real()) * (2.0 * pok * gk2v + pok * field.traceF[id]);
        S[2] += rt * gk2v * pr * fu.imag();
        S[3] += -eps_blk * pr * fu.real();
      }

  const double h3 = grid.h * grid.h * grid.h;
  for (int t = 0; t < 13; ++t) {
    rep.lhs_terms[t] = T[t] * h3;
    rep.lhs_sum += rep.lhs_terms[t];
    rep.max_term = std::max(rep.max_term, std::abs(rep.lhs_terms[t]));
  }
  for (int s = 0; s < 4; ++s) {
    rep.rhs_terms[s] = S[s] * h3;
    rep.rhs_sum += rep.rhs_terms[s];
    rep.max_term = std::max(rep.max_term, std::abs(rep.rhs_terms[s]));
  }
  rep.residual =
      rep.max_term > 0.0 ? std::abs(rep.lhs_sum - rep.rhs_sum) / rep.max_term : 0.0;
  return rep;
}

/// Thin-shell scan over [R, 2R]: candidate radii in K, shells of width 2h.
/// Picks the candidate whose per-volume mean of |u|^2 is smallest (first on
/// ties); a mean-value argument guarantees one candidate's shell
/// integral is controlled by the sup-average norm.
struct SurfaceRadiusReport {
  double r1 = 0.0;
  std::vector<double> candidates;
  std::vector<double> means;             // sum |u|^2 / node count
  std::vector<double> shell_integrals;   // sum |u|^2 h^3 / (2h)
  std::vector<bool> admissible;
  double triple_sq = 0.0;                // |||u|||_R^2 for the comparison
};

inline SurfaceRadiusReport select_surface_radius(const ComplexField& u,
                                                 const EikonalField& field, double R,
                                                 int candidate_count = 9) {
  if (!u.grid.same_as(field.grid))
    throw std::invalid_argument("surface radius: field and grid disagree");
  if (!(R > 0.0)) throw std::invalid_argument("surface radius: R must be positive");
  if (candidate_count < 2) throw std::invalid_argument("surface radius: need at least two candidates");
  const Grid3& grid = u.grid;
  const double h = grid.h;

  SurfaceRadiusReport rep;
  double best = std::numeric_limits<double>::infinity();
  for (int c = 0; c < candidate_count; ++c) {
    const double rc = R + (R * c) / (candidate_count - 1);  // evenly spans [R, 2R]
    double sum = 0.0;
    std::size_t count = 0;
    bool ok = true;
    for (int k = 0; k < grid.n && ok; ++k)
      for (int j = 0; j < grid.n && ok; ++j)
        for (int i = 0; i < grid.n && ok; ++i) {
          if (std::abs(field.K.at(i, j, k) - rc) > h) continue;
          if (!field.valid(i, j, k)) {
            ok = false;  // shell leaves the trusted region
            break;
          }
          sum += std::norm(u.at(i, j, k));
          ++count;
        }
    ok = ok && count > 0;
    rep.candidates.push_back(rc);
    rep.admissible.push_back(ok);
    rep.means.push_back(ok ? sum / double(count) : 0.0);
    rep.shell_integrals.push_back(ok ? sum * h * h * h / (2.0 * h) : 0.0);
    if (ok && rep.means.back() < best) {
      best = rep.means.back();
      rep.r1 = rc;
    }
  }
  if (!(best < std::numeric_limits<double>::infinity()))
    throw std::domain_error("surface radius: no admissible shell in [R, 2R]");
  const double r0 = std::min(std::max(R, grid.h), grid.half_extent());
  const double t = triple_norm(u, r0);
  rep.triple_sq = t * t;
  return rep;
}

/// Radiation-bound ratio curve: LHS(R) from the radiation functional, RHS the
/// block norm of f at R0 = 1 squared plus the cubic-weight source integral.
struct RatioReport {
  std::vector<double> radii, lhs, ratio;
  double rhs = 0.0;
  double sup_ratio = 0.0;
  double lambda = 0.0;
  double epsilon = 0.0;          // metadata, filled by the caller
  std::string potential_id;      // metadata, filled by the caller
  double min_slowness_sq = 0.0;  // min of |grad K|^2 over the trusted region
  bool n_norm_power_of_two = false;
};

inline RatioReport theorem_ratio(const ComplexField& u, const ComplexField& f,
                                 const EikonalField& field, double lambda,
                                 const std::vector<double>& radii,
                                 const RadiationOptions& shell_opts = {}) {
  if (radii.empty()) throw std::invalid_argument("ratio curve: empty radius list");
  RatioReport rep;
  rep.lambda = lambda;
  const auto nf = n_norm_report(f, 1.0);
  rep.n_norm_power_of_two = nf.power_of_two;
  rep.rhs = nf.value * nf.value + weighted_source_norm(f, 3);
  double mins = std::numeric_limits<double>::infinity();
  for (int k = 0; k < field.grid.n; ++k)
    for (int j = 0; j < field.grid.n; ++j)
      for (int i = 0; i < field.grid.n; ++i)
        if (field.valid(i, j, k)) mins = std::min(mins, field.gk2.at(i, j, k));
  rep.min_slowness_sq = mins;
  for (double R : radii) {
    const double lhs = radiation_functional(u, field, lambda, R, shell_opts);
    rep.radii.push_back(R);
    rep.lhs.push_back(lhs);
    const double ratio = rep.rhs > 0.0 ? lhs / rep.rhs : 0.0;
    rep.ratio.push_back(ratio);
    rep.sup_ratio = std::max(rep.sup_ratio, ratio);
  }
  return rep;
}

/// Absorbed-problem energy ratio (lambda |||u|||_1^2 + |||grad u|||_1^2) over
/// (1+eps) N_1(f)^2.  Undefined when f vanishes; the report carries the flag.
struct AprioriReport {
  double ratio = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
  double triple_u = 0.0;
  double triple_grad = 0.0;
  double n1 = 0.0;
};

inline AprioriReport apriori_ratio(const ComplexField& u, const ComplexField& f, double lambda,
                                   double epsilon) {
  if (!u.grid.same_as(f.grid)) throw std::invalid_argument("energy ratio: grids disagree");
  if (!(lambda > 0.0)) throw std::invalid_argument("energy ratio: lambda must be positive");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("energy ratio: absorption must be nonnegative");
  AprioriReport rep;
  rep.n1 = n_norm(f, 1.0);
  rep.triple_u = triple_norm(u, 1.0);
  RealField mag(u.grid);
  for (int k = 0; k < u.grid.n; ++k)
    for (int j = 0; j < u.grid.n; ++j)
      for (int i = 0; i < u.grid.n; ++i) {
        double s = 0.0;
        for (int a = 0; a < 3; ++a) s += std::norm(detail::diff1(u, i, j, k, a));
        mag.at(i, j, k) = std::sqrt(s);
      }
  rep.triple_grad = triple_norm(mag, 1.0);
  if (rep.n1 == 0.0) return rep;
  rep.defined = true;
  rep.ratio = (lambda * rep.triple_u * rep.triple_u + rep.triple_grad * rep.triple_grad) /
              ((1.0 + epsilon) * rep.n1 * rep.n1);
  return rep;
}

}  // namespace eiklab
