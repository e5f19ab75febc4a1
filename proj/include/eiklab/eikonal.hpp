#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "eiklab/grid.hpp"
#include "eiklab/potential.hpp"

namespace eiklab {

namespace detail {

// 5-point Gauss-Legendre rule on [-1, 1].
inline constexpr double kGL5X[5] = {0.0, -0.5384693101056831, 0.5384693101056831,
                                    -0.9061798459386640, 0.9061798459386640};
inline constexpr double kGL5W[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                    0.2369268850561891, 0.2369268850561891};

template <class F>
double gl5(F&& f, double lo, double hi) {
  const double c = 0.5 * (lo + hi), s = 0.5 * (hi - lo);
  double acc = 0.0;
  for (int i = 0; i < 5; ++i) acc += kGL5W[i] * f(c + s * kGL5X[i]);
  return acc * s;
}

}  // namespace detail

/// Radial eikonal phase for a radial potential: K(r) = int_0^r sqrt(1 + p(s)/lambda) ds,
/// so K(0) = 0 and K is strictly increasing.  `phase_shift` records
/// a = lim (K(r) - c_inf * r) with c_inf = sqrt(1 + p_inf/lambda); subtracting it
/// yields the gauge in which K - c_inf |x| vanishes at infinity (the gauge the
/// far-field decay of g = K/|x| is measured in).
class RadialProfile {
 public:
  RadialProfile(const Potential& pot, double lambda, double r_max, int cells = 4096)
      : pot_(pot), lambda_(lambda), r_max_(r_max) {
    if (!(lambda > 0.0)) throw std::invalid_argument("eikonal: lambda must be positive");
    if (!(r_max > 0.0) || cells < 16) throw std::invalid_argument("eikonal: bad radial range");
    const int n = cells + 1;
    r_.resize(n);
    k_.resize(n);
    const double dr = r_max / cells;
    double acc = 0.0, comp = 0.0;  // Kahan accumulation keeps K(r)=r exact to ~1e-13 for p=0
    r_[0] = 0.0;
    k_[0] = 0.0;
    min_s2_ = 1.0 + pot.p_of_r(0.0) / lambda;
    for (int i = 1; i < n; ++i) {
      r_[i] = i * dr;
      const double piece = detail::gl5([&](double s) { return slowness_checked(s); },
                                       r_[i - 1], r_[i]);
      const double y = piece - comp, t = acc + y;
      comp = (t - acc) - y;
      acc = t;
      k_[i] = acc;
    }
    if (!(min_s2_ > 0.0))
      throw std::domain_error("eikonal: slowness non-positive (1 + p/lambda <= 0 on the profile)");
    const double c_inf = std::sqrt(1.0 + pot.p_infinity() / lambda);
    // Tail of the phase shift via t = r_max / u on u in (0, 1].
    double tail = 0.0;
    const int m = 64;
    for (int i = 0; i < m; ++i)
      tail += detail::gl5(
          [&](double u) {
            const double t = r_max_ / u;
            return (slowness(t) - c_inf) * r_max_ / (u * u);
          },
          double(i) / m, double(i + 1) / m);
    phase_shift_ = (k_.back() - c_inf * r_max_) + tail;
  }

  double lambda() const { return lambda_; }
  double r_max() const { return r_max_; }
  double phase_shift() const { return phase_shift_; }
  double min_slowness_sq() const { return min_s2_; }

  double slowness(double r) const { return std::sqrt(1.0 + pot_.p_of_r(r) / lambda_); }

  /// K(r) by cubic Hermite interpolation with the analytic slope K' = slowness.
  double operator()(double r) const {
    if (r < 0.0) throw std::invalid_argument("eikonal: negative radius");
    if (r > r_max_ * (1.0 + 1e-12))
      throw std::invalid_argument("eikonal: radius beyond profile range");
    r = std::min(r, r_max_);
    const double dr = r_[1];
    const std::size_t i = std::min<std::size_t>(std::size_t(r / dr), r_.size() - 2);
    const double t = (r - r_[i]) / dr, t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * k_[i] + (t3 - 2 * t2 + t) * dr * slowness(r_[i]) +
           (-2 * t3 + 3 * t2) * k_[i + 1] + (t3 - t2) * dr * slowness(r_[i + 1]);
  }

  const Potential& potential() const { return pot_; }

 private:
  double slowness_checked(double r) {
    const double s2 = 1.0 + pot_.p_of_r(r) / lambda_;
    min_s2_ = std::min(min_s2_, s2);
    return std::sqrt(std::max(s2, 0.0));
  }

  Potential pot_;
  double lambda_, r_max_, phase_shift_ = 0.0, min_s2_ = 1.0;
  std::vector<double> r_, k_;
};

inline RadialProfile solve_eikonal_radial(const Potential& pot, double lambda, double r_max,
                                          int cells = 4096) {
  if (!pot.is_radial()) throw std::invalid_argument("eikonal: radial solver needs a radial potential");
  return RadialProfile(pot, lambda, r_max, cells);
}

struct EikonalGridSolution {
  RealField K;
  std::size_t seeded = 0;        // nodes frozen from the radial profile
  double seed_radius = 0.0;
  double min_slowness_sq = 0.0;
};

namespace detail {

// Indexed binary min-heap with decrease-key, keyed by an external value array.
class NodeHeap {
 public:
  explicit NodeHeap(std::size_t n, const std::vector<double>& key)
      : key_(key), pos_(n, -1) {}

  bool empty() const { return heap_.empty(); }
  bool contains(std::size_t id) const { return pos_[id] >= 0; }

  void push_or_update(std::size_t id) {
    if (pos_[id] < 0) {
      pos_[id] = int64_t(heap_.size());
      heap_.push_back(id);
    }
    sift_up(std::size_t(pos_[id]));
  }

  std::size_t pop_min() {
    const std::size_t top = heap_.front();
    pos_[top] = -1;
    if (heap_.size() > 1) {
      heap_.front() = heap_.back();
      pos_[heap_.front()] = 0;
    }
    heap_.pop_back();
    if (!heap_.empty()) sift_down(0);
    return top;
  }

 private:
  void sift_up(std::size_t i) {
    while (i > 0) {
      const std::size_t p = (i - 1) / 2;
      if (key_[heap_[p]] <= key_[heap_[i]]) break;
      swap_nodes(i, p);
      i = p;
    }
  }
  void sift_down(std::size_t i) {
    for (;;) {
      std::size_t c = 2 * i + 1;
      if (c >= heap_.size()) break;
      if (c + 1 < heap_.size() && key_[heap_[c + 1]] < key_[heap_[c]]) ++c;
      if (key_[heap_[i]] <= key_[heap_[c]]) break;
      swap_nodes(i, c);
      i = c;
    }
  }
  void swap_nodes(std::size_t a, std::size_t b) {
    std::swap(heap_[a], heap_[b]);
    pos_[heap_[a]] = int64_t(a);
    pos_[heap_[b]] = int64_t(b);
  }

  const std::vector<double>& key_;
  std::vector<std::size_t> heap_;
  std::vector<int64_t> pos_;
};

// Godunov upwind update from the frozen axis minima d[0..m): largest root of
// sum max(0, T - d_i)^2 = (h s)^2 over the directions actually used.
inline double godunov_update(double* d, int count, double hs) {
  std::sort(d, d + count);
  for (int m = count; m >= 1; --m) {
    double sd = 0.0, sd2 = 0.0;
    for (int i = 0; i < m; ++i) {
      sd += d[i];
      sd2 += d[i] * d[i];
    }
    const double disc = sd * sd - m * (sd2 - hs * hs);
    if (disc < 0.0) continue;
    const double t = (sd + std::sqrt(disc)) / m;
    if (t >= d[m - 1]) return t;
  }
  return d[0] + hs;
}

}  // namespace detail

/// First-order fast-marching solve of |grad K| = sqrt(1 + p/lambda) on the full
/// cube, seeded from the radial profile inside `seed_radius` to suppress the
/// source-singularity error.  O(n log n) over grid nodes.
inline EikonalGridSolution solve_eikonal_grid(const Potential& pot, double lambda,
                                              const Grid3& grid, double seed_radius) {
  if (!pot.is_radial())
    throw std::invalid_argument("eikonal: grid solver seeds from a radial profile; potential must be radial");
  if (!(lambda > 0.0)) throw std::invalid_argument("eikonal: lambda must be positive");
  if (!(seed_radius >= 2.0 * grid.h))
    throw std::invalid_argument("eikonal: seed radius must cover at least two cells");
  if (!(seed_radius < grid.half_extent()))
    throw std::invalid_argument("eikonal: seed radius must lie inside the grid");

  const double corner = std::sqrt(3.0) * grid.half_extent();
  RadialProfile profile(pot, lambda, corner * (1.0 + 1e-9) + 2.0 * grid.h);

  const int n = grid.n;
  const std::size_t total = grid.size();
  EikonalGridSolution sol;
  sol.K = RealField(grid, std::numeric_limits<double>::infinity());
  sol.seed_radius = seed_radius;
  sol.min_slowness_sq = profile.min_slowness_sq();

  std::vector<double> hs(total);  // h * slowness, precomputed per node
  {
    double min_s2 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const double s2 = 1.0 + pot.p_of_r(grid.radius(i, j, k)) / lambda;
          min_s2 = std::min(min_s2, s2);
          hs[grid.idx(i, j, k)] = grid.h * std::sqrt(std::max(s2, 0.0));
        }
    sol.min_slowness_sq = std::min(sol.min_slowness_sq, min_s2);
    if (!(min_s2 > 0.0))
      throw std::domain_error("eikonal: slowness non-positive (1 + p/lambda <= 0 on the grid)");
  }

  enum : uint8_t { FAR = 0, NARROW = 1, FROZEN = 2 };
  std::vector<uint8_t> state(total, FAR);
  detail::NodeHeap heap(total, sol.K.v);

  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double r = grid.radius(i, j, k);
        if (r <= seed_radius) {
          const std::size_t id = grid.idx(i, j, k);
          sol.K[id] = profile(r);
          state[id] = FROZEN;
          ++sol.seeded;
        }
      }
  if (sol.seeded == 0) throw std::logic_error("eikonal: grid does not contain the origin region");

  auto try_update = [&](int i, int j, int k) {
    const std::size_t id = grid.idx(i, j, k);
    if (state[id] == FROZEN) return;
    double d[3];
    int count = 0;
    const int c[3] = {i, j, k};
    for (int a = 0; a < 3; ++a) {
      double best = std::numeric_limits<double>::infinity();
      if (c[a] > 0) {
        int q[3] = {i, j, k};
        --q[a];
        const std::size_t nb = grid.idx(q[0], q[1], q[2]);
        if (state[nb] == FROZEN) best = sol.K[nb];
      }
      if (c[a] < n - 1) {
        int q[3] = {i, j, k};
        ++q[a];
        const std::size_t nb = grid.idx(q[0], q[1], q[2]);
        if (state[nb] == FROZEN) best = std::min(best, sol.K[nb]);
      }
      if (std::isfinite(best)) d[count++] = best;
    }
    if (count == 0) return;
    const double t = detail::godunov_update(d, count, hs[id]);
    if (t < sol.K[id]) {
      sol.K[id] = t;
      state[id] = NARROW;
      heap.push_or_update(id);
    }
  };

  // Narrow band around the seed.
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (state[grid.idx(i, j, k)] == FROZEN) {
          if (i > 0) try_update(i - 1, j, k);
          if (i < n - 1) try_update(i + 1, j, k);
          if (j > 0) try_update(i, j - 1, k);
          if (j < n - 1) try_update(i, j + 1, k);
          if (k > 0) try_update(i, j, k - 1);
          if (k < n - 1) try_update(i, j, k + 1);
        }

  while (!heap.empty()) {
    const std::size_t id = heap.pop_min();
    state[id] = FROZEN;
    const int i = int(id % n), j = int((id / n) % n), k = int(id / (std::size_t(n) * n));
    if (i > 0) try_update(i - 1, j, k);
    if (i < n - 1) try_update(i + 1, j, k);
    if (j > 0) try_update(i, j - 1, k);
    if (j < n - 1) try_update(i, j + 1, k);
    if (k > 0) try_update(i, j, k - 1);
    if (k < n - 1) try_update(i, j, k + 1);
  }
  return sol;
}

}  // namespace eiklab
