#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace hmx {

using Point = std::vector<double>;

inline double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

inline double norm(std::span<const double> x) { return std::sqrt(squared_norm(x)); }

inline double max_norm(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    s += diff * diff;
  }
  return s;
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

/// Axis-aligned half-open cube  lo + [0, side)^d.
struct Box {
  Point lo;
  double side = 0.0;

  std::size_t dim() const { return lo.size(); }
  double hi(std::size_t axis) const { return lo[axis] + side; }
  double volume() const { return std::pow(side, static_cast<double>(lo.size())); }

  Point center() const {
    Point c(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) c[i] = lo[i] + 0.5 * side;
    return c;
  }

  bool contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (x[i] < lo[i] || x[i] >= lo[i] + side) return false;
    return true;
  }

  /// True when `other` is a subset of this box (half-open convention).
  bool contains(const Box& other) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (other.lo[i] < lo[i] || other.lo[i] + other.side > lo[i] + side) return false;
    return true;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Per-axis extent [lo_i, hi_i); not necessarily a cube.
struct Extent {
  Point lo;
  Point hi;

  double volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= std::max(0.0, hi[i] - lo[i]);
    return v;
  }
};

inline double intersection_volume(const Box& a, const Box& b) {
  double v = 1.0;
  for (std::size_t i = 0; i < a.lo.size(); ++i) {
    const double lo = std::max(a.lo[i], b.lo[i]);
    const double hi = std::min(a.hi(i), b.hi(i));
    if (hi <= lo) return 0.0;
    v *= hi - lo;
  }
  return v;
}

/// Euclidean distance between the closures of two boxes.
inline double box_distance(const Box& a, const Box& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.lo.size(); ++i) {
    double gap = 0.0;
    if (b.lo[i] > a.hi(i))
      gap = b.lo[i] - a.hi(i);
    else if (a.lo[i] > b.hi(i))
      gap = a.lo[i] - b.hi(i);
    s += gap * gap;
  }
  return std::sqrt(s);
}

/// Critical radius of the harmonic oscillator, min(1, 1/|x|).
inline double critical_radius(std::span<const double> x) {
  const double n = norm(x);
  return n <= 1.0 ? 1.0 : 1.0 / n;
}

/// Relaxation factor (1 + l(Q)/rho(c_Q))^theta.
inline double psi_theta(const Box& q, double theta) {
  if (theta == 0.0) return 1.0;
  const Point c = q.center();
  return std::pow(1.0 + q.side / critical_radius(c), theta);
}

}  // namespace hmx
