#pragma once

// Heat kernels of the harmonic oscillator L = -Delta + |x|^2, in log domain.
//
//   k_t(x,y) = h_t(x,y) exp(-alpha(t)(|x|^2 + |y|^2)),
//   h_t(x,y) = (2 pi t)^(-d/2) exp(-|x-y|^2 / (2t)),
//   alpha(t) = (sqrt(1+t^2) - 1) / (2t).
//
// The semigroup e^{-sL} has kernel k_{sinh 2s}. Far-region values underflow
// any double for |y| above ~40, so everything here returns logarithms.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <utility>

#include "hmx/errors.hpp"
#include "hmx/gauss_grid.hpp"
#include "hmx/geometry.hpp"

namespace hmx {

/// Streaming log-sum-exp accumulator.
class LogSumExp {
 public:
  void add(double log_term) {
    if (log_term == -std::numeric_limits<double>::infinity()) return;
    if (log_term > max_) {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    } else {
      sum_ += std::exp(log_term - max_);
    }
  }
  double value() const {
    if (sum_ == 0.0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(sum_);
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

inline void require_positive_time(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError(std::string(what) + ": time must be positive and finite");
}

/// alpha(t), evaluated as t / (2 (sqrt(1+t^2) + 1)) to stay accurate as t -> 0.
inline double alpha(double t) {
  require_positive_time(t, "alpha");
  return t / (2.0 * (std::hypot(1.0, t) + 1.0));
}

inline double log_heat_kernel(std::span<const double> x, std::span<const double> y, double t) {
  require_positive_time(t, "log_heat_kernel");
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * t) - squared_distance(x, y) / (2.0 * t);
}

inline double log_hermite_kernel(std::span<const double> x, std::span<const double> y, double t) {
  return log_heat_kernel(x, y, t) - alpha(t) * (squared_norm(x) + squared_norm(y));
}

/// log sinh(z) for z > 0 without overflow.
inline double log_sinh(double z) {
  if (z > 20.0) return z - std::numbers::ln2 + std::log1p(-std::exp(-2.0 * z));
  return std::log(std::sinh(z));
}

/// log of the kernel of e^{-sL}, i.e. log k_{sinh 2s}(x, y).
inline double log_unrescaled_kernel(std::span<const double> x, std::span<const double> y, double s) {
  require_positive_time(s, "log_unrescaled_kernel");
  const double d = static_cast<double>(x.size());
  const double ls = log_sinh(2.0 * s);
  // alpha(sinh 2s) = tanh(s) / 2
  return -0.5 * d * (std::log(2.0 * std::numbers::pi) + ls) - 0.5 * squared_distance(x, y) * std::exp(-ls) -
         0.5 * std::tanh(s) * (squared_norm(x) + squared_norm(y));
}

/// g(t) = -d t + (|x|^2+|y|^2)/sqrt(1+t^2) - 2<x,y>; sign(g) = sign(d/dt k_t(x,y)).
inline double kernel_time_slope(std::span<const double> x, std::span<const double> y, double t) {
  const double d = static_cast<double>(x.size());
  return -d * t + (squared_norm(x) + squared_norm(y)) / std::hypot(1.0, t) - 2.0 * dot(x, y);
}

inline int derivative_sign(std::span<const double> x, std::span<const double> y, double t) {
  require_positive_time(t, "derivative_sign");
  const double g = kernel_time_slope(x, y, t);
  return (g > 0.0) - (g < 0.0);
}

/// log k_{t1}(x,y) - log k_{t2}(x,y).
inline double log_kernel_time_ratio(std::span<const double> x, std::span<const double> y, double t1, double t2) {
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(t1 / t2) - 0.5 * squared_distance(x, y) * (1.0 / t1 - 1.0 / t2) -
         (alpha(t1) - alpha(t2)) * (squared_norm(x) + squared_norm(y));
}

/// log k_t(x,y) - log k_t(x2,y2), with the large terms cancelled analytically.
inline double log_kernel_point_ratio(std::span<const double> x, std::span<const double> y,
                                     std::span<const double> x2, std::span<const double> y2, double t) {
  double dist_diff = 0.0;
  double norm_diff = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i] - y[i];
    const double b = x2[i] - y2[i];
    dist_diff += (a - b) * (a + b);
    norm_diff += (x[i] - x2[i]) * (x[i] + x2[i]) + (y[i] - y2[i]) * (y[i] + y2[i]);
  }
  return -dist_diff / (2.0 * t) - alpha(t) * norm_diff;
}

struct TimeBracket {
  double lo = 0.0;
  double hi = 0.0;
};

struct TMaxResult {
  double t_m = 0.0;
  double log_k_at_max = 0.0;
  TimeBracket bracket;
  int iterations = 0;
  /// True when the bracket came from the far-pair lower bound rather than a scan.
  bool analytic_bracket = false;
  /// M = 8 t_m sqrt(2^{j(R)+j(R')} / (|x|^2+|y|^2)), when cubes were supplied.
  std::optional<double> taylor_factor;
};

struct CubePair {
  GCube source;  // R, containing x
  GCube target;  // R', containing y
};

/// Lower bound on t_m for y outside Q_0(R_x): |y|/(9d) on the first layer, |y|/(9d|x|) off it.
inline double t_max_lower_bound(std::span<const double> x, std::span<const double> y, int layer_of_x) {
  const double d = static_cast<double>(x.size());
  return layer_of_x == 0 ? norm(y) / (9.0 * d) : norm(y) / (9.0 * d * norm(x));
}

/// True when y lies outside Q_0 of the layer-`layer_of_x` cube, i.e. its layer exceeds Q_0's exponent.
inline bool outside_q0(int dim, int layer_of_x, int layer_of_y) {
  return layer_of_y > q_cube_exponent(dim, layer_of_x, 1.0);
}

namespace detail {

/// Bisection on the sign of g over a bracket with g(lo) > 0 > g(hi).
inline std::pair<double, int> bisect_slope(std::span<const double> x, std::span<const double> y, double lo,
                                           double hi) {
  constexpr double rel_tol = 1e-12;
  constexpr int max_iter = 200;
  int it = 0;
  while (it < max_iter && hi - lo > rel_tol * hi) {
    const double mid = hi > 4.0 * lo ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (kernel_time_slope(x, y, mid) > 0.0)
      lo = mid;
    else
      hi = mid;
    ++it;
  }
  return {0.5 * (lo + hi), it};
}

}  // namespace detail

/// Locates the unique maximiser t_m of t -> k_t(x, y).
inline TMaxResult t_max(std::span<const double> x, std::span<const double> y,
                        const std::optional<CubePair>& cubes = std::nullopt) {
  const double d = static_cast<double>(x.size());
  const double upper = squared_distance(x, y) / d;
  if (!(upper > 0.0)) throw NoInteriorMax("t_max: x == y, k_t is decreasing for all t");

  const int jx = cubes ? cubes->source.layer : layer_index(x);
  const int jy = cubes ? cubes->target.layer : layer_index(y);

  TMaxResult res;
  bool have_bracket = false;
  if (outside_q0(static_cast<int>(x.size()), jx, jy)) {
    const double lower = t_max_lower_bound(x, y, jx);
    if (lower < upper && kernel_time_slope(x, y, lower) > 0.0 && kernel_time_slope(x, y, upper) < 0.0) {
      res.bracket = {lower, upper};
      res.analytic_bracket = true;
      have_bracket = true;
    }
  }
  if (!have_bracket) {
    constexpr int scan_points = 200;
    const double lo = 1e-12 * upper;
    if (kernel_time_slope(x, y, lo) <= 0.0) throw NoInteriorMax("t_max: g(t) <= 0 near t = 0");
    const double ratio = std::log(upper / lo);
    double prev = lo;
    for (int i = 1; i <= scan_points; ++i) {
      const double t = i == scan_points ? upper : lo * std::exp(ratio * i / scan_points);
      if (kernel_time_slope(x, y, t) <= 0.0) {
        res.bracket = {prev, t};
        have_bracket = true;
        break;
      }
      prev = t;
    }
    if (!have_bracket) throw NoInteriorMax("t_max: no sign change of g below |x-y|^2/d");
  }

  auto [tm, iters] = detail::bisect_slope(x, y, res.bracket.lo, res.bracket.hi);
  res.t_m = tm;
  res.iterations = iters;
  res.log_k_at_max = log_hermite_kernel(x, y, tm);
  if (cubes) {
    const double s = squared_norm(x) + squared_norm(y);
    res.taylor_factor = 8.0 * tm * std::sqrt(std::ldexp(1.0, cubes->source.layer + cubes->target.layer) / s);
  }
  return res;
}

enum class Extremum { sup, inf };

struct KernelExtremum {
  double log_value = 0.0;
  Point x;
  Point y;
};

namespace detail {

/// phi(u, v) = -(u-v)^2/(2t) - a (u^2 + v^2): the per-axis exponent of k_t.
inline double axis_exponent(double u, double v, double t, double a) {
  const double diff = u - v;
  return -diff * diff / (2.0 * t) - a * (u * u + v * v);
}

}  // namespace detail

/// Supremum or infimum of log k_t over the closed boxes A x B.
///
/// The exponent is a strictly concave quadratic that separates across axes,
/// so the infimum sits at a corner pair and the supremum is found per axis on
/// the rectangle [a0,a1] x [b0,b1]: either the free maximiser (0,0) or a
/// clamped stationary point on one of the four edges.
inline KernelExtremum kernel_extremum_points(const Box& a, const Box& b, double t, Extremum mode) {
  require_positive_time(t, "kernel_extremum");
  const std::size_t d = a.dim();
  const double al = alpha(t);
  const double shrink = 1.0 / (1.0 + 2.0 * al * t);
  KernelExtremum out;
  out.x.resize(d);
  out.y.resize(d);
  out.log_value = -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * t);
  for (std::size_t i = 0; i < d; ++i) {
    const double a0 = a.lo[i], a1 = a.hi(i), b0 = b.lo[i], b1 = b.hi(i);
    double best_u = a0, best_v = b0;
    double best = detail::axis_exponent(a0, b0, t, al);
    auto consider = [&](double u, double v) {
      const double val = detail::axis_exponent(u, v, t, al);
      if (mode == Extremum::sup ? val > best : val < best) {
        best = val;
        best_u = u;
        best_v = v;
      }
    };
    if (mode == Extremum::inf) {
      consider(a0, b1);
      consider(a1, b0);
      consider(a1, b1);
    } else if (a0 <= 0.0 && 0.0 <= a1 && b0 <= 0.0 && 0.0 <= b1) {
      best = 0.0;
      best_u = 0.0;
      best_v = 0.0;
    } else {
      for (double u : {a0, a1}) consider(u, std::clamp(u * shrink, b0, b1));
      for (double v : {b0, b1}) consider(std::clamp(v * shrink, a0, a1), v);
    }
    out.x[i] = best_u;
    out.y[i] = best_v;
    out.log_value += best;
  }
  return out;
}

inline double kernel_extremum(const Box& a, const Box& b, double t, Extremum mode) {
  return kernel_extremum_points(a, b, t, mode).log_value;
}

inline double kernel_extremum(const GCube& a, const GCube& b, double t, Extremum mode) {
  return kernel_extremum(a.box(), b.box(), t, mode);
}

}  // namespace hmx
