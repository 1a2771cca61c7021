#pragma once

// Radial closed-form functions (1+|x|)^g, |x|^g, e^{g|x|} and their exact
// integrals over boxes: antiderivatives in d = 1, adaptive tensor
// Gauss-Legendre in d >= 2.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "hmx/errors.hpp"
#include "hmx/geometry.hpp"

namespace hmx {

enum class RadialKind { one_plus_pow, pow, exp };

inline const char* to_string(RadialKind k) {
  switch (k) {
    case RadialKind::one_plus_pow: return "onepluspow";
    case RadialKind::pow: return "pow";
    case RadialKind::exp: return "exp";
  }
  return "?";
}

/// c * f(|x|) for one of the radial families.
struct ClosedForm {
  RadialKind kind = RadialKind::pow;
  double gamma = 0.0;
  double scale = 1.0;

  double profile(double r) const {
    switch (kind) {
      case RadialKind::one_plus_pow: return std::pow(1.0 + r, gamma);
      case RadialKind::pow: return gamma == 0.0 ? 1.0 : std::pow(r, gamma);
      case RadialKind::exp: return std::exp(gamma * r);
    }
    return 0.0;
  }

  double operator()(std::span<const double> x) const { return scale * profile(norm(x)); }

  /// f^q stays in the same family.
  ClosedForm power(double q) const { return {kind, gamma * q, std::pow(scale, q)}; }

  /// True when the profile blows up at the origin.
  bool singular_at_origin() const { return kind == RadialKind::pow && gamma < 0.0; }
};

namespace detail {

/// Odd antiderivative of the profile on the half line, F(0) = 0, evaluated at |x|.
inline double radial_antiderivative(RadialKind kind, double g, double r) {
  switch (kind) {
    case RadialKind::one_plus_pow:
      if (g == -1.0) return std::log1p(r);
      return std::expm1((g + 1.0) * std::log1p(r)) / (g + 1.0);
    case RadialKind::pow:
      return std::pow(r, g + 1.0) / (g + 1.0);  // g > -1 is checked by the caller
    case RadialKind::exp:
      if (g == 0.0) return r;
      return std::expm1(g * r) / g;
  }
  return 0.0;
}

/// Integral of the profile over [a, a + h] with a, h >= 0.
///
/// Takes the width rather than the right end and works relative to the left
/// end, so that short intervals far from the origin do not cancel: F(a+h) -
/// F(a) loses every digit once a >> h.
inline double half_line_integral(RadialKind kind, double g, double a, double h) {
  if (kind == RadialKind::pow && g <= -1.0 && a == 0.0)
    throw NonIntegrable("|x|^" + std::to_string(g) + " is not integrable at the origin");
  if (a == 0.0 && kind != RadialKind::exp) return radial_antiderivative(kind, g, h);
  // int of (base + s)^g over s in [0, h]
  auto growth = [&](double base) {
    if (g == 0.0) return h;
    const double l = std::log1p(h / base);
    if (g == -1.0) return l;
    return std::pow(base, g + 1.0) * std::expm1((g + 1.0) * l) / (g + 1.0);
  };
  switch (kind) {
    case RadialKind::one_plus_pow: return growth(1.0 + a);
    case RadialKind::pow: return growth(a);
    case RadialKind::exp:
      if (g == 0.0) return h;
      return std::exp(g * a) * std::expm1(g * h) / g;
  }
  return 0.0;
}

}  // namespace detail

/// Exact integral of f over [lo, lo + width) in one dimension.
inline double integrate_interval(const ClosedForm& f, double lo, double width) {
  if (!(width >= 0.0)) throw DomainError("integrate_interval: need width >= 0");
  const double hi = lo + width;
  double s = 0.0;
  if (lo >= 0.0) {
    s = detail::half_line_integral(f.kind, f.gamma, lo, width);
  } else if (hi <= 0.0) {
    s = detail::half_line_integral(f.kind, f.gamma, -hi, width);
  } else {
    s = detail::half_line_integral(f.kind, f.gamma, 0.0, -lo) + detail::half_line_integral(f.kind, f.gamma, 0.0, hi);
  }
  return f.scale * s;
}

/// Exact integral of f over [a, b) in one dimension.
inline double integrate_1d(const ClosedForm& f, double a, double b) {
  if (!(b >= a)) throw DomainError("integrate_1d: need a <= b");
  return integrate_interval(f, a, b - a);
}

/// Tensor Gauss-Legendre rule with N nodes per axis on a box.
template <unsigned N = 32, class F>
double gauss_legendre_box(F&& f, const Box& b) {
  using rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = rule::abscissa();
  const auto& w = rule::weights();
  // Boost stores the non-negative half of a symmetric rule.
  std::vector<double> nodes, weights;
  for (std::size_t i = 0; i < x.size(); ++i) {
    nodes.push_back(x[i]);
    weights.push_back(w[i]);
    if (x[i] != 0.0) {
      nodes.push_back(-x[i]);
      weights.push_back(w[i]);
    }
  }
  const std::size_t d = b.dim();
  const double h = 0.5 * b.side;
  std::vector<std::size_t> idx(d, 0);
  Point p(d);
  double sum = 0.0;
  for (;;) {
    double wt = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      p[i] = b.lo[i] + h * (1.0 + nodes[idx[i]]);
      wt *= weights[idx[i]];
    }
    sum += wt * f(std::span<const double>(p));
    std::size_t axis = 0;
    while (axis < d && ++idx[axis] == nodes.size()) idx[axis++] = 0;
    if (axis == d) break;
  }
  return sum * std::pow(h, static_cast<double>(d));
}

namespace detail {

inline std::vector<Box> halve(const Box& b) {
  const std::size_t d = b.dim();
  std::vector<Box> out;
  out.reserve(std::size_t{1} << d);
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    Box c{b.lo, 0.5 * b.side};
    for (std::size_t i = 0; i < d; ++i)
      if (mask >> i & 1) c.lo[i] += c.side;
    out.push_back(std::move(c));
  }
  return out;
}

template <class F>
double adaptive_box(F& f, const Box& b, double coarse, double abs_tol, double scale, int depth, bool& diverging) {
  double fine = 0.0;
  std::vector<double> parts;
  const auto kids = halve(b);
  for (const auto& k : kids) parts.push_back(gauss_legendre_box(f, k));
  for (double v : parts) fine += v;
  if (std::abs(fine - coarse) <= std::max(abs_tol, 1e-14 * std::abs(fine))) return fine;
  if (depth == 0) {
    if (std::abs(fine - coarse) > 1e-3 * scale && std::abs(fine) > std::abs(coarse)) diverging = true;
    return fine;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < kids.size(); ++i)
    s += adaptive_box(f, kids[i], parts[i], abs_tol / static_cast<double>(kids.size()), scale, depth - 1,
                      diverging);
  return s;
}

}  // namespace detail

/// Integral over a box. d = 1 is exact; otherwise halving refinement of a
/// 32-node tensor rule until successive levels agree.
inline double integrate_box(const ClosedForm& f, const Box& b) {
  const std::size_t d = b.dim();
  if (d == 1) return integrate_interval(f, b.lo[0], b.side);
  if (f.gamma == 0.0) return f.scale * b.volume();  // constant profile
  bool touches_origin = true;
  for (std::size_t i = 0; i < d; ++i)
    if (b.lo[i] > 0.0 || b.hi(i) < 0.0) touches_origin = false;
  if (f.singular_at_origin() && touches_origin && f.gamma <= -static_cast<double>(d))
    throw NonIntegrable("|x|^" + std::to_string(f.gamma) + " is not integrable at the origin in dimension " +
                        std::to_string(d));
  auto fn = [&f](std::span<const double> x) {
    const double v = f(x);
    return std::isfinite(v) ? v : 0.0;  // the singular point itself has measure zero
  };
  const double coarse = gauss_legendre_box(fn, b);
  bool diverging = false;
  const int depth = f.singular_at_origin() && touches_origin ? 24 : 8;
  const double v = detail::adaptive_box(fn, b, coarse, 1e-11 * std::abs(coarse), std::abs(coarse), depth,
                                              diverging);
  if (diverging) throw NonIntegrable("quadrature does not settle under refinement");
  return v;
}

}  // namespace hmx
