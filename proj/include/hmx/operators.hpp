#pragma once

// Maximal operators on piecewise-constant grid functions.
//
// Heat-type suprema over t > 0 are taken over a TimeGrid; kernel sums use the
// kernel at the cell centre times the cell mass and are accumulated in log
// domain, so far-region values that underflow a double are still ordered
// correctly.

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "hmx/errors.hpp"
#include "hmx/gauss_grid.hpp"
#include "hmx/geometry.hpp"
#include "hmx/grid_function.hpp"
#include "hmx/hermite_kernel.hpp"
#include "hmx/time_grid.hpp"

namespace hmx {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

struct SupResult {
  double log_value = neg_inf;
  double t_star = 0.0;      // maximising time (0 when the sum is empty)
  bool truncated = false;   // a neighbourhood or Q_t(R) left the truncation box
  double value() const { return std::exp(log_value); }
};

namespace detail {

inline GCube cube_of(const GridFunction& f, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(f.grid().dim())) throw DomainError("point has the wrong dimension");
  return f.grid().cube_at(x);  // throws OutOfDomain
}

/// The cube of side 2^e containing x in the grid shifted by (-1)^e s.
inline Box shifted_dyadic_cube(std::span<const double> x, int e, std::span<const double> shift) {
  const double side = std::ldexp(1.0, e);
  const double sign = (e % 2 == 0) ? 1.0 : -1.0;
  Box q;
  q.side = side;
  q.lo.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double off = sign * shift[i];
    q.lo[i] = side * (std::floor(x[i] / side - off) + off);
  }
  return q;
}

}  // namespace detail

/// Cubes over which M and M^theta take their supremum at x: the standard
/// dyadic cubes containing x and, unless `dyadic_only`, the cubes of the
/// 3^d grids shifted by thirds (the unshifted one among them). Sides run from
/// 2^(L+2) down to 2^-(L+1).
inline std::vector<Box> classical_cubes(const GaussGrid& grid, std::span<const double> x, bool dyadic_only) {
  const std::size_t d = x.size();
  const int L = grid.max_layer();
  std::vector<Point> shifts;
  if (dyadic_only) {
    shifts.emplace_back(d, 0.0);
  } else {
    const std::size_t n = static_cast<std::size_t>(std::pow(3.0, static_cast<double>(d)));
    for (std::size_t code = 0; code < n; ++code) {
      Point s(d);
      std::size_t c = code;
      for (std::size_t i = 0; i < d; ++i, c /= 3) s[i] = static_cast<double>(c % 3) / 3.0;
      shifts.push_back(std::move(s));
    }
  }
  std::vector<Box> out;
  for (int e = L + 2; e >= -(L + 1); --e)
    for (const auto& s : shifts) out.push_back(detail::shifted_dyadic_cube(x, e, s));
  return out;
}

/// M^theta f(x): sup over candidate cubes Q of (1/(psi_theta(Q)|Q|)) * integral of f over Q.
inline double maximal_theta(const GridFunction& f, std::span<const double> x, double theta, bool dyadic_only = false) {
  if (!(theta >= 0.0)) throw DomainError("maximal_theta: theta must be >= 0");
  detail::cube_of(f, x);
  double best = 0.0;
  for (const auto& q : classical_cubes(f.grid(), x, dyadic_only)) {
    const double avg = f.integral_over(q) / (q.volume() * psi_theta(q, theta));
    best = std::max(best, avg);
  }
  return best;
}

inline double maximal_classical(const GridFunction& f, std::span<const double> x, bool dyadic_only = false) {
  return maximal_theta(f, x, 0.0, dyadic_only);
}

enum class HeatVariant { classical, hermite, hermite_loc, hermite_far, sharp };

inline const char* to_string(HeatVariant v) {
  switch (v) {
    case HeatVariant::classical: return "classical";
    case HeatVariant::hermite: return "hermite";
    case HeatVariant::hermite_loc: return "hermite_loc";
    case HeatVariant::hermite_far: return "hermite_far";
    case HeatVariant::sharp: return "sharp";
  }
  return "?";
}

namespace detail {

struct Cell {
  Point center;
  Box box;
  int layer = 0;
  double log_mass = 0.0;
};

template <class Keep>
std::vector<Cell> massive_cells(const GridFunction& f, Keep&& keep) {
  std::vector<Cell> out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double m = f.mass(i);
    if (m <= 0.0 || !keep(f.cubes()[i])) continue;
    const GCube& c = f.cubes()[i];
    out.push_back({c.center(), c.box(), c.layer, std::log(m)});
  }
  return out;
}

}  // namespace detail

/// sup_t of sum over scope(variant, t) of kernel(x, c_R') * mass(R'), in log domain.
///
/// The classical variant uses h_t, the others k_t. `sharp` is the semigroup
/// operator e^{-sL} with f cut to Q_s(R_x); the kernel parameter t of the
/// grid is read as t = sinh 2s.
inline SupResult heat_maximal_log(const GridFunction& f, std::span<const double> x, HeatVariant variant,
                                  const TimeGrid& tgrid) {
  const GaussGrid& grid = f.grid();
  const GCube r = detail::cube_of(f, x);
  SupResult res;
  std::vector<detail::Cell> cells;
  if (variant == HeatVariant::hermite_loc || variant == HeatVariant::hermite_far) {
    const NearRegion nr = grid.near_region_clipped(r);
    res.truncated = nr.truncated;
    const bool loc = variant == HeatVariant::hermite_loc;
    cells = detail::massive_cells(f, [&](const GCube& c) { return nr.region.contains(c) == loc; });
  } else {
    cells = detail::massive_cells(f, [](const GCube&) { return true; });
  }
  bool best_truncated = res.truncated;
  res.truncated = false;
  for (double t : tgrid.points()) {
    LogSumExp acc;
    int q_exp = std::numeric_limits<int>::max();
    if (variant == HeatVariant::sharp) q_exp = q_cube_exponent(grid.dim(), r.layer, 0.5 * std::asinh(t));
    for (const auto& c : cells) {
      if (c.layer > q_exp) continue;
      const double lk =
          variant == HeatVariant::classical ? log_heat_kernel(x, c.center, t) : log_hermite_kernel(x, c.center, t);
      acc.add(lk + c.log_mass);
    }
    const double v = acc.value();
    if (v > res.log_value) {
      res.log_value = v;
      res.t_star = t;
      res.truncated = variant == HeatVariant::sharp ? q_exp > grid.max_layer() : best_truncated;
    }
  }
  return res;
}

inline double heat_maximal(const GridFunction& f, std::span<const double> x, HeatVariant variant,
                           const TimeGrid& tgrid) {
  return heat_maximal_log(f, x, variant, tgrid).value();
}

enum class LocalOp { m, heat_classical, heat_hermite };

/// B_loc f(x) = B(f chi_{N(R_x)})(x). N(R_x) is clipped to the truncation
/// box, which is exact because f vanishes outside it.
inline double maximal_local(LocalOp op, const GridFunction& f, std::span<const double> x, const TimeGrid& tgrid = {}) {
  const GCube r = detail::cube_of(f, x);
  const GridFunction g = f.restricted(f.grid().near_region_clipped(r).region);
  switch (op) {
    case LocalOp::m: return maximal_classical(g, x);
    case LocalOp::heat_classical: return heat_maximal(g, x, HeatVariant::classical, tgrid);
    case LocalOp::heat_hermite: return heat_maximal(g, x, HeatVariant::hermite, tgrid);
  }
  return 0.0;
}

enum class FarMode { plus, minus };

/// M^+_far or M^-_far at x, in log domain.
///
/// The supremum runs over the grid times plus t_m(c_R, c_R') for every far
/// cube carrying mass; at each time only far cubes inside Q_t(R) count.
inline SupResult maximal_far_adapted_log(const GridFunction& f, std::span<const double> x, FarMode mode,
                                         const TimeGrid& tgrid) {
  const GaussGrid& grid = f.grid();
  const GCube r = detail::cube_of(f, x);
  const Box rb = r.box();
  const Point cr = rb.center();
  const NearRegion nr = grid.near_region_clipped(r);
  const auto cells = detail::massive_cells(f, [&](const GCube& c) { return !nr.region.contains(c); });

  std::vector<double> extra;
  for (const auto& c : cells) {
    try {
      extra.push_back(t_max(cr, c.center).t_m);
    } catch (const NoInteriorMax&) {
    }
  }
  const Extremum ext = mode == FarMode::plus ? Extremum::sup : Extremum::inf;
  SupResult res;
  for (double t : tgrid.with_extra(extra).points()) {
    const int q_exp = q_cube_exponent(grid.dim(), r.layer, t);
    LogSumExp acc;
    for (const auto& c : cells) {
      if (c.layer > q_exp) continue;
      acc.add(kernel_extremum(rb, c.box, t, ext) + c.log_mass);
    }
    const double v = acc.value();
    if (v > res.log_value) {
      res.log_value = v;
      res.t_star = t;
      res.truncated = nr.truncated || q_exp > grid.max_layer();
    }
  }
  return res;
}

inline double maximal_far_adapted(const GridFunction& f, std::span<const double> x, FarMode mode,
                                  const TimeGrid& tgrid) {
  return maximal_far_adapted_log(f, x, mode, tgrid).value();
}

/// c(Q, R, R') for the generic operator.
using Coefficient = std::function<double(const Box& q, const GCube& r, const GCube& r_prime)>;

/// M_c f(x) = sup over dyadic Q containing x (and inside the truncation box)
/// of (1/|Q|) sum_{R' in G(Q)} c(Q, R_x, R') * integral of f over R'.
inline double maximal_generic(const GridFunction& f, std::span<const double> x, const Coefficient& coeff) {
  const GaussGrid& grid = f.grid();
  const GCube r = detail::cube_of(f, x);
  const Point zero(x.size(), 0.0);
  double best = 0.0;
  for (int e = grid.max_layer(); e >= -grid.max_layer(); --e) {
    const Box q = detail::shifted_dyadic_cube(x, e, zero);
    if (!grid.truncation_box().contains(q)) continue;
    double s = 0.0;
    for (const auto& rp : grid.cube_decompose(q)) {
      const double m = f.value(rp) * rp.box().volume();
      if (m > 0.0) s += coeff(q, r, rp) * m;
    }
    best = std::max(best, s / q.volume());
  }
  return best;
}

// CSV: x_1,...,x_d,operator,parameter,value

inline void write_operator_csv_header(std::ostream& os, int dim) {
  for (int i = 1; i <= dim; ++i) os << 'x' << '_' << i << ',';
  os << "operator,parameter,value\n";
}

inline void write_operator_csv_row(std::ostream& os, std::span<const double> x, const std::string& op,
                                   const std::string& parameter, double value) {
  const auto old = os.precision(17);
  for (double v : x) os << v << ',';
  os << op << ',' << parameter << ',' << value << '\n';
  os.precision(old);
}

}  // namespace hmx
