#pragma once

// Weights, A_p-type ratios over finite cube families, the periodised
// extension of a weight from a cube, and the far-pair necessary condition.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hmx/closed_form.hpp"
#include "hmx/errors.hpp"
#include "hmx/gauss_grid.hpp"
#include "hmx/geometry.hpp"
#include "hmx/grid_function.hpp"
#include "hmx/hermite_kernel.hpp"
#include "hmx/rng.hpp"

namespace hmx {

/// Piecewise-constant weight on a base cube Q0 split into n^d equal cells,
/// optionally repeated periodically over R^d by translates of Q0.
struct LatticeWeight {
  Box base;
  int cells_per_axis = 1;
  std::vector<double> values;  // row-major, axis 0 fastest
  bool periodic = false;
};

struct WeightSpec {
  enum class Kind { closed_form, lattice, grid };

  Kind kind = Kind::closed_form;
  ClosedForm form{RadialKind::pow, 0.0, 1.0};
  std::shared_ptr<const LatticeWeight> lattice;
  std::shared_ptr<const GridFunction> grid_values;
  /// Closed forms only: repeat the restriction to this cube periodically (d = 1).
  std::optional<Box> period_cell;
  double p = 2.0;

  static WeightSpec closed(ClosedForm f, double p) {
    WeightSpec w;
    w.form = f;
    w.p = p;
    w.validate_p();
    return w;
  }

  static WeightSpec one(double p) { return closed({RadialKind::pow, 0.0, 1.0}, p); }

  static WeightSpec from_lattice(LatticeWeight lw, double p) {
    for (double v : lw.values)
      if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("weight values must be positive");
    const auto n = static_cast<std::size_t>(std::pow(lw.cells_per_axis, static_cast<double>(lw.base.dim())));
    if (lw.values.size() != n) throw DomainError("lattice weight: wrong number of values");
    WeightSpec w;
    w.kind = Kind::lattice;
    w.lattice = std::make_shared<const LatticeWeight>(std::move(lw));
    w.p = p;
    w.validate_p();
    return w;
  }

  static WeightSpec from_grid(GridFunction f, double p) {
    for (double v : f.values())
      if (!(v > 0.0)) throw DomainError("grid weight values must be positive");
    WeightSpec w;
    w.kind = Kind::grid;
    w.grid_values = std::make_shared<const GridFunction>(std::move(f));
    w.p = p;
    w.validate_p();
    return w;
  }

  void validate_p() const {
    if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("weight exponent p must satisfy 1 < p < infinity");
  }

  double conjugate_p() const { return p / (p - 1.0); }

  /// w^q as a weight of the same kind (with the same p).
  WeightSpec power(double q) const {
    WeightSpec w = *this;
    switch (kind) {
      case Kind::closed_form: w.form = form.power(q); break;
      case Kind::lattice: {
        LatticeWeight lw = *lattice;
        for (auto& v : lw.values) v = std::pow(v, q);
        w.lattice = std::make_shared<const LatticeWeight>(std::move(lw));
        break;
      }
      case Kind::grid: {
        std::vector<double> vals = grid_values->values();
        for (auto& v : vals) v = std::pow(v, q);
        w.grid_values = std::make_shared<const GridFunction>(grid_values->grid(), std::move(vals));
        break;
      }
    }
    return w;
  }

  /// sigma = w^{-1/(p-1)}, as a weight for the conjugate exponent p'.
  WeightSpec dual() const {
    WeightSpec w = power(-1.0 / (p - 1.0));
    w.p = conjugate_p();
    return w;
  }

  WeightSpec scaled(double c) const {
    if (!(c > 0.0)) throw DomainError("weight scale must be positive");
    WeightSpec w = *this;
    switch (kind) {
      case Kind::closed_form: w.form.scale *= c; break;
      case Kind::lattice: {
        LatticeWeight lw = *lattice;
        for (auto& v : lw.values) v *= c;
        w.lattice = std::make_shared<const LatticeWeight>(std::move(lw));
        break;
      }
      case Kind::grid: w.grid_values = std::make_shared<const GridFunction>(grid_values->scaled(c)); break;
    }
    return w;
  }

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::closed_form:
        os << to_string(form.kind) << ':' << form.gamma;
        if (form.scale != 1.0) os << "*" << form.scale;
        if (period_cell) os << " periodised";
        break;
      case Kind::lattice:
        os << "lattice:" << lattice->values.size() << (lattice->periodic ? " periodised" : "");
        break;
      case Kind::grid: os << "grid"; break;
    }
    os << " p=" << p;
    return os.str();
  }
};

namespace detail {

/// Total length of [a,b) covered by the translates [lo + kP, hi + kP).
inline double periodic_overlap(double lo, double hi, double period, double a, double b) {
  double s = 0.0;
  const auto k0 = static_cast<std::int64_t>(std::floor((a - hi) / period));
  const auto k1 = static_cast<std::int64_t>(std::ceil((b - lo) / period));
  for (auto k = k0; k <= k1; ++k) {
    const double off = static_cast<double>(k) * period;
    s += std::max(0.0, std::min(b, hi + off) - std::max(a, lo + off));
  }
  return s;
}

inline double lattice_integral(const LatticeWeight& lw, const Box& q) {
  const std::size_t d = q.dim();
  const int n = lw.cells_per_axis;
  const double h = lw.base.side / n;
  if (!lw.periodic && !lw.base.contains(q)) throw DomainError("lattice weight is undefined outside its base cube");
  // overlap[i][c]: length of axis-i cell c (and its translates) inside q
  std::vector<std::vector<double>> overlap(d, std::vector<double>(static_cast<std::size_t>(n)));
  for (std::size_t i = 0; i < d; ++i)
    for (int c = 0; c < n; ++c) {
      const double lo = lw.base.lo[i] + c * h;
      const double hi = c + 1 == n ? lw.base.hi(i) : lo + h;
      overlap[i][static_cast<std::size_t>(c)] =
          lw.periodic ? periodic_overlap(lo, hi, lw.base.side, q.lo[i], q.hi(i))
                      : std::max(0.0, std::min(q.hi(i), hi) - std::max(q.lo[i], lo));
    }
  double s = 0.0;
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t flat = 0; flat < lw.values.size(); ++flat) {
    double v = lw.values[flat];
    for (std::size_t i = 0; i < d && v != 0.0; ++i) v *= overlap[i][idx[i]];
    s += v;
    for (std::size_t i = 0; i < d; ++i) {
      if (++idx[i] < static_cast<std::size_t>(n)) break;
      idx[i] = 0;
    }
  }
  return s;
}

inline double periodic_closed_integral_1d(const ClosedForm& f, const Box& cell, double a, double b) {
  const double lo = cell.lo[0];
  const double period = cell.side;
  double s = 0.0;
  const auto k0 = static_cast<std::int64_t>(std::floor((a - lo) / period));
  const auto k1 = static_cast<std::int64_t>(std::floor((b - lo) / period));
  for (auto k = k0; k <= k1; ++k) {
    const double off = static_cast<double>(k) * period;
    const double u = std::max(a, lo + off);
    const double v = std::min(b, lo + off + period);
    if (v > u) s += integrate_1d(f, u - off, v - off);
  }
  return s;
}

}  // namespace detail

/// w(Q), the integral of the weight over a cube.
inline double weight_integral(const WeightSpec& w, const Box& q) {
  switch (w.kind) {
    case WeightSpec::Kind::closed_form:
      if (w.period_cell) {
        if (q.dim() != 1) throw DomainError("periodised closed forms are supported in dimension 1");
        return detail::periodic_closed_integral_1d(w.form, *w.period_cell, q.lo[0], q.hi(0));
      }
      return integrate_box(w.form, q);
    case WeightSpec::Kind::lattice: return detail::lattice_integral(*w.lattice, q);
    case WeightSpec::Kind::grid:
      if (!w.grid_values->grid().truncation_box().contains(q))
        throw Truncated("grid weight is undefined outside the truncation box");
      return w.grid_values->integral_over(q);
  }
  return 0.0;
}

/// w(Q)^{1/p} sigma(Q)^{(p-1)/p} / |Q| with sigma = w^{-1/(p-1)}.
inline double ap_ratio(const WeightSpec& w, const Box& q) {
  const double a = weight_integral(w, q);
  const double b = weight_integral(w.dual(), q);
  if (!std::isfinite(a) || !std::isfinite(b) || !(a > 0.0) || !(b > 0.0)) {
    std::ostringstream msg;
    msg << "weight or its dual is not integrable on the cube at";
    for (double v : q.lo) msg << ' ' << v;
    msg << " with side " << q.side;
    throw NonIntegrable(msg.str());
  }
  const double p = w.p;
  return std::exp(std::log(a) / p + (p - 1.0) / p * std::log(b) - std::log(q.volume()));
}

// ---------------------------------------------------------------------------
// Cube families.

struct FamilyCube {
  std::string id;
  Box cube;
};

struct CubeFamily {
  std::string tag;
  std::vector<FamilyCube> cubes;
};

/// [-2^m, 2^m)^d for m in [m_lo, m_hi].
inline CubeFamily centered_family(int dim, int m_lo, int m_hi) {
  CubeFamily f{"centered", {}};
  for (int m = m_lo; m <= m_hi; ++m) {
    const double r = std::ldexp(1.0, m);
    f.cubes.push_back({"m=" + std::to_string(m), Box{Point(static_cast<std::size_t>(dim), -r), 2.0 * r}});
  }
  return f;
}

namespace detail {

inline void append_subcubes(const Box& q0, int depth, const std::string& prefix, std::vector<FamilyCube>& out) {
  const std::size_t d = q0.dim();
  for (int k = 0; k <= depth; ++k) {
    const std::int64_t n = std::int64_t{1} << k;
    const double h = std::ldexp(q0.side, -k);
    std::vector<std::int64_t> idx(d, 0);
    for (;;) {
      Box c{q0.lo, h};
      std::string id = prefix + "k=" + std::to_string(k) + ":";
      for (std::size_t i = 0; i < d; ++i) {
        c.lo[i] += static_cast<double>(idx[i]) * h;
        id += (i ? "," : "") + std::to_string(idx[i]);
      }
      out.push_back({std::move(id), std::move(c)});
      std::size_t i = 0;
      while (i < d && ++idx[i] == n) idx[i++] = 0;
      if (i == d) break;
    }
  }
}

}  // namespace detail

/// Q0 and its dyadic subcubes down to `depth` halvings.
inline CubeFamily dyadic_subcube_family(const Box& q0, int depth) {
  CubeFamily f{"dyadic-subcubes", {}};
  detail::append_subcubes(q0, depth, "", f.cubes);
  return f;
}

/// Standard dyadic cubes inside the truncation box with sides 2^L ... 2^-depth.
inline CubeFamily all_dyadic_family(const GaussGrid& grid, int depth) {
  CubeFamily f{"all-dyadic", {}};
  const Box& tb = grid.truncation_box();
  const std::size_t d = tb.dim();
  for (int e = grid.max_layer(); e >= -depth; --e) {
    const double side = std::ldexp(1.0, e);
    const auto n = static_cast<std::int64_t>(tb.side / side);
    std::vector<std::int64_t> idx(d, 0);
    for (;;) {
      Box c{tb.lo, side};
      std::string id = "e=" + std::to_string(e) + ":";
      for (std::size_t i = 0; i < d; ++i) {
        c.lo[i] += static_cast<double>(idx[i]) * side;
        id += (i ? "," : "") + std::to_string(static_cast<std::int64_t>(std::floor(c.lo[i] / side)));
      }
      f.cubes.push_back({std::move(id), std::move(c)});
      std::size_t i = 0;
      while (i < d && ++idx[i] == n) idx[i++] = 0;
      if (i == d) break;
    }
  }
  return f;
}

/// Dyadic subcubes (to `depth`) of N(R) for every grid cube R.
inline CubeFamily near_subcube_family(const GaussGrid& grid, int depth) {
  CubeFamily f{"near-subcubes", {}};
  for (const auto& r : grid.all_cubes()) {
    std::string prefix = "R=" + std::to_string(r.layer);
    for (auto n : r.index) prefix += "," + std::to_string(n);
    detail::append_subcubes(grid.near_cube(r), depth, prefix + "|", f.cubes);
  }
  return f;
}

struct ApEntry {
  std::string id;
  double side = 0.0;
  double center_norm = 0.0;
  double ratio = 0.0;
  double psi = 1.0;
  double normalized = 0.0;
};

struct ApReport {
  std::string family;
  double theta = 0.0;
  std::vector<ApEntry> table;
  double constant = 0.0;  // max of normalized ratios
  std::string argmax;
  std::size_t skipped = 0;  // cubes outside the weight's domain
};

/// sup over the family of ap_ratio(Q) / psi_theta(Q).
inline ApReport ap_theta_constant(const WeightSpec& w, double theta, const CubeFamily& family) {
  ApReport rep;
  rep.family = family.tag;
  rep.theta = theta;
  for (const auto& fc : family.cubes) {
    ApEntry e;
    e.id = fc.id;
    e.side = fc.cube.side;
    e.center_norm = norm(fc.cube.center());
    try {
      e.ratio = ap_ratio(w, fc.cube);
    } catch (const Truncated&) {
      ++rep.skipped;
      continue;
    } catch (const NonIntegrable& err) {
      throw NonIntegrable(std::string(err.what()) + " [cube " + fc.id + "]");
    }
    e.psi = psi_theta(fc.cube, theta);
    e.normalized = e.ratio / e.psi;
    if (rep.table.empty() || e.normalized > rep.constant) {
      rep.constant = e.normalized;
      rep.argmax = e.id;
    }
    rep.table.push_back(std::move(e));
  }
  return rep;
}

inline ApReport ap_constant(const WeightSpec& w, const CubeFamily& family) { return ap_theta_constant(w, 0.0, family); }

inline void write_ap_csv(std::ostream& os, const ApReport& rep, bool header = true) {
  if (header) os << "family,cube_id,sidelength,center_norm,ratio,psi_theta,normalized_ratio\n";
  const auto old = os.precision(17);
  for (const auto& e : rep.table)
    os << rep.family << ',' << e.id << ',' << e.side << ',' << e.center_norm << ',' << e.ratio << ',' << e.psi << ','
       << e.normalized << '\n';
  os.precision(old);
}

/// The periodised extension of w|_{Q0}: copies of w on every translate of Q0.
inline WeightSpec extend_weight(const WeightSpec& w, const Box& q0) {
  WeightSpec out = w;
  switch (w.kind) {
    case WeightSpec::Kind::lattice: {
      if (!(w.lattice->base == q0)) throw DomainError("extend_weight: lattice weight must live on Q0");
      LatticeWeight lw = *w.lattice;
      lw.periodic = true;
      out.lattice = std::make_shared<const LatticeWeight>(std::move(lw));
      return out;
    }
    case WeightSpec::Kind::closed_form:
      if (q0.dim() != 1) throw DomainError("extend_weight: closed forms are supported in dimension 1");
      out.period_cell = q0;
      return out;
    case WeightSpec::Kind::grid: {
      // Sample the grid weight on Q0 at the finest cell size it contains.
      const auto region = w.grid_values->grid().cube_decompose(q0);
      if (region.empty() || region.volume() != q0.volume())
        throw DomainError("extend_weight: Q0 must be a union of grid cubes");
      double h = q0.side;
      for (const auto& c : region) h = std::min(h, c.side());
      const int n = static_cast<int>(std::lround(q0.side / h));
      LatticeWeight lw{q0, n, {}, true};
      const std::size_t d = q0.dim();
      std::vector<int> idx(d, 0);
      for (;;) {
        Point mid(d);
        for (std::size_t i = 0; i < d; ++i) mid[i] = q0.lo[i] + (idx[i] + 0.5) * h;
        lw.values.push_back(w.grid_values->value_at(mid));
        std::size_t i = 0;
        while (i < d && ++idx[i] == n) idx[i++] = 0;
        if (i == d) break;
      }
      return WeightSpec::from_lattice(std::move(lw), w.p);
    }
  }
  return out;
}

/// A random lattice weight on q0 with values in [lo, hi).
inline WeightSpec random_lattice_weight(const Box& q0, int cells_per_axis, double p, std::uint64_t seed,
                                        double lo = 0.1, double hi = 10.0) {
  Rng rng(seed);
  LatticeWeight lw{q0, cells_per_axis, {}, false};
  const auto n = static_cast<std::size_t>(std::pow(cells_per_axis, static_cast<double>(q0.dim())));
  for (std::size_t i = 0; i < n; ++i) lw.values.push_back(rng.log_uniform(lo, hi));
  return WeightSpec::from_lattice(std::move(lw), p);
}

struct FarPairReport {
  double log_weight_factor = 0.0;  // log of w(R)^{1/p} sigma(R')^{(p-1)/p}
  double log_max_plus = -std::numeric_limits<double>::infinity();  // max over samples of weight factor * k_{t_m}(x~, y~)
  double log_max_minus = -std::numeric_limits<double>::infinity();  // max over samples of weight factor * k^-_{t_m(x0,y0)}(R, R')
  std::size_t samples = 0;
};

/// The necessary condition for membership in the far classes, evaluated on
/// sample points of R x R'. Requires R' outside Q_0(R).
inline FarPairReport far_pair_bound(const WeightSpec& w, const GCube& r, const GCube& r_prime,
                                    const std::vector<std::pair<Point, Point>>& samples) {
  if (!outside_q0(static_cast<int>(r.dim()), r.layer, r_prime.layer))
    throw DomainError("far_pair_bound: R' must lie outside Q_0(R)");
  const Box rb = r.box();
  const Box rpb = r_prime.box();
  const double a = weight_integral(w, rb);
  const double b = weight_integral(w.dual(), rpb);
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw NonIntegrable("far_pair_bound: weight or dual not integrable on the pair");
  FarPairReport rep;
  rep.log_weight_factor = std::log(a) / w.p + (w.p - 1.0) / w.p * std::log(b);
  const CubePair ctx{r, r_prime};
  for (const auto& [x, y] : samples) {
    const auto tm = t_max(x, y, ctx);
    rep.log_max_plus = std::max(rep.log_max_plus, rep.log_weight_factor + tm.log_k_at_max);
    rep.log_max_minus =
        std::max(rep.log_max_minus, rep.log_weight_factor + kernel_extremum(rb, rpb, tm.t_m, Extremum::inf));
    ++rep.samples;
  }
  return rep;
}

// ---------------------------------------------------------------------------

/// Parses `one`, `onepluspow:G`, `pow:G`, `exp:G`, `lattice:SEED[:CELLS]`
/// (random lattice weight on [0,1)^d), optionally followed by `*SCALE`.
inline WeightSpec parse_weight_spec(const std::string& text, int dim, double p) {
  std::string body = text;
  double scale = 1.0;
  if (const auto star = body.find('*'); star != std::string::npos) {
    scale = detail::parse_double(body.substr(star + 1), text);
    body = body.substr(0, star);
  }
  const auto colon = body.find(':');
  const std::string kind = body.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : body.substr(colon + 1);
  auto num = [&] {
    if (arg.empty()) throw UsageError("weight spec '" + text + "' needs a parameter");
    return detail::parse_double(arg, text);
  };
  WeightSpec w;
  if (kind == "one")
    w = WeightSpec::one(p);
  else if (kind == "onepluspow")
    w = WeightSpec::closed({RadialKind::one_plus_pow, num(), 1.0}, p);
  else if (kind == "pow")
    w = WeightSpec::closed({RadialKind::pow, num(), 1.0}, p);
  else if (kind == "exp")
    w = WeightSpec::closed({RadialKind::exp, num(), 1.0}, p);
  else if (kind == "lattice") {
    const auto parts = detail::split(arg, ':');
    if (parts.empty() || parts[0].empty()) throw UsageError("lattice weight needs a seed");
    const auto seed = static_cast<std::uint64_t>(detail::parse_double(parts[0], text));
    const int cells = parts.size() > 1 ? static_cast<int>(detail::parse_double(parts[1], text)) : 8;
    w = random_lattice_weight(Box{Point(static_cast<std::size_t>(dim), 0.0), 1.0}, cells, p, seed);
  } else
    throw UsageError("unknown weight spec '" + text + "'");
  return scale == 1.0 ? w : w.scaled(scale);
}

}  // namespace hmx
