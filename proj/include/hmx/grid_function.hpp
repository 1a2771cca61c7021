#pragma once

// Nonnegative piecewise-constant functions on the truncated grid, stored as
// one average per level-0 cube. Zero outside the truncation box.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hmx/closed_form.hpp"
#include "hmx/errors.hpp"
#include "hmx/gauss_grid.hpp"
#include "hmx/rng.hpp"

namespace hmx {

class GridFunction {
 public:
  /// The zero function.
  explicit GridFunction(const GaussGrid& grid) : grid_(grid), cubes_(grid.all_cubes()) {
    values_.assign(cubes_.size(), 0.0);
    volumes_.reserve(cubes_.size());
    for (const auto& c : cubes_) volumes_.push_back(c.box().volume());
  }

  /// Values aligned with grid.all_cubes().
  GridFunction(const GaussGrid& grid, std::vector<double> values) : GridFunction(grid) {
    if (values.size() != cubes_.size()) throw DomainError("GridFunction: one value per grid cube required");
    values_ = std::move(values);
    check_values();
  }

  static GridFunction constant(const GaussGrid& grid, double c) {
    GridFunction f(grid);
    std::fill(f.values_.begin(), f.values_.end(), c);
    f.check_values();
    return f;
  }

  static GridFunction indicator(const GaussGrid& grid, const GCube& cube) {
    GridFunction f(grid);
    const auto i = f.find(cube);
    if (!i) throw DomainError("indicator: cube is not in the truncated grid");
    f.values_[*i] = 1.0;
    return f;
  }

  /// Exact cell averages of a closed form.
  static GridFunction from_closed_form(const GaussGrid& grid, const ClosedForm& g) {
    GridFunction f(grid);
    for (std::size_t i = 0; i < f.cubes_.size(); ++i)
      f.values_[i] = integrate_box(g, f.cubes_[i].box()) / f.volumes_[i];
    f.check_values();
    return f;
  }

  /// Cell values sampled at cube centres.
  template <class F>
  static GridFunction from_midpoint(const GaussGrid& grid, F&& g) {
    GridFunction f(grid);
    for (std::size_t i = 0; i < f.cubes_.size(); ++i) {
      const Point c = f.cubes_[i].center();
      f.values_[i] = g(std::span<const double>(c));
    }
    f.check_values();
    return f;
  }

  /// Values uniform on [0,1), each cell kept with probability `density`.
  static GridFunction random(const GaussGrid& grid, std::uint64_t seed, double density = 1.0) {
    GridFunction f(grid);
    Rng rng(seed);
    for (auto& v : f.values_) {
      const double keep = rng.uniform();
      const double val = rng.uniform();
      v = keep < density ? val : 0.0;
    }
    return f;
  }

  const GaussGrid& grid() const { return grid_; }
  const std::vector<GCube>& cubes() const { return cubes_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return cubes_.size(); }

  std::optional<std::size_t> find(const GCube& c) const {
    auto it = std::lower_bound(cubes_.begin(), cubes_.end(), c);
    if (it == cubes_.end() || *it != c) return std::nullopt;
    return static_cast<std::size_t>(it - cubes_.begin());
  }

  double value(const GCube& c) const {
    const auto i = find(c);
    return i ? values_[*i] : 0.0;
  }

  double value_at(std::span<const double> x) const {
    if (!grid_.in_domain(x)) return 0.0;
    return value(GaussGrid::cube_containing(x));
  }

  double volume(std::size_t i) const { return volumes_[i]; }

  /// Integral of f over cube i.
  double mass(std::size_t i) const { return values_[i] * volumes_[i]; }

  double total_mass() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += mass(i);
    return s;
  }

  double mass(const Region& r) const {
    double s = 0.0;
    for (const auto& c : r) s += value(c) * c.box().volume();
    return s;
  }

  /// Integral of f over an arbitrary box (only the part inside the truncation box counts).
  double integral_over(const Box& q) const {
    double s = 0.0;
    for (const auto& c : grid_.cubes_meeting_in_grid(GaussGrid::extent_of(q))) {
      const double v = value(c);
      if (v != 0.0) s += v * intersection_volume(q, c.box());
    }
    return s;
  }

  /// f times the indicator of a region.
  GridFunction restricted(const Region& r) const {
    GridFunction g(grid_);
    for (std::size_t i = 0; i < size(); ++i)
      if (r.contains(cubes_[i])) g.values_[i] = values_[i];
    return g;
  }

  Region support() const {
    std::vector<GCube> s;
    for (std::size_t i = 0; i < size(); ++i)
      if (values_[i] != 0.0) s.push_back(cubes_[i]);
    return Region(std::move(s));
  }

  GridFunction scaled(double c) const {
    GridFunction g = *this;
    for (auto& v : g.values_) v *= c;
    g.check_values();
    return g;
  }

  friend GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    if (a.grid_.config().dim != b.grid_.config().dim || a.grid_.max_layer() != b.grid_.max_layer())
      throw DomainError("GridFunction: grids differ");
    GridFunction g = a;
    for (std::size_t i = 0; i < g.size(); ++i) g.values_[i] += b.values_[i];
    return g;
  }

 private:
  void check_values() const {
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (!(values_[i] >= 0.0) || !std::isfinite(values_[i])) {
        std::ostringstream msg;
        msg << "negative or non-finite value " << values_[i] << " on cube";
        for (auto n : cubes_[i].index) msg << ' ' << n;
        msg << " (layer " << cubes_[i].layer << ')';
        throw NegativeValue(msg.str());
      }
  }

  GaussGrid grid_;
  std::vector<GCube> cubes_;
  std::vector<double> values_;
  std::vector<double> volumes_;
};

// Text format: one line `l k i_1 ... i_d value` per cube. Cubes missing
// from the input are zero.

inline void write_grid_function(std::ostream& os, const GridFunction& f) {
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto& c = f.cubes()[i];
    os << c.layer << ' ' << c.level;
    for (auto n : c.index) os << ' ' << n;
    os << ' ' << f.values()[i] << '\n';
  }
  os.precision(old);
}

inline GridFunction read_grid_function(std::istream& is, const GaussGrid& grid) {
  GridFunction zero(grid);
  std::vector<double> values(zero.size(), 0.0);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream in(line);
    GCube c;
    c.index.resize(static_cast<std::size_t>(grid.dim()));
    double v = 0.0;
    if (!(in >> c.layer >> c.level)) throw UsageError("malformed function line: '" + line + "'");
    for (auto& n : c.index)
      if (!(in >> n)) throw UsageError("malformed function line: '" + line + "'");
    if (!(in >> v)) throw UsageError("malformed function line: '" + line + "'");
    const auto i = zero.find(c);
    if (!i) throw UsageError("cube not in the truncated grid: '" + line + "'");
    values[*i] = v;
  }
  return GridFunction(grid, std::move(values));
}

namespace detail {

inline double parse_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw UsageError("bad number '" + s + "' in " + what);
  }
  if (pos != s.size()) throw UsageError("bad number '" + s + "' in " + what);
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace detail

/// Builds a function from a spec string:
///   const:C | indicator:L,I1,...,Id | power:A | onepluspow:G | exp:G |
///   random:SEED[:DENSITY] | file:PATH
inline GridFunction parse_function_spec(const std::string& spec, const GaussGrid& grid) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto need_arg = [&] {
    if (arg.empty()) throw UsageError("function spec '" + spec + "' needs an argument");
  };
  if (kind == "const") {
    need_arg();
    return GridFunction::constant(grid, detail::parse_double(arg, spec));
  }
  if (kind == "indicator") {
    need_arg();
    const auto parts = detail::split(arg, ',');
    if (parts.size() != static_cast<std::size_t>(grid.dim()) + 1)
      throw UsageError("indicator needs a layer and " + std::to_string(grid.dim()) + " indices");
    GCube c;
    c.layer = static_cast<int>(detail::parse_double(parts[0], spec));
    for (std::size_t i = 1; i < parts.size(); ++i)
      c.index.push_back(static_cast<std::int64_t>(detail::parse_double(parts[i], spec)));
    return GridFunction::indicator(grid, c);
  }
  if (kind == "power" || kind == "pow") {
    need_arg();
    return GridFunction::from_closed_form(grid, {RadialKind::pow, detail::parse_double(arg, spec), 1.0});
  }
  if (kind == "onepluspow") {
    need_arg();
    return GridFunction::from_closed_form(grid, {RadialKind::one_plus_pow, detail::parse_double(arg, spec), 1.0});
  }
  if (kind == "exp") {
    need_arg();
    return GridFunction::from_closed_form(grid, {RadialKind::exp, detail::parse_double(arg, spec), 1.0});
  }
  if (kind == "random") {
    need_arg();
    const auto parts = detail::split(arg, ':');
    const auto seed = static_cast<std::uint64_t>(detail::parse_double(parts[0], spec));
    const double density = parts.size() > 1 ? detail::parse_double(parts[1], spec) : 1.0;
    return GridFunction::random(grid, seed, density);
  }
  if (kind == "file") {
    need_arg();
    std::ifstream in(arg);
    if (!in) throw UsageError("cannot open function file '" + arg + "'");
    return read_grid_function(in, grid);
  }
  throw UsageError("unknown function spec '" + spec + "'");
}

}  // namespace hmx
