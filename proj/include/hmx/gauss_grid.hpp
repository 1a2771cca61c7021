#pragma once

// The Gaussian dyadic grid: layers L_0 = [-1,1)^d and
// L_l = [-2^l, 2^l)^d \ [-2^(l-1), 2^(l-1))^d, each tiled by standard dyadic
// cubes of sidelength 2^-l. Only level k = 0 is materialised.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "hmx/errors.hpp"
#include "hmx/geometry.hpp"

namespace hmx {

/// How a neighbourhood cube N(R) is chosen among the admissible candidates.
enum class NeighbourhoodRule {
  /// Candidate centre nearest to c_R, then nearest to the origin, then lexicographic.
  cube_centred,
  /// Candidate centre nearest to the origin, then lexicographic.
  origin_biased,
};

struct GridConfig {
  int dim = 1;
  int max_layer = 6;
  NeighbourhoodRule neighbourhood_rule = NeighbourhoodRule::cube_centred;
};

struct GCube {
  int layer = 0;
  int level = 0;
  std::vector<std::int64_t> index;

  std::size_t dim() const { return index.size(); }
  double side() const { return std::ldexp(1.0, -(layer + level)); }

  Box box() const {
    Box b;
    b.side = side();
    b.lo.resize(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) b.lo[i] = static_cast<double>(index[i]) * b.side;
    return b;
  }

  Point center() const { return box().center(); }

  friend auto operator<=>(const GCube&, const GCube&) = default;
  friend bool operator==(const GCube&, const GCube&) = default;
};

/// A finite disjoint union of grid cubes, kept sorted.
class Region {
 public:
  Region() = default;
  explicit Region(std::vector<GCube> cubes) : cubes_(std::move(cubes)) {
    std::sort(cubes_.begin(), cubes_.end());
    cubes_.erase(std::unique(cubes_.begin(), cubes_.end()), cubes_.end());
  }

  const std::vector<GCube>& cubes() const { return cubes_; }
  std::size_t size() const { return cubes_.size(); }
  bool empty() const { return cubes_.empty(); }
  auto begin() const { return cubes_.begin(); }
  auto end() const { return cubes_.end(); }

  bool contains(const GCube& c) const { return std::binary_search(cubes_.begin(), cubes_.end(), c); }

  double volume() const {
    double v = 0.0;
    for (const auto& c : cubes_) v += c.box().volume();
    return v;
  }

  /// Per-axis bounding extent; empty extent for an empty region.
  Extent bounding_extent() const {
    Extent e;
    if (cubes_.empty()) return e;
    const std::size_t d = cubes_.front().dim();
    e.lo.assign(d, std::numeric_limits<double>::infinity());
    e.hi.assign(d, -std::numeric_limits<double>::infinity());
    for (const auto& c : cubes_) {
      const Box b = c.box();
      for (std::size_t i = 0; i < d; ++i) {
        e.lo[i] = std::min(e.lo[i], b.lo[i]);
        e.hi[i] = std::max(e.hi[i], b.hi(i));
      }
    }
    return e;
  }

  friend bool operator==(const Region&, const Region&) = default;

 private:
  std::vector<GCube> cubes_;
};

struct NearRegion {
  Region region;       // clipped to the truncated grid
  Box cube;            // the full neighbourhood cube on the infinite grid
  bool truncated = false;
};

struct QCube {
  int exponent = 0;    // Q_t(R) = [-2^exponent, 2^exponent)^d
  double half_width = 0.0;
  Region region;       // member cubes of the truncated grid
  bool truncated = false;
};

struct RingCollection {
  Region region;
  Box enclosing;
  bool truncated = false;
};

/// Smallest l >= 0 with x in [-2^l, 2^l)^d.
inline int layer_index(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) throw DomainError("layer_index: non-finite coordinate");
  int l = 0;
  for (;;) {
    const double r = std::ldexp(1.0, l);
    bool inside = true;
    for (double v : x)
      if (v < -r || v >= r) {
        inside = false;
        break;
      }
    if (inside) return l;
    ++l;
  }
}

/// Radius bound defining Q_t(R): 2^16 d^4 2^j for t <= 16 d^2, else 2^8 t^2 2^j.
inline double q_cube_radius(int dim, int layer, double t) {
  if (!(t > 0.0)) throw DomainError("q_cube: t must be positive");
  const double d = static_cast<double>(dim);
  const double threshold = 16.0 * d * d;
  if (t <= threshold) return std::ldexp(d * d * d * d, 16 + layer);
  return std::ldexp(t * t, 8 + layer);
}

/// Smallest m with 2^m >= r.
inline int dyadic_exponent_at_least(double r) {
  int e = 0;
  const double m = std::frexp(r, &e);  // r = m 2^e, m in [0.5, 1)
  return m == 0.5 ? e - 1 : e;
}

inline int q_cube_exponent(int dim, int layer, double t) {
  return std::max(0, dyadic_exponent_at_least(q_cube_radius(dim, layer, t)));
}

class GaussGrid {
 public:
  explicit GaussGrid(GridConfig cfg) : cfg_(cfg) {
    if (cfg_.dim < 1) throw DomainError("GridConfig: dimension must be >= 1");
    if (cfg_.max_layer < 1) throw DomainError("GridConfig: max_layer must be >= 1");
    if (cfg_.max_layer > 28) throw DomainError("GridConfig: max_layer must be <= 28");
    box_.side = std::ldexp(1.0, cfg_.max_layer + 1);
    box_.lo.assign(static_cast<std::size_t>(cfg_.dim), -std::ldexp(1.0, cfg_.max_layer));
  }

  const GridConfig& config() const { return cfg_; }
  int dim() const { return cfg_.dim; }
  int max_layer() const { return cfg_.max_layer; }
  const Box& truncation_box() const { return box_; }

  bool in_domain(std::span<const double> x) const { return box_.contains(x); }
  bool in_grid(const GCube& c) const { return c.level == 0 && c.layer <= cfg_.max_layer; }

  /// Number of k = 0 cubes in the truncated grid.
  std::uint64_t cube_count() const {
    std::uint64_t n = std::uint64_t{1} << cfg_.dim;
    for (int l = 1; l <= cfg_.max_layer; ++l)
      n += (std::uint64_t{1} << ((2 * l + 1) * cfg_.dim)) - (std::uint64_t{1} << (2 * l * cfg_.dim));
    return n;
  }

  /// Grid cube containing x on the untruncated grid.
  static GCube cube_containing(std::span<const double> x) {
    GCube c;
    c.layer = layer_index(x);
    c.index.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      c.index[i] = static_cast<std::int64_t>(std::floor(std::ldexp(x[i], c.layer)));
    return c;
  }

  GCube cube_at(std::span<const double> x) const {
    check_dim(x.size());
    if (!in_domain(x)) throw OutOfDomain("cube_at: point outside the truncation box");
    return cube_containing(x);
  }

  /// True when the lattice cube of the given layer lies inside L_layer.
  static bool belongs_to_layer(int layer, std::span<const std::int64_t> index) {
    const std::int64_t outer = std::int64_t{1} << (2 * layer);
    bool outside_inner = layer == 0;
    const std::int64_t inner = layer == 0 ? 0 : std::int64_t{1} << (2 * layer - 1);
    for (auto n : index) {
      if (n < -outer || n >= outer) return false;
      if (layer > 0 && (n < -inner || n >= inner)) outside_inner = true;
    }
    return outside_inner;
  }

  /// All k = 0 cubes of the untruncated grid meeting the half-open extent.
  static std::vector<GCube> cubes_meeting(const Extent& e, int layer_cap = std::numeric_limits<int>::max()) {
    std::vector<GCube> out;
    const std::size_t d = e.lo.size();
    for (int l = 0; l <= layer_cap; ++l) {
      if (l >= 1) {
        const double r = std::ldexp(1.0, l - 1);
        bool inside_inner = true;
        for (std::size_t i = 0; i < d; ++i)
          if (e.lo[i] < -r || e.hi[i] > r) inside_inner = false;
        if (inside_inner) break;
      }
      const std::int64_t outer = std::int64_t{1} << (2 * l);
      std::vector<std::int64_t> lo(d), hi(d);
      bool empty = false;
      for (std::size_t i = 0; i < d; ++i) {
        lo[i] = std::max(-outer, static_cast<std::int64_t>(std::floor(std::ldexp(e.lo[i], l))));
        hi[i] = std::min(outer - 1, static_cast<std::int64_t>(std::ceil(std::ldexp(e.hi[i], l))) - 1);
        if (hi[i] < lo[i]) empty = true;
      }
      if (empty) continue;
      std::vector<std::int64_t> idx = lo;
      for (;;) {
        if (belongs_to_layer(l, idx)) out.push_back(GCube{l, 0, idx});
        std::size_t axis = 0;
        while (axis < d) {
          if (idx[axis] < hi[axis]) {
            ++idx[axis];
            break;
          }
          idx[axis] = lo[axis];
          ++axis;
        }
        if (axis == d) break;
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<GCube> cubes_meeting_in_grid(const Extent& e) const { return cubes_meeting(e, cfg_.max_layer); }

  /// Every cube of the truncated grid, sorted.
  std::vector<GCube> all_cubes() const {
    Extent e{box_.lo, Point(box_.lo.size(), -box_.lo[0])};
    return cubes_meeting_in_grid(e);
  }

  Region grid_region() const { return Region(all_cubes()); }

  /// The neighbourhood cube of R on the infinite grid.
  Box near_cube(const GCube& r) const {
    check_cube(r);
    const std::size_t d = r.dim();
    const double l = r.side();
    const Box rb = r.box();

    Extent search{rb.lo, rb.lo};
    for (std::size_t i = 0; i < d; ++i) {
      search.lo[i] = rb.lo[i] - l;
      search.hi[i] = rb.hi(i) + l;
    }
    Point req_lo = rb.lo;
    Point req_hi(d);
    for (std::size_t i = 0; i < d; ++i) req_hi[i] = rb.hi(i);
    for (const auto& c : cubes_meeting(search)) {
      const Box cb = c.box();
      if (box_distance(rb, cb) < l) {
        for (std::size_t i = 0; i < d; ++i) {
          req_lo[i] = std::min(req_lo[i], cb.lo[i]);
          req_hi[i] = std::max(req_hi[i], cb.hi(i));
        }
      }
    }

    const double side = 4.0 * l;
    const double step = 0.5 * l;
    std::vector<std::vector<double>> choices(d);
    for (std::size_t i = 0; i < d; ++i) {
      const auto first = static_cast<std::int64_t>(std::ceil((req_hi[i] - side) / step));
      const auto last = static_cast<std::int64_t>(std::floor(req_lo[i] / step));
      for (auto n = first; n <= last; ++n) choices[i].push_back(static_cast<double>(n) * step);
      if (choices[i].empty()) throw NoNeighbourhood("near_region: required cubes do not fit in a 4 l(R) cube");
    }

    const Point cr = rb.center();
    std::optional<Box> best;
    std::tuple<double, double, Point> best_key;
    std::vector<std::size_t> pick(d, 0);
    for (;;) {
      Box cand;
      cand.side = side;
      cand.lo.resize(d);
      for (std::size_t i = 0; i < d; ++i) cand.lo[i] = choices[i][pick[i]];
      if (decomposable(cand)) {
        const Point cc = cand.center();
        auto key = cfg_.neighbourhood_rule == NeighbourhoodRule::cube_centred
                       ? std::make_tuple(squared_distance(cc, cr), squared_norm(cc), cc)
                       : std::make_tuple(squared_norm(cc), 0.0, cc);
        if (!best || key < best_key) {
          best = cand;
          best_key = std::move(key);
        }
      }
      std::size_t axis = 0;
      while (axis < d) {
        if (++pick[axis] < choices[axis].size()) break;
        pick[axis] = 0;
        ++axis;
      }
      if (axis == d) break;
    }
    if (!best) throw NoNeighbourhood("near_region: no admissible neighbourhood cube");
    return *best;
  }

  /// N(R) clipped to the truncated grid, with a flag when clipping happened.
  NearRegion near_region_clipped(const GCube& r) const {
    NearRegion out;
    out.cube = near_cube(r);
    out.truncated = !box_.contains(out.cube);
    out.region = Region(cubes_meeting_in_grid(extent_of(out.cube)));
    return out;
  }

  /// N(R); throws Truncated when the neighbourhood leaves the truncation box.
  Region near_region(const GCube& r) const {
    auto nr = near_region_clipped(r);
    if (nr.truncated) throw Truncated("near_region: neighbourhood exceeds the truncation box; raise max_layer");
    return std::move(nr.region);
  }

  /// F(R): truncated-grid cubes outside N(R).
  Region far_collection(const GCube& r) const { return complement(near_region(r)); }

  Region complement(const Region& in) const {
    std::vector<GCube> out;
    for (auto& c : all_cubes())
      if (!in.contains(c)) out.push_back(std::move(c));
    return Region(std::move(out));
  }

  /// Q_t(R) as a symmetric dyadic box; truncated-grid members listed.
  QCube q_cube(const GCube& r, double t) const {
    check_cube(r);
    QCube q;
    q.exponent = q_cube_exponent(cfg_.dim, r.layer, t);
    q.half_width = std::ldexp(1.0, q.exponent);
    q.truncated = q.exponent > cfg_.max_layer;
    std::vector<GCube> members;
    for (auto& c : all_cubes())
      if (c.layer <= q.exponent) members.push_back(std::move(c));
    q.region = Region(std::move(members));
    return q;
  }

  /// Cubes within distance 2^k l(R) of R, and the smallest enclosing cube.
  RingCollection ring_collection(const GCube& r, int k) const {
    check_cube(r);
    if (k < 1) throw DomainError("ring_collection: k must be >= 1");
    const double reach = std::ldexp(r.side(), k);
    const Box rb = r.box();
    Extent search{rb.lo, rb.lo};
    for (std::size_t i = 0; i < rb.dim(); ++i) {
      search.lo[i] = rb.lo[i] - reach;
      search.hi[i] = rb.hi(i) + reach;
    }
    RingCollection out;
    out.truncated = !extent_inside_box(search);
    std::vector<GCube> members;
    for (auto& c : cubes_meeting_in_grid(search))
      if (box_distance(rb, c.box()) < reach) members.push_back(std::move(c));
    out.region = Region(std::move(members));
    const Extent e = out.region.bounding_extent();
    out.enclosing.lo = e.lo;
    for (std::size_t i = 0; i < e.lo.size(); ++i) out.enclosing.side = std::max(out.enclosing.side, e.hi[i] - e.lo[i]);
    return out;
  }

  /// G(Q): {Q} if Q is a grid cube, otherwise the grid cubes contained in Q.
  Region cube_decompose(const Box& q) const {
    check_dim(q.dim());
    if (q.side > 0.0) {
      const GCube at = cube_containing(q.lo);
      if (in_grid(at) && at.box() == q) return Region({at});
    }
    std::vector<GCube> inside;
    for (auto& c : cubes_meeting_in_grid(extent_of(q)))
      if (q.contains(c.box())) inside.push_back(std::move(c));
    return Region(std::move(inside));
  }

  /// True when every grid cube meeting `b` lies inside it.
  static bool decomposable(const Box& b) {
    for (const auto& c : cubes_meeting(extent_of(b)))
      if (!b.contains(c.box())) return false;
    return true;
  }

  static Extent extent_of(const Box& b) {
    Extent e{b.lo, b.lo};
    for (std::size_t i = 0; i < b.dim(); ++i) e.hi[i] = b.hi(i);
    return e;
  }

  bool extent_inside_box(const Extent& e) const {
    for (std::size_t i = 0; i < e.lo.size(); ++i)
      if (e.lo[i] < box_.lo[i] || e.hi[i] > box_.hi(i)) return false;
    return true;
  }

 private:
  void check_dim(std::size_t d) const {
    if (d != static_cast<std::size_t>(cfg_.dim)) throw DomainError("dimension mismatch with GridConfig");
  }
  void check_cube(const GCube& c) const {
    check_dim(c.dim());
    if (c.level != 0) throw DomainError("only level-0 grid cubes are supported");
    if (!belongs_to_layer(c.layer, c.index)) throw DomainError("cube is not a member of its layer");
  }

  GridConfig cfg_;
  Box box_;
};

// ---------------------------------------------------------------------------
// Line-oriented text format: a cube is `l k i_1 ... i_d`; a region is a
// header `region <count>` followed by cube lines.

inline void write_cube(std::ostream& os, const GCube& c) {
  os << c.layer << ' ' << c.level;
  for (auto n : c.index) os << ' ' << n;
  os << '\n';
}

inline void write_region(std::ostream& os, const Region& r) {
  os << "region " << r.size() << '\n';
  for (const auto& c : r) write_cube(os, c);
}

inline GCube parse_cube(const std::string& line, int dim) {
  std::istringstream in(line);
  GCube c;
  if (!(in >> c.layer >> c.level)) throw UsageError("malformed cube line: '" + line + "'");
  c.index.resize(static_cast<std::size_t>(dim));
  for (auto& n : c.index)
    if (!(in >> n)) throw UsageError("malformed cube line: '" + line + "'");
  std::string rest;
  if (in >> rest) throw UsageError("trailing tokens in cube line: '" + line + "'");
  return c;
}

inline Region read_region(std::istream& is, int dim) {
  std::string header;
  do {
    if (!std::getline(is, header)) throw UsageError("missing region header");
  } while (header.empty() || header.front() == '#');
  std::istringstream h(header);
  std::string tag;
  std::size_t count = 0;
  if (!(h >> tag >> count) || tag != "region") throw UsageError("bad region header: '" + header + "'");
  std::vector<GCube> cubes;
  cubes.reserve(count);
  std::string line;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(is, line)) throw UsageError("region truncated: expected more cube lines");
    cubes.push_back(parse_cube(line, dim));
  }
  return Region(std::move(cubes));
}

}  // namespace hmx
