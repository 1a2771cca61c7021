#pragma once

// Random far pairs: x in a grid cube R, y in a cube R' outside Q_0(R).

#include <algorithm>
#include <cmath>

#include "hmx/gauss_grid.hpp"
#include "hmx/hermite_kernel.hpp"
#include "hmx/rng.hpp"

namespace hmx {

struct FarPair {
  GCube r;
  GCube r_prime;
  Point x;
  Point y;
};

/// A uniformly chosen level-0 cube of the given layer.
inline GCube random_layer_cube(Rng& rng, int dim, int layer) {
  const std::int64_t outer = std::int64_t{1} << (2 * layer);
  GCube c;
  c.layer = layer;
  c.index.resize(static_cast<std::size_t>(dim));
  do {
    for (auto& n : c.index) n = rng.integer(-outer, outer - 1);
  } while (!GaussGrid::belongs_to_layer(layer, c.index));
  return c;
}

/// |y| is log-uniform on [2^m0, 2^max(20, m0+1)) where Q_0(R) = [-2^m0, 2^m0)^d,
/// in a uniformly random direction; draws are repeated until y is outside Q_0(R).
inline FarPair sample_far_pair(Rng& rng, int dim, int layer_of_r) {
  FarPair fp;
  fp.r = random_layer_cube(rng, dim, layer_of_r);
  const Box rb = fp.r.box();
  fp.x.resize(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) fp.x[static_cast<std::size_t>(i)] = rb.lo[static_cast<std::size_t>(i)] + rb.side * rng.uniform();
  const int m0 = q_cube_exponent(dim, layer_of_r, 1.0);
  const double lo = std::ldexp(1.0, m0);
  const double hi = std::ldexp(1.0, std::max(20, m0 + 1));
  fp.y.assign(static_cast<std::size_t>(dim), 0.0);
  do {
    const double radius = rng.log_uniform(lo, hi);
    Point dir(static_cast<std::size_t>(dim));
    double n2 = 0.0;
    do {
      for (auto& v : dir) v = rng.uniform(-1.0, 1.0);
      n2 = squared_norm(dir);
    } while (n2 < 1e-4);
    const double scale = radius / std::sqrt(n2);
    for (std::size_t i = 0; i < dir.size(); ++i) fp.y[i] = dir[i] * scale;
  } while (!outside_q0(dim, layer_of_r, layer_index(fp.y)));
  fp.r_prime = GaussGrid::cube_containing(fp.y);
  return fp;
}

}  // namespace hmx
