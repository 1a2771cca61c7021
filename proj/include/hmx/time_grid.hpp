#pragma once

// Discretisation of sup_{t > 0}: a log-spaced grid plus explicit extra times.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hmx/errors.hpp"

namespace hmx {

struct TimeGrid {
  double t_min = 1e-4;
  double t_max = 1e8;
  int points_per_decade = 40;
  std::vector<double> extra;

  void validate() const {
    if (!(t_min > 0.0) || !(t_max > t_min)) throw DomainError("TimeGrid: need 0 < t_min < t_max");
    if (points_per_decade < 1) throw DomainError("TimeGrid: points_per_decade must be >= 1");
    for (double t : extra)
      if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("TimeGrid: extra times must be positive");
  }

  /// Sorted, deduplicated sample times.
  std::vector<double> points() const {
    validate();
    const double decades = std::log10(t_max / t_min);
    const int n = static_cast<int>(std::ceil(decades * points_per_decade - 1e-9));
    std::vector<double> ts;
    ts.reserve(static_cast<std::size_t>(n) + 1 + extra.size());
    for (int i = 0; i < n; ++i) ts.push_back(t_min * std::pow(10.0, static_cast<double>(i) / points_per_decade));
    ts.push_back(t_max);
    ts.insert(ts.end(), extra.begin(), extra.end());
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
  }

  TimeGrid with_extra(const std::vector<double>& more) const {
    TimeGrid g = *this;
    g.extra.insert(g.extra.end(), more.begin(), more.end());
    return g;
  }
};

}  // namespace hmx
