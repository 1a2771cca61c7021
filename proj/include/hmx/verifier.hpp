#pragma once

// Sampled verification of the kernel, t_m, far-ratio, operator-domination
// and weight-class statements. Each check returns a CheckReport; the JSON
// form of a report is a pure function of the configuration and seed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include "json.hpp"

#include "hmx/far_sampler.hpp"
#include "hmx/gauss_grid.hpp"
#include "hmx/grid_function.hpp"
#include "hmx/hermite_kernel.hpp"
#include "hmx/operators.hpp"
#include "hmx/rng.hpp"
#include "hmx/time_grid.hpp"
#include "hmx/weights.hpp"

#ifndef HMX_VERSION_STRING
#define HMX_VERSION_STRING "0.0.0"
#endif

namespace hmx {

inline constexpr int report_schema_version = 1;

struct VerifyConfig {
  int dim = 1;
  std::uint64_t seed = 42;
  TimeGrid tgrid;
  int tmax_samples = 1000;
  int scan_points = 10000;
  int ratio_samples = 500;      // doubled once for the stability test
  int bound_samples = 2000;     // for the C_N fit, also doubled
  int domination_max_layer = 3;
  int random_functions = 5;
  int weight_max_layer = 4;     // grid for the N(R) sweeps
  int extension_cells = 8;      // cells per axis of the random weight on Q0 (d = 1)
  double epsilon = 1e-9;
  double drift_tolerance = 0.1;
  double loss_threshold = 0.05;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["dim"] = dim;
    j["seed"] = seed;
    j["tgrid"] = {{"t_min", tgrid.t_min}, {"t_max", tgrid.t_max}, {"points_per_decade", tgrid.points_per_decade}};
    j["tmax_samples"] = tmax_samples;
    j["scan_points"] = scan_points;
    j["ratio_samples"] = ratio_samples;
    j["bound_samples"] = bound_samples;
    j["domination_max_layer"] = domination_max_layer;
    j["random_functions"] = random_functions;
    j["weight_max_layer"] = weight_max_layer;
    j["extension_cells"] = extension_cells;
    j["epsilon"] = epsilon;
    j["drift_tolerance"] = drift_tolerance;
    j["loss_threshold"] = loss_threshold;
    return j;
  }
};

enum class CheckStatus { pass, fail, inconclusive };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::inconclusive: return "inconclusive";
  }
  return "?";
}

struct CheckReport {
  std::string name;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double observed_constant = 0.0;
  bool constant_is_log = false;  // observed_constant is a natural log
  std::optional<double> bound;
  double tolerance = 0.0;
  std::size_t violations = 0;
  std::size_t truncated_violations = 0;  // violations on instances touching the truncation box
  bool unstable = false;
  double truncation_loss = 0.0;
  CheckStatus status = CheckStatus::fail;
  std::vector<std::string> failures;  // first few offending instances
  nlohmann::ordered_json details = nlohmann::ordered_json::object();
  std::string note;
  double runtime_seconds = 0.0;  // text output only

  bool pass() const { return status == CheckStatus::pass; }
  /// pass, or only inconclusive because of truncation.
  bool acceptable() const { return status != CheckStatus::fail; }

  void record_failure(const std::string& what, bool truncated = false) {
    ++violations;
    if (truncated) ++truncated_violations;
    if (failures.size() < 10) failures.push_back(what);
  }

  void finalize(double loss_threshold) {
    if (violations > truncated_violations || unstable)
      status = CheckStatus::fail;
    else if (truncated_violations > 0 || truncation_loss >= loss_threshold)
      status = CheckStatus::inconclusive;
    else
      status = CheckStatus::pass;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["status"] = to_string(status);
    j["pass"] = pass();
    j["samples"] = samples;
    j["seed"] = seed;
    j["observed_constant"] = observed_constant;
    j["constant_is_log"] = constant_is_log;
    j["bound"] = bound ? nlohmann::ordered_json(*bound) : nlohmann::ordered_json(nullptr);
    j["tolerance"] = tolerance;
    j["violations"] = violations;
    j["truncated_violations"] = truncated_violations;
    j["unstable"] = unstable;
    j["truncation_loss"] = truncation_loss;
    j["failures"] = failures;
    j["details"] = details;
    j["note"] = note;
    return j;
  }
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::string fmt_point(std::span<const double> x) {
  std::ostringstream os;
  os << std::setprecision(10) << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ')';
  return os.str();
}

/// |a - b| / max(1, |a|): drift of a log-domain constant.
inline double log_drift(double a, double b) { return std::abs(b - a) / std::max(1.0, std::abs(a)); }

inline double json_safe(double v) { return std::isfinite(v) ? v : (v > 0 ? 1e308 : -1e308); }

/// Per-check seeds derived from the user seed.
inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline double kernel_value(double x, double y, double s) {
  const double xs[1] = {x};
  const double ys[1] = {y};
  return std::exp(log_unrescaled_kernel(xs, ys, s));
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Semigroup and ground-state identities of the unrescaled kernel (d = 1),
/// and k_t <= h_t on random triples.
inline CheckReport check_kernel_identities(const VerifyConfig& cfg) {
  detail::Stopwatch sw;
  CheckReport rep;
  rep.name = "kernel";
  rep.seed = cfg.seed;
  rep.tolerance = 1e-6;
  rep.bound = rep.tolerance;
  rep.note = "d = 1 quadrature over [-20, 20]; the identities hold for the kernel of e^{-sL}, i.e. k_{sinh 2s}";
  using boost::math::quadrature::gauss_kronrod;
  const double lattice_t[] = {0.1, 0.25, 0.5, 1.0, 2.0};
  const double lattice_x[] = {-1.2, -0.5, 0.0, 0.3, 1.5};

  double worst_ck = 0.0;
  for (double s : lattice_t)
    for (double t : lattice_t)
      for (double x : lattice_x)
        for (double y : lattice_x) {
          auto integrand = [&](double z) { return detail::kernel_value(x, z, s) * detail::kernel_value(z, y, t); };
          const double got = gauss_kronrod<double, 61>::integrate(integrand, -20.0, 20.0, 20, 1e-14);
          const double want = detail::kernel_value(x, y, s + t);
          const double rel = std::abs(got - want) / want;
          worst_ck = std::max(worst_ck, rel);
          ++rep.samples;
          if (!(rel < rep.tolerance)) {
            std::ostringstream os;
            os << "semigroup s=" << s << " t=" << t << " x=" << x << " y=" << y << " rel=" << rel;
            rep.record_failure(os.str());
          }
        }

  double worst_gs = 0.0;
  for (double t : lattice_t)
    for (double x : lattice_x) {
      auto integrand = [&](double y) { return detail::kernel_value(x, y, t) * std::exp(-0.5 * y * y); };
      const double got = gauss_kronrod<double, 61>::integrate(integrand, -20.0, 20.0, 20, 1e-14);
      const double want = std::exp(-t) * std::exp(-0.5 * x * x);
      const double rel = std::abs(got - want) / want;
      worst_gs = std::max(worst_gs, rel);
      ++rep.samples;
      if (!(rel < rep.tolerance)) {
        std::ostringstream os;
        os << "ground state t=" << t << " x=" << x << " rel=" << rel;
        rep.record_failure(os.str());
      }
    }

  Rng rng(detail::sub_seed(cfg.seed, 1));
  std::size_t kh_violations = 0;
  const int triples = 10000;
  for (int i = 0; i < triples; ++i) {
    Point x(static_cast<std::size_t>(cfg.dim)), y(static_cast<std::size_t>(cfg.dim));
    for (auto& v : x) v = rng.uniform(-10.0, 10.0);
    for (auto& v : y) v = rng.uniform(-10.0, 10.0);
    const double t = rng.log_uniform(1e-4, 1e4);
    ++rep.samples;
    if (log_hermite_kernel(x, y, t) > log_heat_kernel(x, y, t)) {
      ++kh_violations;
      rep.record_failure("k > h at x=" + detail::fmt_point(x) + " y=" + detail::fmt_point(y));
    }
  }

  rep.observed_constant = std::max(worst_ck, worst_gs);
  rep.details["semigroup_max_rel_residual"] = worst_ck;
  rep.details["ground_state_max_rel_residual"] = worst_gs;
  rep.details["semigroup_cases"] = 625;
  rep.details["ground_state_cases"] = 25;
  rep.details["k_le_h_triples"] = triples;
  rep.details["k_le_h_violations"] = kh_violations;
  rep.finalize(cfg.loss_threshold);
  rep.runtime_seconds = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

/// Number of sign changes of g on a log grid.
inline int slope_sign_changes(std::span<const double> x, std::span<const double> y, double t_lo, double t_hi,
                              int points, double* change_lo = nullptr, double* change_hi = nullptr) {
  int changes = 0;
  int prev_sign = 0;
  double prev_t = t_lo;
  const double ratio = std::log(t_hi / t_lo);
  for (int i = 0; i < points; ++i) {
    const double t = t_lo * std::exp(ratio * i / (points - 1));
    const double g = kernel_time_slope(x, y, t);
    const int sg = (g > 0.0) - (g < 0.0);
    if (sg != 0) {
      if (prev_sign != 0 && sg != prev_sign) {
        ++changes;
        if (change_lo) *change_lo = prev_t;
        if (change_hi) *change_hi = t;
      }
      prev_sign = sg;
      prev_t = t;
    }
  }
  return changes;
}

/// Bracket, unimodality and Taylor-factor statements on random far pairs.
inline CheckReport check_tmax_lemmas(const VerifyConfig& cfg) {
  detail::Stopwatch sw;
  CheckReport rep;
  rep.name = "tmax";
  rep.seed = cfg.seed;
  rep.tolerance = 0.0;
  rep.note = "R cycles through layers 0..3; bracket [|y|/(9d|x|) or |y|/(9d), |x-y|^2/d], "
             "one sign change of g on a log scan, 2 <= M <= t_m/(16 d^2)";
  Rng rng(detail::sub_seed(cfg.seed, 2));
  const double d = cfg.dim;
  const double scan_lo = cfg.tgrid.t_min;
  const double scan_hi = cfg.tgrid.t_max;
  std::size_t bracket_bad = 0, scan_bad = 0, taylor_bad = 0, first_layer = 0;
  double min_m = std::numeric_limits<double>::infinity();
  double max_m_over_cap = 0.0;
  double max_lower_ratio = 0.0;  // lower bound / t_m, must be <= 1
  for (int i = 0; i < cfg.tmax_samples; ++i) {
    const int j = i % 4;
    const FarPair fp = sample_far_pair(rng, cfg.dim, j);
    if (j == 0) ++first_layer;
    ++rep.samples;
    const TMaxResult res = t_max(fp.x, fp.y, CubePair{fp.r, fp.r_prime});
    const double lower = t_max_lower_bound(fp.x, fp.y, j);
    const double upper = squared_distance(fp.x, fp.y) / d;
    max_lower_ratio = std::max(max_lower_ratio, lower / res.t_m);
    const std::string where = "x=" + detail::fmt_point(fp.x) + " y=" + detail::fmt_point(fp.y);
    if (!(lower <= res.t_m && res.t_m <= upper)) {
      ++bracket_bad;
      rep.record_failure("bracket " + where);
    }
    double c_lo = 0.0, c_hi = 0.0;
    const int changes = slope_sign_changes(fp.x, fp.y, scan_lo, scan_hi, cfg.scan_points, &c_lo, &c_hi);
    if (changes != 1 || !(c_lo <= res.t_m * (1 + 1e-9) && res.t_m <= c_hi * (1 + 1e-9))) {
      ++scan_bad;
      rep.record_failure("sign changes=" + std::to_string(changes) + " " + where);
    }
    const double m = *res.taylor_factor;
    const double cap = res.t_m / (16.0 * d * d);
    min_m = std::min(min_m, m);
    max_m_over_cap = std::max(max_m_over_cap, m / cap);
    if (!(m >= 2.0 && m <= cap)) {
      ++taylor_bad;
      std::ostringstream os;
      os << "taylor M=" << m << " cap=" << cap << ' ' << where;
      rep.record_failure(os.str());
    }
  }
  rep.observed_constant = max_m_over_cap;
  rep.bound = 1.0;
  rep.details["first_layer_samples"] = first_layer;
  rep.details["bracket_violations"] = bracket_bad;
  rep.details["sign_change_violations"] = scan_bad;
  rep.details["taylor_violations"] = taylor_bad;
  rep.details["min_taylor_factor"] = min_m;
  rep.details["max_taylor_factor_over_cap"] = max_m_over_cap;
  rep.details["max_lower_bound_over_t_m"] = max_lower_ratio;
  rep.details["scan"] = {{"t_min", scan_lo}, {"t_max", scan_hi}, {"points", cfg.scan_points}};
  rep.finalize(cfg.loss_threshold);
  rep.runtime_seconds = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

struct FarRatioFit {
  double log_c_far = -std::numeric_limits<double>::infinity();
  double log_c_cmp = -std::numeric_limits<double>::infinity();
  std::size_t monotone_violations = 0;
};

namespace detail {

inline std::vector<Point> box_corners(const Box& b) {
  const std::size_t d = b.dim();
  std::vector<Point> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    Point p = b.lo;
    for (std::size_t i = 0; i < d; ++i)
      if (mask >> i & 1) p[i] += b.side;
    out.push_back(std::move(p));
  }
  return out;
}

/// log of k_{sinh 2t}(x,y) / [t^{-d/2} exp(-|x-y|^2/(c t)) (1 + sqrt(t)/rho(x) + sqrt(t)/rho(y))^{-N}].
inline double log_bound_ratio(std::span<const double> x, std::span<const double> y, double t, double n,
                              double c) {
  const double d = static_cast<double>(x.size());
  const double st = std::sqrt(t);
  const double shape = -0.5 * d * std::log(t) - squared_distance(x, y) / (c * t) -
                       n * std::log1p(st / critical_radius(x) + st / critical_radius(y));
  return log_unrescaled_kernel(x, y, t) - shape;
}

}  // namespace detail

/// Far-kernel decay constant, comparability constant and the fitted C_N.
inline CheckReport check_far_kernel_ratio(const VerifyConfig& cfg) {
  detail::Stopwatch sw;
  CheckReport rep;
  rep.name = "ratio";
  rep.seed = cfg.seed;
  rep.constant_is_log = true;
  rep.tolerance = cfg.drift_tolerance;
  rep.note = "constants are natural logs; drift = |log C(2n) - log C(n)| / max(1, |log C(n)|). "
             "C_N is fitted against t^{-d/2} exp(-|x-y|^2/(4t)) (1 + sqrt(t)/rho(x) + sqrt(t)/rho(y))^{-N}";
  const double d = cfg.dim;
  const int n = cfg.ratio_samples;

  Rng rng(detail::sub_seed(cfg.seed, 3));
  FarRatioFit half, full;
  for (int i = 0; i < 2 * n; ++i) {
    const int j = i % 4;
    const FarPair fp = sample_far_pair(rng, cfg.dim, j);
    const TMaxResult tm = t_max(fp.x, fp.y, CubePair{fp.r, fp.r_prime});
    const double m = *tm.taylor_factor;
    const double jj = fp.r.layer + fp.r_prime.layer;
    const double log_k_tm = tm.log_k_at_max;
    const double log_k_m = log_hermite_kernel(fp.x, fp.y, tm.t_m / m);
    const double log_k_2m = log_hermite_kernel(fp.x, fp.y, tm.t_m / (2.0 * m));
    const double log_ratio = log_k_m - log_k_tm + jj * (d + 1.0) * std::numbers::ln2;
    std::size_t mono = 0;
    if (log_k_2m > log_k_m) {
      mono = 1;
      rep.record_failure("ratio at t_m/(2M) exceeds ratio at t_m/M: x=" + detail::fmt_point(fp.x) +
                         " y=" + detail::fmt_point(fp.y));
    }
    double log_cmp = -std::numeric_limits<double>::infinity();
    for (const auto& xc : detail::box_corners(fp.r.box()))
      for (const auto& yc : detail::box_corners(fp.r_prime.box()))
        log_cmp = std::max(log_cmp, log_k_tm - log_hermite_kernel(xc, yc, tm.t_m));
    for (FarRatioFit* fit : {&full, i < n ? &half : nullptr}) {
      if (!fit) continue;
      fit->log_c_far = std::max(fit->log_c_far, log_ratio);
      fit->log_c_cmp = std::max(fit->log_c_cmp, log_cmp);
      fit->monotone_violations += mono;
    }
    ++rep.samples;
  }

  // C_N over (x, y, t): x, y uniform in [-8, 8]^d, t log-uniform in [1e-3, 1e2].
  Rng brng(detail::sub_seed(cfg.seed, 4));
  const double ns[] = {1.0, 2.0, 4.0};
  double cn_half[3], cn_full[3], lit_half[3], lit_full[3];
  std::fill(std::begin(cn_half), std::end(cn_half), -std::numeric_limits<double>::infinity());
  std::fill(std::begin(cn_full), std::end(cn_full), -std::numeric_limits<double>::infinity());
  std::fill(std::begin(lit_half), std::end(lit_half), -std::numeric_limits<double>::infinity());
  std::fill(std::begin(lit_full), std::end(lit_full), -std::numeric_limits<double>::infinity());
  for (int i = 0; i < 2 * cfg.bound_samples; ++i) {
    Point x(static_cast<std::size_t>(cfg.dim)), y(static_cast<std::size_t>(cfg.dim));
    for (auto& v : x) v = brng.uniform(-8.0, 8.0);
    for (auto& v : y) v = brng.uniform(-8.0, 8.0);
    const double t = brng.log_uniform(1e-3, 1e2);
    for (int k = 0; k < 3; ++k) {
      const double v = detail::log_bound_ratio(x, y, t, ns[k], 4.0);
      const double lit = detail::log_bound_ratio(x, y, t, ns[k], 2.0);
      cn_full[k] = std::max(cn_full[k], v);
      lit_full[k] = std::max(lit_full[k], lit);
      if (i < cfg.bound_samples) {
        cn_half[k] = std::max(cn_half[k], v);
        lit_half[k] = std::max(lit_half[k], lit);
      }
    }
    ++rep.samples;
  }

  auto stable = [&](double a, double b, const char* what) {
    const double dr = detail::log_drift(a, b);
    const bool ok = std::isfinite(a) && std::isfinite(b) && dr < cfg.drift_tolerance;
    if (!ok) {
      rep.unstable = true;
      std::ostringstream os;
      os << what << " unstable: log C(n)=" << a << " log C(2n)=" << b << " drift=" << dr;
      if (rep.failures.size() < 10) rep.failures.push_back(os.str());
    }
    return dr;
  };
  nlohmann::ordered_json far, cmp, cn = nlohmann::ordered_json::array();
  far["log_constant_n"] = half.log_c_far;
  far["log_constant_2n"] = full.log_c_far;
  far["drift"] = stable(half.log_c_far, full.log_c_far, "far-kernel constant");
  far["monotone_violations"] = full.monotone_violations;
  cmp["log_constant_n"] = half.log_c_cmp;
  cmp["log_constant_2n"] = full.log_c_cmp;
  cmp["constant_2n"] = std::exp(full.log_c_cmp);
  cmp["drift"] = stable(half.log_c_cmp, full.log_c_cmp, "comparability constant");
  for (int k = 0; k < 3; ++k) {
    nlohmann::ordered_json e;
    e["N"] = ns[k];
    e["log_constant_n"] = cn_half[k];
    e["log_constant_2n"] = cn_full[k];
    e["drift"] = stable(cn_half[k], cn_full[k], "C_N");
    e["log_constant_2n_exponent_over_2t"] = detail::json_safe(lit_full[k]);
    e["log_constant_n_exponent_over_2t"] = detail::json_safe(lit_half[k]);
    cn.push_back(e);
  }
  rep.details["pairs_n"] = n;
  rep.details["pairs_2n"] = 2 * n;
  rep.details["far_kernel"] = far;
  rep.details["comparability"] = cmp;
  rep.details["bound_samples_n"] = cfg.bound_samples;
  rep.details["upper_bound_fit"] = cn;
  rep.observed_constant = full.log_c_far;
  rep.finalize(cfg.loss_threshold);
  rep.runtime_seconds = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

/// The test family for operator checks: indicators of every grid cube plus
/// `count` random functions.
inline std::vector<GridFunction> domination_family(const GaussGrid& grid, int count, std::uint64_t seed) {
  std::vector<GridFunction> fam;
  for (const auto& c : grid.all_cubes()) fam.push_back(GridFunction::indicator(grid, c));
  for (int i = 0; i < count; ++i) fam.push_back(GridFunction::random(grid, detail::sub_seed(seed, 100 + i)));
  return fam;
}

/// TimeGrid plus t_m(c_R, c_R') for every far cube of R.
inline TimeGrid time_grid_for_cube(const GaussGrid& grid, const GCube& r, const TimeGrid& base) {
  const NearRegion nr = grid.near_region_clipped(r);
  const Point cr = r.center();
  std::vector<double> extra;
  for (const auto& c : grid.all_cubes()) {
    if (nr.region.contains(c)) continue;
    try {
      extra.push_back(t_max(cr, c.center()).t_m);
    } catch (const NoInteriorMax&) {
    }
  }
  return base.with_extra(extra);
}

/// Pointwise dominations between the adapted and heat maximal operators.
inline CheckReport check_operator_dominations(const VerifyConfig& cfg) {
  detail::Stopwatch sw;
  CheckReport rep;
  rep.name = "domination";
  rep.seed = cfg.seed;
  rep.tolerance = cfg.epsilon;
  rep.note = "M^-_far <= T*_far (1+eps), T# <= T* (1+eps), M_loc <= (2 pi)^{d/2} e^{32 d} T*_loc (1+eps) at cube "
             "centres; sup of M^+_far / M^theta reported. Functions vanish outside the truncation box, so no mass "
             "is lost to truncation.";
  const GaussGrid grid({cfg.dim, cfg.domination_max_layer});
  const auto family = domination_family(grid, cfg.random_functions, cfg.seed);
  const double log_eps = std::log1p(cfg.epsilon);
  const double d = cfg.dim;
  const double log_cd = 0.5 * d * std::log(2.0 * std::numbers::pi) + 32.0 * d;
  const double thetas[] = {0.0, 1.0, 2.0, 4.0};
  double log_ratio_theta[4];
  std::fill(std::begin(log_ratio_theta), std::end(log_ratio_theta), -std::numeric_limits<double>::infinity());
  std::size_t viol_far = 0, viol_sharp = 0, viol_loc = 0, viol_pm = 0, truncated_points = 0;
  double worst_far = -std::numeric_limits<double>::infinity();
  double worst_sharp = -std::numeric_limits<double>::infinity();
  double worst_loc = -std::numeric_limits<double>::infinity();

  for (const auto& r : grid.all_cubes()) {
    const Point x = r.center();
    const TimeGrid tg = time_grid_for_cube(grid, r, cfg.tgrid);
    if (grid.near_region_clipped(r).truncated) ++truncated_points;
    for (std::size_t fi = 0; fi < family.size(); ++fi) {
      const GridFunction& f = family[fi];
      ++rep.samples;
      const std::string where = "f#" + std::to_string(fi) + " x=" + detail::fmt_point(x);
      const double m_minus = maximal_far_adapted_log(f, x, FarMode::minus, tg).log_value;
      const double m_plus = maximal_far_adapted_log(f, x, FarMode::plus, tg).log_value;
      const double t_far = heat_maximal_log(f, x, HeatVariant::hermite_far, tg).log_value;
      const double t_all = heat_maximal_log(f, x, HeatVariant::hermite, tg).log_value;
      const double t_sharp = heat_maximal_log(f, x, HeatVariant::sharp, tg).log_value;
      const double t_loc = heat_maximal_log(f, x, HeatVariant::hermite_loc, tg).log_value;
      const double m_loc = std::log(maximal_local(LocalOp::m, f, x));

      if (m_minus > m_plus) {
        ++viol_pm;
        rep.record_failure("M^-_far > M^+_far " + where);
      }
      if (m_minus != neg_inf) {
        worst_far = std::max(worst_far, m_minus - t_far);
        if (m_minus > t_far + log_eps) {
          ++viol_far;
          rep.record_failure("M^-_far > T*_far " + where);
        }
      }
      if (t_sharp != neg_inf) {
        worst_sharp = std::max(worst_sharp, t_sharp - t_all);
        if (t_sharp > t_all + log_eps) {
          ++viol_sharp;
          rep.record_failure("T# > T* " + where);
        }
      }
      if (m_loc != neg_inf) {
        worst_loc = std::max(worst_loc, m_loc - t_loc);
        if (m_loc > log_cd + t_loc + log_eps) {
          ++viol_loc;
          rep.record_failure("M_loc > C(d) T*_loc " + where);
        }
      }
      if (m_plus != neg_inf)
        for (int k = 0; k < 4; ++k) {
          const double mt = maximal_theta(f, x, thetas[k]);
          if (mt > 0.0) log_ratio_theta[k] = std::max(log_ratio_theta[k], m_plus - std::log(mt));
        }
    }
  }
  nlohmann::ordered_json ratios = nlohmann::ordered_json::array();
  bool finite = true;
  for (int k = 0; k < 4; ++k) {
    ratios.push_back({{"theta", thetas[k]}, {"sup_ratio", std::exp(log_ratio_theta[k])}});
    if (!std::isfinite(log_ratio_theta[k])) finite = false;
  }
  if (!finite) rep.record_failure("M^+_far / M^theta has no finite supremum over the family");
  rep.details["grid"] = {{"dim", cfg.dim}, {"max_layer", cfg.domination_max_layer}, {"cubes", grid.cube_count()}};
  rep.details["functions"] = family.size();
  rep.details["evaluation_points"] = grid.cube_count();
  rep.details["violations_far"] = viol_far;
  rep.details["violations_sharp"] = viol_sharp;
  rep.details["violations_loc"] = viol_loc;
  rep.details["violations_plus_minus"] = viol_pm;
  rep.details["max_log_ratio_mfar_minus_over_tfar"] = detail::json_safe(worst_far);
  rep.details["max_log_ratio_tsharp_over_tstar"] = detail::json_safe(worst_sharp);
  rep.details["max_log_ratio_mloc_over_tloc"] = detail::json_safe(worst_loc);
  rep.details["log_c_d"] = log_cd;
  rep.details["truncated_neighbourhoods"] = truncated_points;
  rep.details["mfar_plus_over_mtheta"] = ratios;
  rep.observed_constant = std::exp(log_ratio_theta[0]);
  rep.finalize(cfg.loss_threshold);
  rep.runtime_seconds = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

struct ExtensionResult {
  double q0_constant = 0.0;     // [w]_{A_p(Q0)}
  double window_constant = 0.0;  // sup over D^{Q0} cubes within +-3 levels
  double max_union_error = 0.0;  // max |ratio(W, union of tiles) - ratio(w, Q0)|
  double max_subcube_error = 0.0;  // max |ratio(W, Q) - ratio(w, translate of Q into Q0)|
  double max_restriction_error = 0.0;  // W vs w on the cells of Q0
  std::size_t cubes = 0;
};

/// Compares the periodised extension of a lattice weight with the weight on Q0
/// over every cube of the dyadic system generated by Q0, `levels` up and down,
/// inside the 2^levels-times enlarged window around Q0.
inline ExtensionResult check_extension(const WeightSpec& w, const Box& q0, int levels) {
  ExtensionResult out;
  const WeightSpec ext = extend_weight(w, q0);
  out.q0_constant = ap_constant(w, dyadic_subcube_family(q0, levels)).constant;
  const double base = ap_ratio(w, q0);
  const std::size_t d = q0.dim();
  const double big = std::ldexp(q0.side, levels);
  Box window{q0.lo, 2.0 * big};
  for (auto& v : window.lo) v -= big;
  for (int k = -levels; k <= levels; ++k) {
    const double side = std::ldexp(q0.side, -k);
    const auto n = static_cast<std::int64_t>(std::llround(window.side / side));
    std::vector<std::int64_t> idx(d, 0);
    for (;;) {
      Box q{window.lo, side};
      for (std::size_t i = 0; i < d; ++i) q.lo[i] += static_cast<double>(idx[i]) * side;
      const double r = ap_ratio(ext, q);
      out.window_constant = std::max(out.window_constant, r);
      if (k <= 0) {
        out.max_union_error = std::max(out.max_union_error, std::abs(r - base));
      } else {
        Box inside = q;
        for (std::size_t i = 0; i < d; ++i) {
          const double shift = std::floor((q.lo[i] - q0.lo[i]) / q0.side) * q0.side;
          inside.lo[i] -= shift;
        }
        out.max_subcube_error = std::max(out.max_subcube_error, std::abs(r - ap_ratio(w, inside)));
      }
      ++out.cubes;
      std::size_t i = 0;
      while (i < d && ++idx[i] == n) idx[i++] = 0;
      if (i == d) break;
    }
  }
  const auto& lw = *w.lattice;
  const double h = q0.side / lw.cells_per_axis;
  for (const auto& fc : dyadic_subcube_family(q0, static_cast<int>(std::lround(std::log2(lw.cells_per_axis)))).cubes) {
    if (fc.cube.side + 1e-15 < h) continue;
    const double a = weight_integral(w, fc.cube);
    const double b = weight_integral(ext, fc.cube);
    out.max_restriction_error = std::max(out.max_restriction_error, std::abs(a - b) / a);
  }
  return out;
}

/// Growth curves of the weight classes and the extension equality.
inline CheckReport check_weight_inclusions(const VerifyConfig& cfg) {
  detail::Stopwatch sw;
  CheckReport rep;
  rep.name = "weights";
  rep.seed = cfg.seed;
  rep.tolerance = 1e-10;
  rep.note = "finite cube families; bounded means the reported curve does not grow, never membership. "
             "Far-class entries are the necessary condition only (consistent with membership).";
  const int dim = cfg.dim;
  const Box unit{Point(static_cast<std::size_t>(dim), 0.0), 1.0};
  const GaussGrid wgrid({dim, cfg.weight_max_layer});
  const CubeFamily centered = centered_family(dim, 1, 12);
  const CubeFamily subcubes = dyadic_subcube_family(unit, 3);
  const CubeFamily near = near_subcube_family(wgrid, 2);

  // w = 1
  {
    const WeightSpec one = WeightSpec::one(2.0);
    double worst = 0.0;
    for (const CubeFamily* fam : {&centered, &subcubes, &near}) {
      const ApReport r = ap_constant(one, *fam);
      for (const auto& e : r.table) worst = std::max(worst, std::abs(e.ratio - 1.0));
      rep.samples += r.table.size();
    }
    rep.details["unit_weight_max_deviation"] = worst;
    if (!(worst <= 1e-12)) rep.record_failure("w = 1 does not give ratio 1");
  }

  // (1 + |x|)^4, p = 2
  const WeightSpec poly = WeightSpec::closed({RadialKind::one_plus_pow, 4.0, 1.0}, 2.0);
  {
    const ApReport classical = ap_constant(poly, centered);
    const ApReport relaxed = ap_theta_constant(poly, 4.0, centered);
    rep.samples += 2 * centered.cubes.size();
    bool monotone = true;
    nlohmann::ordered_json curve = nlohmann::ordered_json::array();
    double n_min = std::numeric_limits<double>::infinity(), n_max = 0.0;
    for (std::size_t i = 0; i < classical.table.size(); ++i) {
      if (i > 0 && !(classical.table[i].ratio > classical.table[i - 1].ratio)) monotone = false;
      n_min = std::min(n_min, relaxed.table[i].normalized);
      n_max = std::max(n_max, relaxed.table[i].normalized);
      curve.push_back({{"m", static_cast<int>(i) + 1},
                       {"ratio", classical.table[i].ratio},
                       {"theta4_normalized", relaxed.table[i].normalized}});
    }
    const double growth = classical.table.back().ratio / classical.table.front().ratio;
    const double n_first = relaxed.table.front().normalized;
    const bool bounded = n_max <= 4.0 * n_first;
    rep.details["poly4_centered"] = curve;
    rep.details["poly4_classical_monotone"] = monotone;
    rep.details["poly4_classical_growth"] = growth;
    rep.details["poly4_theta4_max_over_first"] = n_max / n_first;
    rep.details["poly4_theta4_max_over_min"] = n_max / n_min;
    rep.details["poly4_theta4_bounded"] = bounded;
    if (!monotone) rep.record_failure("classical A_2 ratio of (1+|x|)^4 is not increasing over centred cubes");
    if (!(growth > 1e3)) rep.record_failure("classical A_2 ratio of (1+|x|)^4 grows by less than 10^3");
    if (!bounded) rep.record_failure("theta = 4 normalised ratio of (1+|x|)^4 grows");

    // A_p^loc from A_p^theta: [w]_loc <= 9^theta C_theta over the N(R) subcubes.
    const ApReport loc = ap_constant(poly, near);
    rep.samples += near.cubes.size();
    double psi_max = 0.0;
    nlohmann::ordered_json inc = nlohmann::ordered_json::array();
    for (double theta : {1.0, 2.0, 4.0}) {
      const ApReport th = ap_theta_constant(poly, theta, near);
      for (const auto& e : th.table) psi_max = std::max(psi_max, std::pow(e.psi, 1.0 / theta));
      const double rhs = std::pow(9.0, theta) * th.constant;
      inc.push_back({{"theta", theta}, {"c_theta", th.constant}, {"bound", rhs}, {"holds", loc.constant <= rhs}});
      if (!(loc.constant <= rhs)) rep.record_failure("A_p^loc constant exceeds 9^theta C_theta");
    }
    rep.details["poly4_aploc_constant"] = loc.constant;
    rep.details["poly4_aploc_argmax"] = loc.argmax;
    rep.details["poly4_inclusion"] = inc;
    rep.details["near_subcubes_max_psi_base"] = psi_max;
    rep.observed_constant = loc.constant;
    if (!std::isfinite(loc.constant)) rep.record_failure("A_p^loc sweep is not finite");
  }

  // |x|^{1/2}, p = 2
  const WeightSpec root = WeightSpec::closed({RadialKind::pow, 0.5, 1.0}, 2.0);
  {
    const double r01 = ap_ratio(root, unit);
    rep.details["sqrt_ratio_unit_cube"] = r01;
    if (dim == 1 && !(std::abs(r01 - 2.0 / std::sqrt(3.0)) < 1e-12))
      rep.record_failure("|x|^{1/2} ratio on [0,1) differs from 2/sqrt(3)");
    const ApReport c = ap_constant(root, centered);
    const ApReport s = ap_constant(root, subcubes);
    const ApReport l = ap_constant(root, near);
    rep.samples += centered.cubes.size() + subcubes.cubes.size() + near.cubes.size();
    rep.details["sqrt_constants"] = {{"centered", c.constant}, {"dyadic_subcubes", s.constant}, {"near", l.constant}};
  }

  // Duality and scale invariance on the battery.
  {
    double worst_dual = 0.0, worst_scale = 0.0;
    for (const WeightSpec* w : {&poly, &root})
      for (const auto& fc : subcubes.cubes) {
        const double a = ap_ratio(*w, fc.cube);
        worst_dual = std::max(worst_dual, std::abs(ap_ratio(w->dual(), fc.cube) - a) / a);
        worst_scale = std::max(worst_scale, std::abs(ap_ratio(w->scaled(7.5), fc.cube) - a) / a);
        rep.samples += 1;
      }
    rep.details["duality_max_rel_error"] = worst_dual;
    rep.details["scale_max_rel_error"] = worst_scale;
    if (!(worst_dual < 1e-12)) rep.record_failure("ratio(w, p) != ratio(sigma, p')");
    if (!(worst_scale < 1e-12)) rep.record_failure("ratio not invariant under scaling");
  }

  // Extension of a random piecewise weight on Q0.
  {
    const int cells = dim == 1 ? cfg.extension_cells : 4;
    const WeightSpec lw = random_lattice_weight(unit, cells, 2.0, detail::sub_seed(cfg.seed, 5));
    const ExtensionResult ext = check_extension(lw, unit, 3);
    rep.samples += ext.cubes;
    rep.details["extension"] = {{"cells_per_axis", cells},
                                {"q0_constant", ext.q0_constant},
                                {"window_constant", ext.window_constant},
                                {"sup_error", std::abs(ext.window_constant - ext.q0_constant)},
                                {"max_union_error", ext.max_union_error},
                                {"max_subcube_error", ext.max_subcube_error},
                                {"max_restriction_error", ext.max_restriction_error},
                                {"cubes", ext.cubes}};
    if (!(std::abs(ext.window_constant - ext.q0_constant) <= rep.tolerance))
      rep.record_failure("extension: sup over the window differs from [w]_{A_p(Q0)}");
    if (!(ext.max_union_error <= rep.tolerance)) rep.record_failure("extension: tile-union ratio differs");
    if (!(ext.max_subcube_error <= rep.tolerance)) rep.record_failure("extension: translated subcube ratio differs");
    if (!(ext.max_restriction_error <= rep.tolerance)) rep.record_failure("extension: differs from w on Q0");
  }

  // Far-pair necessary condition.
  {
    Rng rng(detail::sub_seed(cfg.seed, 6));
    nlohmann::ordered_json far = nlohmann::ordered_json::object();
    const WeightSpec one = WeightSpec::one(2.0);
    const std::pair<const char*, const WeightSpec*> battery[] = {{"one", &one}, {"onepluspow4", &poly}, {"pow0.5", &root}};
    std::vector<std::pair<FarPair, std::vector<std::pair<Point, Point>>>> pairs;
    for (int i = 0; i < 40; ++i) {
      FarPair fp = sample_far_pair(rng, dim, i % 4);
      std::vector<std::pair<Point, Point>> pts;
      const Box rb = fp.r.box(), rpb = fp.r_prime.box();
      for (int s = 0; s < 4; ++s) {
        Point x(rb.lo), y(rpb.lo);
        for (std::size_t k = 0; k < x.size(); ++k) {
          x[k] += rb.side * rng.uniform();
          y[k] += rpb.side * rng.uniform();
        }
        pts.emplace_back(std::move(x), std::move(y));
      }
      pairs.emplace_back(std::move(fp), std::move(pts));
    }
    for (const auto& [name, w] : battery) {
      double plus = -std::numeric_limits<double>::infinity(), minus = plus;
      for (const auto& [fp, pts] : pairs) {
        const FarPairReport fr = far_pair_bound(*w, fp.r, fp.r_prime, pts);
        plus = std::max(plus, fr.log_max_plus);
        minus = std::max(minus, fr.log_max_minus);
      }
      rep.samples += pairs.size();
      far[name] = {{"log_max_plus", plus}, {"log_max_minus", minus}, {"bounded", std::isfinite(plus) && std::isfinite(minus)}};
      if (!std::isfinite(plus) || !std::isfinite(minus)) rep.record_failure(std::string("far-pair ratio unbounded for ") + name);
    }
    rep.details["far_pair_log_constants"] = far;
  }

  rep.finalize(cfg.loss_threshold);
  rep.runtime_seconds = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {"kernel", "tmax", "ratio", "domination", "weights"};
  return names;
}

inline CheckReport run_check(const std::string& name, const VerifyConfig& cfg) {
  if (name == "kernel") return check_kernel_identities(cfg);
  if (name == "tmax") return check_tmax_lemmas(cfg);
  if (name == "ratio") return check_far_kernel_ratio(cfg);
  if (name == "domination") return check_operator_dominations(cfg);
  if (name == "weights") return check_weight_inclusions(cfg);
  throw UsageError("unknown check '" + name + "'");
}

inline std::vector<CheckReport> run_all(const VerifyConfig& cfg) {
  std::vector<CheckReport> out;
  for (const auto& n : check_names()) out.push_back(run_check(n, cfg));
  return out;
}

/// Machine report. Contains no timings, so equal inputs give equal bytes.
inline nlohmann::ordered_json report_json(const std::vector<CheckReport>& reports, const VerifyConfig& cfg,
                                          const nlohmann::ordered_json& run_config = nullptr) {
  nlohmann::ordered_json j;
  j["schema_version"] = report_schema_version;
  j["artifact"] = "hmx";
  j["version"] = HMX_VERSION_STRING;
  j["run_config"] = run_config;
  j["verify_config"] = cfg.to_json();
  j["checks"] = nlohmann::ordered_json::array();
  bool ok = true;
  for (const auto& r : reports) {
    j["checks"].push_back(r.to_json());
    ok = ok && r.acceptable();
  }
  j["all_acceptable"] = ok;
  return j;
}

inline void write_text_report(std::ostream& os, const std::vector<CheckReport>& reports, bool with_runtime = true) {
  for (const auto& r : reports) {
    os << std::left << std::setw(12) << r.name << std::setw(14) << to_string(r.status) << "samples=" << std::setw(8)
       << r.samples << "constant=" << std::setprecision(6) << r.observed_constant << (r.constant_is_log ? " (log)" : "")
       << "  violations=" << r.violations;
    if (with_runtime) os << "  time=" << std::fixed << std::setprecision(2) << r.runtime_seconds << "s" << std::defaultfloat;
    os << '\n';
    for (const auto& f : r.failures) os << "    " << f << '\n';
  }
}

}  // namespace hmx
