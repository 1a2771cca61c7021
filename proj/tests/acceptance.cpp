// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "hmx/cli/run.hpp"
#include "hmx/verifier.hpp"
#include "oracle/brute_force.hpp"

using namespace hmx;

namespace {

constexpr double kKernelResidual = 1e-6;
constexpr double kKernelSeconds = 30;
constexpr double kTmaxSeconds = 60;
constexpr double kDrift = 0.1;
constexpr double kOracleRel = 1e-12;
constexpr double kDominationEps = 1e-9;
constexpr double kGrowth = 1e3;
constexpr double kThetaBand = 4.0;
constexpr double kWeightsSeconds = 10;
constexpr double kExtensionTol = 1e-10;
constexpr double kSuiteSeconds = 300;

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  [" << id << "] " << title << "  --  " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

void kernel_identities() {
  const auto t0 = std::chrono::steady_clock::now();
  const CheckReport r = check_kernel_identities(VerifyConfig{});
  const double secs = seconds_since(t0);
  const double ck = r.details["semigroup_max_rel_residual"].get<double>();
  const double gs = r.details["ground_state_max_rel_residual"].get<double>();
  report(1, "kernel identities", ck < kKernelResidual && gs < kKernelResidual && secs < kKernelSeconds,
         "semigroup " + num(ck) + ", ground state " + num(gs) + ", " + num(secs, 3) + " s");
}

void tmax_lemmas() {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyConfig c;
  c.tmax_samples = 1000;
  c.scan_points = 10000;
  const CheckReport r = check_tmax_lemmas(c);
  const double secs = seconds_since(t0);
  const int first = r.details["first_layer_samples"].get<int>();
  const bool ok = r.samples == 1000 && r.violations == 0 && first > 0 && first < 1000 && secs < kTmaxSeconds;
  report(2, "t_m lemmas", ok,
         std::to_string(r.samples) + " far pairs (" + std::to_string(first) + " first-layer), " +
             std::to_string(r.violations) + " violations, max M/cap " + num(r.observed_constant) + ", " +
             num(secs, 3) + " s");
}

void far_decay() {
  VerifyConfig c;
  c.ratio_samples = 500;
  const CheckReport r = check_far_kernel_ratio(c);
  const auto& far = r.details["far_kernel"];
  const auto& cmp = r.details["comparability"];
  const double f1 = far["log_constant_n"], f2 = far["log_constant_2n"];
  const double c1 = cmp["log_constant_n"], c2 = cmp["log_constant_2n"];
  const double fd = detail::log_drift(f1, f2), cd = detail::log_drift(c1, c2);
  const bool ok = std::isfinite(f1) && std::isfinite(f2) && fd < kDrift && std::isfinite(c1) && std::isfinite(c2) &&
                  cd < kDrift && far["monotone_violations"].get<int>() == 0;
  report(3, "far-kernel decay", ok,
         "log C_far " + num(f2, 8) + " (drift " + num(fd) + "), log C_cmp " + num(c2, 6) + " (drift " + num(cd) + ")");
}

void oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const TimeGrid tg{1e-3, 1e5, 10, {}};
  const auto ts = oracle::time_points(tg);
  double worst = 0;
  std::size_t comparisons = 0, grids = 0;
  auto cmp = [&](double got, double want) {
    const double rel = std::abs(got - want) / std::max(std::abs(want), 1e-300);
    worst = std::max(worst, rel);
    ++comparisons;
  };
  const Coefficient one = [](const Box&, const GCube&, const GCube&) { return 1.0; };
  for (int dim : {1, 2})
    for (int L = 1;; ++L) {
      const GaussGrid g({dim, L});
      if (g.cube_count() > 64) break;
      ++grids;
      for (int s = 0; s < 20; ++s) {
        const GridFunction f = GridFunction::random(g, 9000 + static_cast<std::uint64_t>(s), 0.7);
        const auto cubes = g.all_cubes();
        const std::size_t stride = dim == 1 ? 1 : 6;  // d = 2: a spread of cube centres
        for (std::size_t i = 0; i < cubes.size(); i += stride) {
          const Point x = cubes[i].center();
          for (double theta : {0.0, 1.0, 4.0}) cmp(maximal_theta(f, x, theta), oracle::m_theta(f, x, theta));
          cmp(maximal_classical(f, x, true), oracle::m_theta(f, x, 0.0, true));
          cmp(maximal_local(LocalOp::m, f, x), oracle::m_local(f, x));
          cmp(heat_maximal(f, x, HeatVariant::classical, tg), oracle::heat_sup(f, x, ts, false, oracle::Scope::all));
          cmp(heat_maximal(f, x, HeatVariant::hermite, tg), oracle::heat_sup(f, x, ts, true, oracle::Scope::all));
          cmp(heat_maximal(f, x, HeatVariant::hermite_loc, tg), oracle::heat_sup(f, x, ts, true, oracle::Scope::near));
          cmp(heat_maximal(f, x, HeatVariant::hermite_far, tg), oracle::heat_sup(f, x, ts, true, oracle::Scope::far));
          cmp(heat_maximal(f, x, HeatVariant::sharp, tg), oracle::heat_sup(f, x, ts, true, oracle::Scope::all, true));
          cmp(maximal_far_adapted(f, x, FarMode::plus, tg), oracle::far_adapted(f, x, true, tg));
          cmp(maximal_far_adapted(f, x, FarMode::minus, tg), oracle::far_adapted(f, x, false, tg));
          cmp(maximal_generic(f, x, one), oracle::generic(f, x, one));
        }
      }
    }
  report(4, "brute-force oracle equivalence", worst <= kOracleRel,
         std::to_string(grids) + " grids with <= 64 cells, 20 functions each, " + std::to_string(comparisons) +
             " comparisons, max rel diff " + num(worst) + ", " + num(seconds_since(t0), 3) + " s");
}

void dominations() {
  VerifyConfig c;
  c.epsilon = kDominationEps;
  const CheckReport r = check_operator_dominations(c);
  const auto& d = r.details;
  bool finite = true;
  std::string ratios;
  for (const auto& e : d["mfar_plus_over_mtheta"]) {
    const double v = e["sup_ratio"];
    finite = finite && std::isfinite(v) && v > 0;
    ratios += " theta=" + num(e["theta"].get<double>()) + ":" + num(v);
  }
  const bool ok = d["violations_far"] == 0 && d["violations_sharp"] == 0 && d["violations_loc"] == 0 && finite;
  report(5, "pointwise dominations", ok,
         std::to_string(r.samples) + " (f, x) pairs, violations far/sharp/loc " + d["violations_far"].dump() + "/" +
             d["violations_sharp"].dump() + "/" + d["violations_loc"].dump() + ", sup M+/M^theta" + ratios);
}

void weight_separation() {
  const auto t0 = std::chrono::steady_clock::now();
  const WeightSpec w = WeightSpec::closed({RadialKind::one_plus_pow, 4.0, 1.0}, 2.0);
  const CubeFamily fam = centered_family(1, 1, 12);
  const ApReport cls = ap_constant(w, fam);
  const ApReport th = ap_theta_constant(w, 4.0, fam);
  bool monotone = true;
  double lo = INFINITY, hi = 0;
  for (std::size_t i = 0; i < cls.table.size(); ++i) {
    if (i && !(cls.table[i].ratio > cls.table[i - 1].ratio)) monotone = false;
    lo = std::min(lo, th.table[i].normalized);
    hi = std::max(hi, th.table[i].normalized);
  }
  const double growth = cls.table.back().ratio / cls.table.front().ratio;
  const double band = hi / lo;
  const double secs = seconds_since(t0);
  report(6, "weight-class separation", monotone && growth > kGrowth && band < kThetaBand && secs < kWeightsSeconds,
         std::string("classical monotone ") + (monotone ? "yes" : "no") + ", growth " + num(growth, 6) +
             ", theta=4 normalized max/min " + num(band, 6) + " (needs < " + num(kThetaBand) + "), " + num(secs, 3) +
             " s");
}

void extension() {
  const WeightSpec w = random_lattice_weight(Box{{0.0}, 1.0}, 8, 2.0, detail::sub_seed(42, 5));
  const ExtensionResult r = check_extension(w, Box{{0.0}, 1.0}, 3);
  const double gap = std::abs(r.window_constant - r.q0_constant);
  const bool ok = gap <= kExtensionTol && r.max_union_error <= kExtensionTol && r.max_subcube_error <= kExtensionTol;
  report(7, "extension lemma", ok,
         std::to_string(r.cubes) + " cubes, [w]_Ap(Q0) " + num(r.q0_constant, 12) + ", |sup - [w]| " + num(gap) +
             ", union err " + num(r.max_union_error) + ", subcube err " + num(r.max_subcube_error));
}

void determinism(std::chrono::steady_clock::time_point suite_start) {
  // report to stdout: the output path is part of the embedded run config
  int codes[2] = {0, 0};
  std::string reports[2];
  for (int k = 0; k < 2; ++k) {
    const char* argv[] = {"hmx", "verify", "--all", "--seed", "42"};
    std::ostringstream out, err;
    codes[k] = cli::main(5, argv, out, err);
    reports[k] = out.str();
  }
  const std::string& ja = reports[0];
  const std::string& jb = reports[1];
  const double secs = seconds_since(suite_start);
  const bool ok = !ja.empty() && ja == jb && codes[0] == 0 && codes[1] == 0 && secs < kSuiteSeconds;
  report(8, "determinism", ok,
         std::string("reports ") + (ja == jb ? "byte-identical" : "DIFFER") + " (" + std::to_string(ja.size()) +
             " bytes), exit codes " + std::to_string(codes[0]) + "/" + std::to_string(codes[1]) +
             ", suite time so far " + num(secs, 3) + " s");
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  kernel_identities();
  tmax_lemmas();
  far_decay();
  oracle_equivalence();
  dominations();
  weight_separation();
  extension();
  determinism(start);
  std::cout << (8 - failures) << "/8 criteria passed" << std::endl;
  return failures;
}
