#pragma once

// Dispatch of a parsed RunConfig to the library. Data goes to --output (or
// stdout); every output carries the RunConfig and the artifact version.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hmx/cli/run_config.hpp"
#include "hmx/far_sampler.hpp"
#include "hmx/gauss_grid.hpp"
#include "hmx/grid_function.hpp"
#include "hmx/hermite_kernel.hpp"
#include "hmx/operators.hpp"
#include "hmx/verifier.hpp"
#include "hmx/weights.hpp"

namespace hmx::cli {

using ojson = nlohmann::ordered_json;

namespace detail {

inline Point parse_point(const std::string& text, int dim, const char* flag) {
  if (text.empty()) throw UsageError(std::string(flag) + ": point required");
  Point p;
  for (const auto& part : hmx::detail::split(text, ','))
    p.push_back(hmx::detail::parse_double(part, std::string(flag) + " " + text));
  if (static_cast<int>(p.size()) != dim)
    throw UsageError(std::string(flag) + ": expected " + std::to_string(dim) + " coordinates");
  return p;
}

inline GCube parse_cube_flag(const std::string& text, const GaussGrid& grid, const char* flag) {
  if (text.empty()) throw UsageError(std::string(flag) + ": cube required as 'l k i_1 .. i_d'");
  GCube c;
  try {
    c = parse_cube(text, grid.dim());
  } catch (const UsageError& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
  if (!GaussGrid::belongs_to_layer(c.layer, c.index) || c.level != 0)
    throw UsageError(std::string(flag) + ": '" + text + "' is not a level-0 cube of its layer");
  return c;
}

inline ojson cube_json(const GCube& c) {
  ojson j;
  j["layer"] = c.layer;
  j["level"] = c.level;
  j["index"] = c.index;
  const Box b = c.box();
  j["lo"] = b.lo;
  j["side"] = b.side;
  return j;
}

inline ojson region_json(const Region& r) {
  ojson arr = ojson::array();
  for (const auto& c : r) {
    ojson row = ojson::array({c.layer, c.level});
    for (auto i : c.index) row.push_back(i);
    arr.push_back(row);
  }
  return arr;
}

inline ojson box_json(const Box& b) { return {{"lo", b.lo}, {"side", b.side}}; }

inline ojson envelope(const RunConfig& cfg) {
  ojson j;
  j["artifact"] = "hmx";
  j["version"] = HMX_VERSION_STRING;
  j["run_config"] = cfg.to_json();
  return j;
}

inline void csv_preamble(std::ostream& os, const RunConfig& cfg) {
  os << "# hmx " << HMX_VERSION_STRING << '\n';
  for (const auto& [k, v] : cfg.items()) os << "# " << k << '=' << v << '\n';
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Output {
  std::ofstream file;
  std::ostream* data = nullptr;
  std::ostream* summary = nullptr;
};

inline void open_output(const RunConfig& cfg, std::ostream& out, std::ostream& err, Output& o) {
  if (cfg.output.empty()) {
    o.data = &out;
    o.summary = &err;
    return;
  }
  o.file.open(cfg.output, std::ios::binary);
  if (!o.file) throw UsageError("--output: cannot write '" + cfg.output + "'");
  o.data = &o.file;
  o.summary = &out;
}

inline int run_grid(const RunConfig& cfg, Output& o) {
  const GaussGrid grid({cfg.dim, cfg.lmax});
  const bool json = cfg.resolved_format() == "json";
  ojson j = envelope(cfg);
  if (cfg.action == "dump") {
    const Region r = grid.grid_region();
    if (json) {
      j["cubes"] = region_json(r);
      *o.data << j.dump(1) << '\n';
    } else {
      csv_preamble(*o.data, cfg);
      write_region(*o.data, r);
    }
    *o.summary << "grid dump: " << r.size() << " cubes (d=" << cfg.dim << ", L_max=" << cfg.lmax << ")\n";
  } else if (cfg.action == "near") {
    const GCube c = parse_cube_flag(cfg.cube, grid, "--cube");
    const NearRegion nr = grid.near_region_clipped(c);
    if (json) {
      j["cube"] = cube_json(c);
      j["near_cube"] = box_json(nr.cube);
      j["truncated"] = nr.truncated;
      j["cubes"] = region_json(nr.region);
      *o.data << j.dump(1) << '\n';
    } else {
      csv_preamble(*o.data, cfg);
      *o.data << "# near_cube lo=" << fmt(nr.cube.lo[0]) << " side=" << fmt(nr.cube.side)
              << " truncated=" << (nr.truncated ? "true" : "false") << '\n';
      write_region(*o.data, nr.region);
    }
    *o.summary << "grid near: " << nr.region.size() << " cubes" << (nr.truncated ? " (truncated)" : "") << '\n';
  } else {
    const GCube c = parse_cube_flag(cfg.cube, grid, "--cube");
    const QCube q = grid.q_cube(c, cfg.t);
    if (json) {
      j["cube"] = cube_json(c);
      j["t"] = cfg.t;
      j["exponent"] = q.exponent;
      j["half_width"] = q.half_width;
      j["truncated"] = q.truncated;
      j["cubes"] = region_json(q.region);
      *o.data << j.dump(1) << '\n';
    } else {
      csv_preamble(*o.data, cfg);
      *o.data << "# exponent=" << q.exponent << " truncated=" << (q.truncated ? "true" : "false") << '\n';
      write_region(*o.data, q.region);
    }
    *o.summary << "grid qcube: [-2^" << q.exponent << ", 2^" << q.exponent << ")^" << cfg.dim << ", "
               << q.region.size() << " cubes" << (q.truncated ? " (truncated)" : "") << '\n';
  }
  return 0;
}

inline void emit_record(const RunConfig& cfg, Output& o, const std::vector<std::pair<std::string, ojson>>& fields) {
  if (cfg.resolved_format() == "json") {
    ojson j = envelope(cfg);
    for (const auto& [k, v] : fields) j[k] = v;
    *o.data << j.dump(1) << '\n';
    return;
  }
  csv_preamble(*o.data, cfg);
  for (std::size_t i = 0; i < fields.size(); ++i) *o.data << (i ? "," : "") << fields[i].first;
  *o.data << '\n';
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const ojson& v = fields[i].second;
    *o.data << (i ? "," : "");
    if (v.is_number_float())
      *o.data << fmt(v.get<double>());
    else if (v.is_string())
      *o.data << v.get<std::string>();
    else if (v.is_structured())
      *o.data << '"' << v.dump() << '"';
    else
      *o.data << v.dump();
  }
  *o.data << '\n';
}

inline ojson finite_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

inline int run_kernel(const RunConfig& cfg, Output& o) {
  if (cfg.action == "eval") {
    const Point x = parse_point(cfg.x, cfg.dim, "--x");
    const Point y = parse_point(cfg.y, cfg.dim, "--y");
    const double lk = log_hermite_kernel(x, y, cfg.t);
    emit_record(cfg, o,
                {{"t", cfg.t},
                 {"alpha", alpha(cfg.t)},
                 {"log_k", lk},
                 {"k", std::exp(lk)},
                 {"log_h", log_heat_kernel(x, y, cfg.t)},
                 {"derivative_sign", derivative_sign(x, y, cfg.t)}});
    *o.summary << "kernel eval: log k_t = " << fmt(lk) << '\n';
  } else if (cfg.action == "tmax") {
    const Point x = parse_point(cfg.x, cfg.dim, "--x");
    const Point y = parse_point(cfg.y, cfg.dim, "--y");
    const CubePair ctx{GaussGrid::cube_containing(x), GaussGrid::cube_containing(y)};
    const TMaxResult r = t_max(x, y, ctx);
    emit_record(cfg, o,
                {{"t_m", r.t_m},
                 {"log_k_at_max", r.log_k_at_max},
                 {"bracket_lo", r.bracket.lo},
                 {"bracket_hi", r.bracket.hi},
                 {"iterations", r.iterations},
                 {"analytic_bracket", r.analytic_bracket},
                 {"layer_x", ctx.source.layer},
                 {"layer_y", ctx.target.layer},
                 {"taylor_factor", *r.taylor_factor}});
    *o.summary << "kernel tmax: t_m = " << fmt(r.t_m) << '\n';
  } else {
    const GaussGrid grid({cfg.dim, cfg.lmax});
    const GCube a = parse_cube_flag(cfg.cube, grid, "--cube");
    const GCube b = parse_cube_flag(cfg.cube2, grid, "--cube2");
    const KernelExtremum e =
        kernel_extremum_points(a.box(), b.box(), cfg.t, cfg.mode == "sup" ? Extremum::sup : Extremum::inf);
    emit_record(cfg, o,
                {{"mode", cfg.mode}, {"t", cfg.t}, {"log_value", e.log_value}, {"x", e.x}, {"y", e.y}});
    *o.summary << "kernel extremum: log " << cfg.mode << " = " << fmt(e.log_value) << '\n';
  }
  return 0;
}

inline int run_maximal(const RunConfig& cfg, Output& o) {
  const GaussGrid grid({cfg.dim, cfg.lmax});
  const GridFunction f = parse_function_spec(cfg.function, grid);
  const TimeGrid tg = cfg.time_grid();
  static const std::vector<std::string> ops = {"m", "mtheta", "mloc", "mfar+", "mfar-", "tstar", "tsharp"};
  if (std::find(ops.begin(), ops.end(), cfg.op) == ops.end())
    throw UsageError("--op: unknown operator '" + cfg.op + "'");
  std::vector<Point> points;
  if (!cfg.x.empty())
    points.push_back(parse_point(cfg.x, cfg.dim, "--x"));
  else
    for (const auto& c : grid.all_cubes()) points.push_back(c.center());

  auto eval = [&](const Point& x, std::string& parameter) -> double {
    parameter = "";
    if (cfg.op == "m") return maximal_classical(f, x);
    if (cfg.op == "mtheta") {
      parameter = "theta=" + fmt(cfg.theta);
      return maximal_theta(f, x, cfg.theta);
    }
    if (cfg.op == "mloc") return maximal_local(LocalOp::m, f, x);
    const TimeGrid tx = time_grid_for_cube(grid, f.grid().cube_at(x), tg);
    parameter = "tgrid=" + std::to_string(tx.points().size());
    if (cfg.op == "mfar+") return maximal_far_adapted(f, x, FarMode::plus, tx);
    if (cfg.op == "mfar-") return maximal_far_adapted(f, x, FarMode::minus, tx);
    if (cfg.op == "tstar") return heat_maximal(f, x, HeatVariant::hermite, tx);
    return heat_maximal(f, x, HeatVariant::sharp, tx);
  };

  double sup = 0.0;
  if (cfg.resolved_format() == "json") {
    ojson j = envelope(cfg);
    ojson rows = ojson::array();
    for (const auto& x : points) {
      std::string parameter;
      const double v = eval(x, parameter);
      sup = std::max(sup, v);
      rows.push_back({{"x", x}, {"operator", cfg.op}, {"parameter", parameter}, {"value", v}});
    }
    j["values"] = rows;
    *o.data << j.dump(1) << '\n';
  } else {
    csv_preamble(*o.data, cfg);
    write_operator_csv_header(*o.data, cfg.dim);
    for (const auto& x : points) {
      std::string parameter;
      const double v = eval(x, parameter);
      sup = std::max(sup, v);
      write_operator_csv_row(*o.data, x, cfg.op, parameter, v);
    }
  }
  *o.summary << "maximal " << cfg.op << ": " << points.size() << " points, max value " << fmt(sup) << '\n';
  return 0;
}

inline CubeFamily family_for(const RunConfig& cfg, const GaussGrid& grid) {
  const Box unit{Point(static_cast<std::size_t>(cfg.dim), 0.0), 1.0};
  if (cfg.family == "centered") return centered_family(cfg.dim, cfg.m_lo, cfg.m_hi);
  if (cfg.family == "subcubes") return dyadic_subcube_family(unit, cfg.depth);
  if (cfg.family == "dyadic") return all_dyadic_family(grid, cfg.depth);
  if (cfg.family == "near") return near_subcube_family(grid, cfg.depth);
  throw UsageError("--family: expected centered, subcubes, dyadic or near");
}

inline int run_weights(const RunConfig& cfg, Output& o) {
  const GaussGrid grid({cfg.dim, cfg.lmax});
  const WeightSpec w = parse_weight_spec(cfg.weight, cfg.dim, cfg.p);
  const bool json = cfg.resolved_format() == "json";
  if (cfg.weight_class == "appair") {
    Rng rng(cfg.seed);
    ojson rows = ojson::array();
    double plus = -std::numeric_limits<double>::infinity(), minus = plus;
    if (!json) {
      csv_preamble(*o.data, cfg);
      *o.data << "pair,layer_r,layer_r_prime,log_weight_factor,log_max_plus,log_max_minus\n";
    }
    for (int i = 0; i < cfg.samples; ++i) {
      const FarPair fp = sample_far_pair(rng, cfg.dim, i % 4);
      std::vector<std::pair<Point, Point>> pts{{fp.x, fp.y}};
      const FarPairReport r = far_pair_bound(w, fp.r, fp.r_prime, pts);
      plus = std::max(plus, r.log_max_plus);
      minus = std::max(minus, r.log_max_minus);
      if (json)
        rows.push_back({{"pair", i},
                        {"r", cube_json(fp.r)},
                        {"r_prime", cube_json(fp.r_prime)},
                        {"log_weight_factor", r.log_weight_factor},
                        {"log_max_plus", finite_or_null(r.log_max_plus)},
                        {"log_max_minus", finite_or_null(r.log_max_minus)}});
      else
        *o.data << i << ',' << fp.r.layer << ',' << fp.r_prime.layer << ',' << fmt(r.log_weight_factor) << ','
                << fmt(r.log_max_plus) << ',' << fmt(r.log_max_minus) << '\n';
    }
    if (json) {
      ojson j = envelope(cfg);
      j["weight"] = w.describe();
      j["pairs"] = rows;
      j["log_max_plus"] = finite_or_null(plus);
      j["log_max_minus"] = finite_or_null(minus);
      *o.data << j.dump(1) << '\n';
    }
    *o.summary << "weights appair: " << cfg.samples << " far pairs, log max+ " << fmt(plus) << ", log max- "
               << fmt(minus) << '\n';
    return 0;
  }

  ApReport rep;
  if (cfg.weight_class == "ap")
    rep = ap_constant(w, family_for(cfg, grid));
  else if (cfg.weight_class == "aptheta")
    rep = ap_theta_constant(w, cfg.theta, family_for(cfg, grid));
  else if (cfg.weight_class == "aploc")
    rep = ap_constant(w, near_subcube_family(grid, cfg.depth));
  else
    throw UsageError("--class: expected ap, aptheta, aploc or appair");
  if (json) {
    ojson j = envelope(cfg);
    j["weight"] = w.describe();
    j["family"] = rep.family;
    j["theta"] = rep.theta;
    ojson rows = ojson::array();
    for (const auto& e : rep.table)
      rows.push_back({{"cube_id", e.id},
                      {"sidelength", e.side},
                      {"center_norm", e.center_norm},
                      {"ratio", e.ratio},
                      {"psi_theta", e.psi},
                      {"normalized_ratio", e.normalized}});
    j["table"] = rows;
    j["constant"] = rep.constant;
    j["argmax"] = rep.argmax;
    j["skipped"] = rep.skipped;
    *o.data << j.dump(1) << '\n';
  } else {
    csv_preamble(*o.data, cfg);
    write_ap_csv(*o.data, rep);
  }
  *o.summary << "weights " << cfg.weight_class << " (" << rep.family << "): constant " << fmt(rep.constant)
             << " at " << rep.argmax << " over " << rep.table.size() << " cubes";
  if (rep.skipped) *o.summary << ", " << rep.skipped << " skipped";
  *o.summary << '\n';
  return 0;
}

inline int run_verify(const RunConfig& cfg, Output& o) {
  VerifyConfig vc;
  vc.dim = cfg.dim;
  vc.seed = cfg.seed;
  vc.tgrid = cfg.time_grid();
  const std::vector<std::string> names = cfg.all ? check_names() : cfg.checks;
  for (const auto& n : names)
    if (std::find(check_names().begin(), check_names().end(), n) == check_names().end())
      throw UsageError("--check: unknown check '" + n + "'");
  std::vector<CheckReport> reports;
  for (const auto& n : names) reports.push_back(run_check(n, vc));
  if (cfg.resolved_format() == "json") {
    *o.data << report_json(reports, vc, cfg.to_json()).dump(1) << '\n';
  } else {
    csv_preamble(*o.data, cfg);
    write_text_report(*o.data, reports, false);
  }
  write_text_report(*o.summary, reports, true);
  bool ok = true;
  for (const auto& r : reports) ok = ok && r.acceptable();
  return ok ? 0 : 1;
}

}  // namespace detail

/// Runs one command. Returns the process exit code; module errors become 2,
/// failed verification 1.
inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    detail::Output o;
    detail::open_output(cfg, out, err, o);
    int code = 0;
    if (cfg.command == "grid") code = detail::run_grid(cfg, o);
    else if (cfg.command == "kernel") code = detail::run_kernel(cfg, o);
    else if (cfg.command == "maximal") code = detail::run_maximal(cfg, o);
    else if (cfg.command == "weights") code = detail::run_weights(cfg, o);
    else if (cfg.command == "verify") code = detail::run_verify(cfg, o);
    else throw UsageError("unknown command '" + cfg.command + "'");
    o.data->flush();
    return code;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

/// Full entry point: parse, then run.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  try {
    cfg = parse_config(argc, argv);
  } catch (const InfoRequested& info) {
    out << info.text;
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  return run(cfg, out, err);
}

}  // namespace hmx::cli
