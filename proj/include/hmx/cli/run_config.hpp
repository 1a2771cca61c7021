#pragma once

// Command-line configuration: strict flag parsing, a key=value file form and
// the round trip between the two.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hmx/errors.hpp"
#include "hmx/time_grid.hpp"

#ifndef HMX_VERSION_STRING
#define HMX_VERSION_STRING "0.0.0"
#endif

namespace hmx::cli {

struct RunConfig {
  std::string command;  // grid | kernel | maximal | weights | verify
  std::string action;   // dump | near | qcube | eval | tmax | extremum | sweep; empty for verify

  int dim = 1;
  int lmax = 6;
  double t_min = 1e-4;
  double t_max = 1e8;
  int points_per_decade = 40;
  std::string weight = "one";
  double theta = 0.0;
  double p = 2.0;
  std::uint64_t seed = 42;
  std::string output;  // empty: stdout
  std::string format;  // csv | json; empty picks the command's default

  std::string cube;      // "l k i_1 .. i_d"
  std::string cube2;
  std::string x;         // "x_1,..,x_d"
  std::string y;
  double t = 1.0;
  std::string mode = "sup";
  std::string op = "m";
  std::string function = "random:42";
  std::string weight_class = "ap";
  std::string family = "centered";
  int depth = 3;
  int m_lo = 1;
  int m_hi = 12;
  int samples = 40;
  std::vector<std::string> checks;
  bool all = false;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  TimeGrid time_grid() const { return TimeGrid{t_min, t_max, points_per_decade, {}}; }

  std::string resolved_format() const {
    if (!format.empty()) return format;
    return command == "maximal" || command == "weights" ? "csv" : "json";
  }

  /// Stable key order; doubles at full precision so parsing restores them exactly.
  std::vector<std::pair<std::string, std::string>> items() const {
    auto num = [](double v) {
      std::ostringstream os;
      os << std::setprecision(17) << v;
      return os.str();
    };
    std::string joined;
    for (std::size_t i = 0; i < checks.size(); ++i) joined += (i ? "," : "") + checks[i];
    return {{"command", command},
            {"action", action},
            {"d", std::to_string(dim)},
            {"lmax", std::to_string(lmax)},
            {"tmin", num(t_min)},
            {"tmax", num(t_max)},
            {"ppd", std::to_string(points_per_decade)},
            {"weight", weight},
            {"theta", num(theta)},
            {"p", num(p)},
            {"seed", std::to_string(seed)},
            {"output", output},
            {"format", format},
            {"cube", cube},
            {"cube2", cube2},
            {"x", x},
            {"y", y},
            {"t", num(t)},
            {"mode", mode},
            {"op", op},
            {"function", function},
            {"class", weight_class},
            {"family", family},
            {"depth", std::to_string(depth)},
            {"mlo", std::to_string(m_lo)},
            {"mhi", std::to_string(m_hi)},
            {"samples", std::to_string(samples)},
            {"check", joined},
            {"all", all ? "true" : "false"}};
  }

  std::string to_text() const {
    std::string out;
    for (const auto& [k, v] : items()) out += k + "=" + v + "\n";
    return out;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : items()) j[k] = v;
    return j;
  }
};

/// --help or --version was requested; `text` is what to print.
struct InfoRequested {
  std::string text;
};

namespace detail {

inline const std::map<std::string, std::vector<std::string>>& command_actions() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"grid", {"dump", "near", "qcube"}},
      {"kernel", {"eval", "tmax", "extremum"}},
      {"maximal", {"eval"}},
      {"weights", {"sweep"}},
      {"verify", {}},
  };
  return table;
}

inline void validate(const RunConfig& c) {
  if (c.dim < 1 || c.dim > 3) throw UsageError("--d: dimension must be 1, 2 or 3");
  if (c.lmax < 1 || c.lmax > 28) throw UsageError("--lmax: must lie in [1, 28]");
  if (!(c.p > 1.0) || !std::isfinite(c.p)) throw UsageError("--p: requires 1 < p < infinity");
  if (!(c.theta >= 0.0) || !std::isfinite(c.theta)) throw UsageError("--theta: must be >= 0");
  if (!(c.t > 0.0) || !std::isfinite(c.t)) throw UsageError("--t: must be positive");
  if (!(c.t_min > 0.0) || !(c.t_max > c.t_min)) throw UsageError("--tmin/--tmax: need 0 < tmin < tmax");
  if (c.points_per_decade < 1) throw UsageError("--ppd: must be >= 1");
  if (c.depth < 0 || c.depth > 12) throw UsageError("--depth: must lie in [0, 12]");
  if (c.m_lo > c.m_hi) throw UsageError("--mlo/--mhi: need mlo <= mhi");
  if (c.samples < 1) throw UsageError("--samples: must be >= 1");
  if (!c.format.empty() && c.format != "csv" && c.format != "json")
    throw UsageError("--format: expected csv or json, got '" + c.format + "'");
  if (c.mode != "sup" && c.mode != "inf") throw UsageError("--mode: expected sup or inf");
  if (c.command.empty()) throw UsageError("no command given (grid, kernel, maximal, weights, verify)");
  const auto& table = command_actions();
  const auto it = table.find(c.command);
  if (it == table.end()) throw UsageError("unknown command '" + c.command + "'");
  if (it->second.empty() ? !c.action.empty()
                         : std::find(it->second.begin(), it->second.end(), c.action) == it->second.end())
    throw UsageError("command '" + c.command + "' does not take action '" + c.action + "'");
  if (c.command == "verify" && !c.all && c.checks.empty()) throw UsageError("verify: give --check NAME or --all");
}

inline RunConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open '" + path + "'");
  RunConfig def;
  std::map<std::string, std::string> known;
  for (const auto& [k, v] : def.items()) known[k] = v;
  std::map<std::string, std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("--config: line " + std::to_string(lineno) + " is not key=value");
    const std::string key = line.substr(0, eq);
    if (!known.count(key)) throw UsageError("--config: unknown key '" + key + "'");
    seen[key] = line.substr(eq + 1);
  }
  RunConfig c;
  auto get = [&](const char* k) -> const std::string* {
    const auto it = seen.find(k);
    return it == seen.end() ? nullptr : &it->second;
  };
  auto as_double = [&](const char* k, double& dst) {
    if (const auto* v = get(k)) {
      std::size_t pos = 0;
      try {
        dst = std::stod(*v, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != v->size()) throw UsageError(std::string("--config: bad number for '") + k + "'");
    }
  };
  auto as_int = [&](const char* k, auto& dst) {
    if (const auto* v = get(k)) {
      std::size_t pos = 0;
      long long n = 0;
      try {
        n = std::stoll(*v, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != v->size()) throw UsageError(std::string("--config: bad integer for '") + k + "'");
      dst = static_cast<std::remove_reference_t<decltype(dst)>>(n);
    }
  };
  auto as_string = [&](const char* k, std::string& dst) {
    if (const auto* v = get(k)) dst = *v;
  };
  as_string("command", c.command);
  as_string("action", c.action);
  as_int("d", c.dim);
  as_int("lmax", c.lmax);
  as_double("tmin", c.t_min);
  as_double("tmax", c.t_max);
  as_int("ppd", c.points_per_decade);
  as_string("weight", c.weight);
  as_double("theta", c.theta);
  as_double("p", c.p);
  if (const auto* v = get("seed")) {
    std::size_t pos = 0;
    try {
      c.seed = std::stoull(*v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != v->size()) throw UsageError("--config: bad integer for 'seed'");
  }
  as_string("output", c.output);
  as_string("format", c.format);
  as_string("cube", c.cube);
  as_string("cube2", c.cube2);
  as_string("x", c.x);
  as_string("y", c.y);
  as_double("t", c.t);
  as_string("mode", c.mode);
  as_string("op", c.op);
  as_string("function", c.function);
  as_string("class", c.weight_class);
  as_string("family", c.family);
  as_int("depth", c.depth);
  as_int("mlo", c.m_lo);
  as_int("mhi", c.m_hi);
  as_int("samples", c.samples);
  if (const auto* v = get("check")) {
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) c.checks.push_back(item);
  }
  if (const auto* v = get("all")) {
    if (*v != "true" && *v != "false") throw UsageError("--config: 'all' must be true or false");
    c.all = *v == "true";
  }
  return c;
}

}  // namespace detail

/// Parses argv (argv[0] is the program name). A `--config FILE` supplies
/// starting values which explicit flags then override.
inline RunConfig parse_config(const std::vector<std::string>& args) {
  RunConfig c;
  std::vector<std::string> rest;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config: missing file name");
      c = detail::read_config_file(args[++i]);
    } else if (args[i].rfind("--config=", 0) == 0) {
      c = detail::read_config_file(args[i].substr(9));
    } else {
      rest.push_back(args[i]);
    }
  }

  CLI::App app{"Gaussian-grid maximal operators for the harmonic oscillator", "hmx"};
  app.set_version_flag("--version", std::string("hmx ") + HMX_VERSION_STRING);
  app.require_subcommand(0, 1);
  auto common = [&](CLI::App* a) {
    a->add_option("--d,--dim", c.dim, "dimension");
    a->add_option("--lmax", c.lmax, "truncation layer L_max");
    a->add_option("--tmin", c.t_min, "smallest time of the time grid");
    a->add_option("--tmax", c.t_max, "largest time of the time grid");
    a->add_option("--ppd", c.points_per_decade, "time-grid points per decade");
    a->add_option("--weight", c.weight, "one | onepluspow:G | pow:G | exp:G | lattice:SEED[:CELLS], optional *SCALE");
    a->add_option("--theta", c.theta, "theta >= 0");
    a->add_option("--p", c.p, "exponent, 1 < p < infinity");
    a->add_option("--seed", c.seed, "random seed");
    a->add_option("-o,--output", c.output, "output file (default stdout)");
    a->add_option("--format", c.format, "csv | json");
  };
  common(&app);

  static const std::map<std::string, std::string> about = {
      {"grid", "dump the truncated grid, N(R) or Q_t(R)"},
      {"kernel", "evaluate k_t, t_m or a cube extremum"},
      {"maximal", "evaluate a maximal operator on a grid function"},
      {"verify", "run numerical checks and write a report"},
      {"weights", "sweep A_p-type constants over a cube family"},
  };
  std::vector<CLI::App*> leaves;
  for (const auto& [cmd, actions] : detail::command_actions()) {
    CLI::App* sub = app.add_subcommand(cmd, about.at(cmd));
    sub->fallthrough();
    if (actions.empty()) {
      leaves.push_back(sub);
      continue;
    }
    sub->require_subcommand(1);
    for (const auto& a : actions) {
      CLI::App* leaf = sub->add_subcommand(a);
      leaf->fallthrough();
      leaves.push_back(leaf);
    }
  }
  auto leaf = [&](const std::string& cmd, const std::string& action) {
    CLI::App* sub = app.get_subcommand(cmd);
    return action.empty() ? sub : sub->get_subcommand(action);
  };
  for (const char* a : {"near", "qcube"}) leaf("grid", a)->add_option("--cube", c.cube, "cube as 'l k i_1 .. i_d'");
  leaf("grid", "qcube")->add_option("--t", c.t, "time");
  for (const char* a : {"eval", "tmax"}) {
    leaf("kernel", a)->add_option("--x", c.x, "point x_1,..,x_d");
    leaf("kernel", a)->add_option("--y", c.y, "point y_1,..,y_d");
  }
  leaf("kernel", "eval")->add_option("--t", c.t, "time");
  {
    CLI::App* e = leaf("kernel", "extremum");
    e->add_option("--cube", c.cube, "first cube 'l k i_1 .. i_d'");
    e->add_option("--cube2", c.cube2, "second cube");
    e->add_option("--t", c.t, "time");
    e->add_option("--mode", c.mode, "sup | inf");
  }
  {
    CLI::App* m = leaf("maximal", "eval");
    m->add_option("--op", c.op, "m | mtheta | mloc | mfar+ | mfar- | tstar | tsharp");
    m->add_option("--function,--f", c.function,
                  "const:C | indicator:L,I.. | power:A | onepluspow:G | exp:G | random:SEED[:DENSITY] | file:PATH");
    m->add_option("--x", c.x, "evaluation point (default: every cube centre)");
  }
  {
    CLI::App* w = leaf("weights", "sweep");
    w->add_option("--class", c.weight_class, "ap | aptheta | aploc | appair");
    w->add_option("--family", c.family, "centered | subcubes | dyadic | near");
    w->add_option("--depth", c.depth, "subdivision depth");
    w->add_option("--mlo", c.m_lo, "first centred cube exponent");
    w->add_option("--mhi", c.m_hi, "last centred cube exponent");
    w->add_option("--samples", c.samples, "far pairs for appair");
  }
  {
    CLI::App* v = leaf("verify", "");
    v->add_option("--check", c.checks, "kernel | tmax | ratio | domination | weights (repeatable)")->delimiter(',');
    v->add_flag("--all", c.all, "run every check");
  }

  std::vector<std::string> reversed(rest.rbegin(), rest.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw InfoRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw InfoRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::CallForVersion&) {
    throw InfoRequested{std::string("hmx ") + HMX_VERSION_STRING + "\n"};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  for (CLI::App* l : leaves)
    if (l->parsed()) {
      CLI::App* parent = l->get_parent();
      if (parent == &app) {
        c.command = l->get_name();
        c.action.clear();
      } else {
        c.command = parent->get_name();
        c.action = l->get_name();
      }
    }
  if (c.command == "verify" && c.all) c.checks.clear();
  detail::validate(c);
  return c;
}

inline RunConfig parse_config(int argc, const char* const* argv) {
  return parse_config(std::vector<std::string>(argv, argv + argc));
}

}  // namespace hmx::cli
