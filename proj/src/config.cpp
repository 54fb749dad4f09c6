#include "bcpr/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "bcpr/edfa.hpp"
#include "bcpr/io.hpp"

namespace bcpr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(x))
    throw std::invalid_argument("'" + v + "' is not a finite number");
  return x;
}

long to_long(const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE)
    throw std::invalid_argument("'" + v + "' is not an integer");
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw std::invalid_argument("'" + v + "' is not a boolean");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

Setter real(double RunConfig::*field, double lo, double hi, bool open_lo = false) {
  return [=](RunConfig& c, const std::string& v) {
    const double x = to_double(v);
    if ((open_lo ? x <= lo : x < lo) || x > hi) {
      std::ostringstream msg;
      msg << "value " << x << " outside " << (open_lo ? "(" : "[") << lo << ", " << hi << "]";
      throw std::invalid_argument(msg.str());
    }
    c.*field = x;
  };
}

template <typename Int>
Setter integer(Int RunConfig::*field, long lo, long hi) {
  return [=](RunConfig& c, const std::string& v) {
    const long x = to_long(v);
    if (x < lo || x > hi) {
      std::ostringstream msg;
      msg << "value " << x << " outside [" << lo << ", " << hi << "]";
      throw std::invalid_argument(msg.str());
    }
    c.*field = static_cast<Int>(x);
  };
}

Setter fluid(double FluidProps::*field, double lo, double hi, bool open_lo) {
  return [=](RunConfig& c, const std::string& v) {
    const double x = to_double(v);
    if ((open_lo ? x <= lo : x < lo) || x > hi)
      throw std::invalid_argument("value " + v + " out of range");
    c.fluid.*field = x;
  };
}

Setter schedule(double Schedule::*field) {
  return [=](RunConfig& c, const std::string& v) {
    const double x = to_double(v);
    if (!(x > 0.0)) throw std::invalid_argument("value must be positive");
    c.schedule.*field = x;
  };
}

Setter flag(bool RunConfig::*field) {
  return [=](RunConfig& c, const std::string& v) { c.*field = to_bool(v); };
}

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"mesh.nx", integer(&RunConfig::nx, 1, 100000)},
      {"mesh.ny", integer(&RunConfig::ny, 1, 100000)},
      {"mesh.nz", integer(&RunConfig::nz, 1, 100000)},
      {"mesh.dx", real(&RunConfig::dx, 0.0, kInf, true)},
      {"mesh.dy", real(&RunConfig::dy, 0.0, kInf, true)},
      {"mesh.dz", real(&RunConfig::dz, 0.0, kInf, true)},
      {"mesh.dome_amplitude", real(&RunConfig::dome_amplitude, 0.0, kInf)},
      {"mesh.dome_radius", real(&RunConfig::dome_radius, 0.0, kInf)},
      {"rock.perm", real(&RunConfig::perm, 0.0, kInf, true)},
      {"rock.phi0", real(&RunConfig::phi0, 0.0, 1.0, true)},
      {"rock.cr", real(&RunConfig::cr, 0.0, kInf)},
      {"rock.perm_file", [](RunConfig& c, const std::string& v) { c.perm_file = v; }},
      {"rock.phi_floor", real(&RunConfig::phi_floor, 0.0, 1.0, true)},
      {"field.synthetic", flag(&RunConfig::synthetic_field)},
      {"field.decades", real(&RunConfig::field_decades, 0.0, 20.0)},
      {"field.anisotropy", real(&RunConfig::field_anisotropy, 0.0, 1e6, true)},
      {"field.seed", integer(&RunConfig::field_seed, 0, std::numeric_limits<long>::max())},
      {"fluid.mu_o", fluid(&FluidProps::mu_o, 0.0, kInf, true)},
      {"fluid.mu_w", fluid(&FluidProps::mu_w, 0.0, kInf, true)},
      {"fluid.gamma_o", fluid(&FluidProps::gamma_o, 0.0, kInf, false)},
      {"fluid.gamma_w", fluid(&FluidProps::gamma_w, 0.0, kInf, false)},
      {"fluid.Swr", fluid(&FluidProps::Swr, 0.0, 1.0, false)},
      {"fluid.Sor", fluid(&FluidProps::Sor, 0.0, 1.0, false)},
      {"fluid.corey_exp", fluid(&FluidProps::corey_exp, 1.0, 10.0, false)},
      {"wells.rate", real(&RunConfig::injection_rate, 0.0, kInf)},
      {"wells.bhp", real(&RunConfig::producer_bhp, -kInf, kInf)},
      {"wells.radius", real(&RunConfig::well_radius, 0.0, kInf, true)},
      {"init.p", real(&RunConfig::p_init, -kInf, kInf)},
      {"init.sw", real(&RunConfig::sw_init, 0.0, 1.0)},
      {"schedule.t_end", schedule(&Schedule::t_end)},
      {"schedule.dt_init", schedule(&Schedule::dt_init)},
      {"schedule.dt_max", schedule(&Schedule::dt_max)},
      {"schedule.growth",
       [](RunConfig& c, const std::string& v) {
         const double x = to_double(v);
         if (x < 1.0) throw std::invalid_argument("growth must be >= 1");
         c.schedule.growth = x;
       }},
      {"schedule.max_steps",
       [](RunConfig& c, const std::string& v) {
         const long x = to_long(v);
         if (x < 0) throw std::invalid_argument("max_steps must be >= 0");
         c.schedule.max_steps = static_cast<int>(x);
       }},
      {"schedule.max_cuts",
       [](RunConfig& c, const std::string& v) {
         const long x = to_long(v);
         if (x < 0 || x > 60) throw std::invalid_argument("max_cuts must be in [0, 60]");
         c.schedule.max_cuts = static_cast<int>(x);
       }},
      {"physics.gravity", flag(&RunConfig::gravity)},
      {"solver.tol_linear", real(&RunConfig::tol_linear, 0.0, 1.0, true)},
      {"solver.gmres_maxit", integer(&RunConfig::gmres_maxit, 1, 100000)},
      {"solver.tol_nl_abs", real(&RunConfig::tol_nl_abs, 0.0, kInf, true)},
      {"solver.tol_nl_rel", real(&RunConfig::tol_nl_rel, 0.0, 1.0, true)},
      {"solver.newton_maxit", integer(&RunConfig::newton_maxit, 1, 1000)},
      {"solver.ds_max", real(&RunConfig::ds_max, 0.0, 1.0, true)},
      {"solver.inner_tol", real(&RunConfig::inner_tol, 0.0, 1.0, true)},
      {"solver.inner_maxit", integer(&RunConfig::inner_maxit, 1, 10000)},
      {"solver.pattern",
       [](RunConfig& c, const std::string& v) {
         PatternSpec::parse(v);
         c.pattern = v;
       }},
      {"solver.reuse", flag(&RunConfig::reuse)},
      {"output.dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& required_config_keys() {
  static const std::vector<std::string> keys = {"mesh.nx", "mesh.ny", "mesh.nz",       "mesh.dx",
                                                "mesh.dy", "mesh.dz", "schedule.t_end"};
  return keys;
}

RunConfig parse_config_text(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  const auto& table = setters();
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }

  std::vector<std::string> missing;
  for (const auto& k : required_config_keys())
    if (!seen.count(k)) missing.push_back(k);
  if (!missing.empty()) {
    std::string msg = source + ": missing required keys:";
    for (const auto& k : missing) msg += " " + k;
    throw ConfigError(msg);
  }
  if (cfg.schedule.dt_init > cfg.schedule.dt_max)
    throw ConfigError(source + ": schedule.dt_init exceeds schedule.dt_max");
  if (!(cfg.fluid.Swr + cfg.fluid.Sor < 1.0))
    throw ConfigError(source + ": fluid.Swr + fluid.Sor must be below 1");
  if (!cfg.perm_file.empty() && cfg.synthetic_field)
    throw ConfigError(source + ": rock.perm_file and field.synthetic are exclusive");
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

Scenario make_scenario(const RunConfig& cfg, int threads) {
  Scenario sc = build_five_spot(cfg.nx, cfg.ny, cfg.nz, Vec3(cfg.dx, cfg.dy, cfg.dz),
                                cfg.injection_rate, cfg.producer_bhp, cfg.gravity);
  Model& m = sc.model;
  if (cfg.dome_amplitude > 0.0) {
    const double lx = cfg.nx * cfg.dx, ly = cfg.ny * cfg.dy;
    const double radius = cfg.dome_radius > 0.0 ? cfg.dome_radius : 0.5 * std::min(lx, ly);
    m.mesh = deform_dome(m.mesh, cfg.dome_amplitude, radius, Eigen::Vector2d(0.5 * lx, 0.5 * ly));
  }
  if (!cfg.perm_file.empty()) {
    m.rock = load_perm_ascii(cfg.perm_file, cfg.nx, cfg.ny, cfg.nz, cfg.phi_floor, cfg.cr,
                             cfg.p_init);
  } else if (cfg.synthetic_field) {
    FieldSpec fs;
    fs.mean_log10_k = std::log10(cfg.perm);
    fs.decades = cfg.field_decades;
    fs.anisotropy = cfg.field_anisotropy;
    fs.seed = cfg.field_seed;
    fs.phi_mean = cfg.phi0;
    m.rock = generate_lognormal_field(cfg.nx, cfg.ny, cfg.nz, fs, cfg.cr, cfg.p_init);
  } else {
    m.rock = RockProps::uniform(m.mesh.num_cells(), cfg.perm, cfg.phi0, cfg.cr, cfg.p_init);
  }
  m.fluid = cfg.fluid;
  // Wells are rebuilt so their indices follow the final geometry and rock.
  for (auto& w : m.wells) {
    w.radius = cfg.well_radius;
    w = make_well(m.mesh, m.rock, w.name, w.cells, w.radius, w.control, w.target, w.injector);
  }
  m.prepare();

  sc.schedule = cfg.schedule;
  sc.p_init = cfg.p_init;
  sc.sw_init = cfg.sw_init;
  NewtonSettings& ns = sc.newton;
  ns.tol_abs = cfg.tol_nl_abs;
  ns.tol_rel = cfg.tol_nl_rel;
  ns.max_iter = cfg.newton_maxit;
  ns.ds_max = cfg.ds_max;
  ns.linear.tol = cfg.tol_linear;
  ns.linear.maxit = cfg.gmres_maxit;
  ns.bcpr.pattern = PatternSpec::parse(cfg.pattern);
  ns.bcpr.inner_tol = cfg.inner_tol;
  ns.bcpr.inner_maxit = cfg.inner_maxit;
  ns.bcpr.reuse = cfg.reuse;
  ns.bcpr.threads = threads;
  return sc;
}

}  // namespace bcpr
