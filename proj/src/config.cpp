#include "phasedrift/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace phasedrift {

namespace pt = boost::property_tree;

std::string to_string(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "json"; }

OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw ConfigError(fmt::format("unknown output format '{}' (csv or json)", s));
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"corr", {"family", "sigma_v", "sigma_s", "ell", "rho_cross", "cross_shift"}},
      {"field", {"n_modes", "seed", "clip_sigmas"}},
      {"sim",
       {"delta", "delta_sweep", "x0", "k0", "t_end", "dt_factor", "n_paths", "base_seed",
        "quenched", "checkpoints", "limit_dt"}},
      {"stopping", {"eps1", "eps2", "eps3", "eps4"}},
      {"output", {"dir", "format"}},
      {"coeffs", {"k", "fd_step"}},
      {"sphere", {"theta_grid", "dt", "safety", "q0"}},
  };
  return keys;
}

std::string where(const std::string& key) { return fmt::format("config key '{}'", key); }

double to_double(const std::string& key, std::string s) {
  boost::algorithm::trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", where(key), s));
  }
  return v;
}

template <class Int>
Int to_int(const std::string& key, std::string s) {
  boost::algorithm::trim(s);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(fmt::format("{}: '{}' is not an integer", where(key), s));
  }
  return v;
}

bool to_bool(const std::string& key, std::string s) {
  boost::algorithm::trim(s);
  boost::algorithm::to_lower(s);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", where(key), s));
}

std::vector<double> to_list(const std::string& key, const std::string& s) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, s, boost::is_any_of(","));
  std::vector<double> out;
  for (const auto& p : parts) {
    if (boost::algorithm::trim_copy(p).empty()) continue;
    out.push_back(to_double(key, p));
  }
  return out;
}

Vec3 to_vec(const std::string& key, const std::string& s) {
  const auto v = to_list(key, s);
  if (v.size() != 3) throw ConfigError(fmt::format("{}: expected 3 components", where(key)));
  return {v[0], v[1], v[2]};
}

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }
std::string fmt_vec(const Vec3& v) {
  return fmt::format("{},{},{}", fmt_double(v.x()), fmt_double(v.y()), fmt_double(v.z()));
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("malformed config: {}", e.message()));
  }

  RunConfig c;
  for (const auto& [section, body] : tree) {
    const auto sec = known_keys().find(section);
    if (sec == known_keys().end()) {
      throw ConfigError(fmt::format("unknown config section or top-level key '{}'", section));
    }
    for (const auto& [name, node] : body) {
      const std::string key = section + "." + name;
      if (!sec->second.contains(name)) throw ConfigError(fmt::format("unknown {}", where(key)));
      const std::string v = node.get_value<std::string>();
      if (key == "corr.family") c.corr.family = parse_family(boost::algorithm::trim_copy(v));
      else if (key == "corr.sigma_v") c.corr.sigma_v = to_double(key, v);
      else if (key == "corr.sigma_s") c.corr.sigma_s = to_double(key, v);
      else if (key == "corr.ell") c.corr.ell = to_double(key, v);
      else if (key == "corr.rho_cross") c.corr.rho_cross = to_double(key, v);
      else if (key == "corr.cross_shift") c.corr.cross_shift = to_vec(key, v);
      else if (key == "field.n_modes") c.n_modes = to_int<int>(key, v);
      else if (key == "field.seed") {
        const std::string t = boost::algorithm::trim_copy(v);
        if (t == "none" || t.empty()) c.field_seed.reset();
        else c.field_seed = to_int<std::uint64_t>(key, t);
      }
      else if (key == "field.clip_sigmas") {
        const std::string t = boost::algorithm::trim_copy(v);
        if (t == "none" || t.empty()) c.clip_sigmas.reset();
        else c.clip_sigmas = to_double(key, t);
      }
      else if (key == "sim.delta") c.delta = to_double(key, v);
      else if (key == "sim.delta_sweep") c.delta_sweep = to_list(key, v);
      else if (key == "sim.x0") c.x0 = to_vec(key, v);
      else if (key == "sim.k0") c.k0 = to_vec(key, v);
      else if (key == "sim.t_end") c.t_end = to_double(key, v);
      else if (key == "sim.dt_factor") c.dt_factor = to_double(key, v);
      else if (key == "sim.n_paths") c.n_paths = to_int<int>(key, v);
      else if (key == "sim.base_seed") c.base_seed = to_int<std::uint64_t>(key, v);
      else if (key == "sim.quenched") c.quenched = to_bool(key, v);
      else if (key == "sim.checkpoints") c.checkpoints = to_list(key, v);
      else if (key == "sim.limit_dt") {
        const std::string t = boost::algorithm::trim_copy(v);
        if (t == "auto" || t.empty()) c.limit_dt.reset();
        else c.limit_dt = to_double(key, t);
      }
      else if (key == "stopping.eps1") c.stopping.eps1 = to_double(key, v);
      else if (key == "stopping.eps2") c.stopping.eps2 = to_double(key, v);
      else if (key == "stopping.eps3") c.stopping.eps3 = to_double(key, v);
      else if (key == "stopping.eps4") c.stopping.eps4 = to_double(key, v);
      else if (key == "output.dir") c.out_dir = boost::algorithm::trim_copy(v);
      else if (key == "output.format") c.format = parse_format(boost::algorithm::trim_copy(v));
      else if (key == "coeffs.k") {
        std::vector<std::string> parts;
        boost::algorithm::split(parts, v, boost::is_any_of(";"));
        c.coeff_k.clear();
        for (const auto& p : parts) {
          if (!boost::algorithm::trim_copy(p).empty()) c.coeff_k.push_back(to_vec(key, p));
        }
      }
      else if (key == "coeffs.fd_step") c.fd_step = to_double(key, v);
      else if (key == "sphere.theta_grid") c.theta_grid = to_int<int>(key, v);
      else if (key == "sphere.dt") {
        const std::string t = boost::algorithm::trim_copy(v);
        if (t == "auto" || t.empty()) c.sphere_dt.reset();
        else c.sphere_dt = to_double(key, t);
      }
      else if (key == "sphere.safety") c.sphere_safety = to_double(key, v);
      else if (key == "sphere.q0") c.sphere_q0 = boost::algorithm::trim_copy(v);
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  // a run manifest carries the canonical config text
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("malformed manifest '{}': {}", path, e.what()));
    }
    if (!j.contains("config") || !j["config"].is_string()) {
      throw ConfigError(fmt::format("manifest '{}' has no config text", path));
    }
    return parse_config(j["config"].get<std::string>());
  }
  return parse_config(text);
}

void RunConfig::validate() const {
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("sim.delta must lie in (0, 1]");
  for (std::size_t i = 0; i < delta_sweep.size(); ++i) {
    if (!(delta_sweep[i] > 0.0 && delta_sweep[i] <= 1.0)) {
      throw ConfigError("sim.delta_sweep entries must lie in (0, 1]");
    }
    if (i > 0 && !(delta_sweep[i] < delta_sweep[i - 1])) {
      throw ConfigError("sim.delta_sweep must be strictly decreasing");
    }
  }
  if (n_paths < 2) throw ConfigError("sim.n_paths must be >= 2");
  if (n_modes < 1) throw ConfigError("field.n_modes must be >= 1");
  if (clip_sigmas && !(*clip_sigmas > 0.0)) throw ConfigError("field.clip_sigmas must be positive");
  if (!(t_end >= 0.0)) throw ConfigError("sim.t_end must be >= 0");
  if (!(dt_factor > 0.0 && dt_factor <= kDefaultDtFactor * (1.0 + 1e-12))) {
    throw ConfigError(fmt::format("sim.dt_factor must lie in (0, {}]", kDefaultDtFactor));
  }
  if (!(k0.norm() > 0.0)) throw ConfigError("sim.k0 must be nonzero");
  for (double t : checkpoints) {
    if (!(t >= 0.0 && t <= t_end)) throw ConfigError("sim.checkpoints must lie in [0, t_end]");
  }
  if (limit_dt && !(*limit_dt > 0.0)) throw ConfigError("sim.limit_dt must be positive");
  stopping.validate();
  if (coeff_k.empty()) throw ConfigError("coeffs.k needs at least one vector");
  if (!(fd_step > 0.0)) throw ConfigError("coeffs.fd_step must be positive");
  if (theta_grid < 4) throw ConfigError("sphere.theta_grid must be >= 4");
  if (sphere_dt && !(*sphere_dt > 0.0)) throw ConfigError("sphere.dt must be positive");
  if (!(sphere_safety > 0.0 && sphere_safety <= 1.0)) {
    throw ConfigError("sphere.safety must lie in (0, 1]");
  }
  if (sphere_q0 != "one" && sphere_q0 != "cos") throw ConfigError("sphere.q0 must be one or cos");
  if (out_dir.empty()) throw ConfigError("output.dir must not be empty");
}

DeltaEnsembleParams RunConfig::delta_params(double d) const {
  DeltaEnsembleParams p;
  p.delta = d;
  p.x0 = x0;
  p.k0 = k0;
  p.t_end = t_end;
  p.dt_factor = dt_factor;
  p.n_paths = n_paths;
  p.base_seed = base_seed;
  p.checkpoints = checkpoints;
  p.n_modes = n_modes;
  p.field_seed = field_seed;
  p.clip_sigmas = clip_sigmas;
  p.quenched = quenched;
  p.stopping = stopping;
  return p;
}

std::string to_ini(const RunConfig& c) {
  std::string s;
  const auto line = [&s](const std::string& k, const std::string& v) {
    s += fmt::format("{} = {}\n", k, v);
  };
  const auto list = [](const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + fmt_double(xs[i]);
    return out;
  };
  s += "[corr]\n";
  line("family", to_string(c.corr.family));
  line("sigma_v", fmt_double(c.corr.sigma_v));
  line("sigma_s", fmt_double(c.corr.sigma_s));
  line("ell", fmt_double(c.corr.ell));
  line("rho_cross", fmt_double(c.corr.rho_cross));
  line("cross_shift", fmt_vec(c.corr.cross_shift));
  s += "\n[field]\n";
  line("n_modes", std::to_string(c.n_modes));
  line("seed", c.field_seed ? std::to_string(*c.field_seed) : "none");
  line("clip_sigmas", c.clip_sigmas ? fmt_double(*c.clip_sigmas) : "none");
  s += "\n[sim]\n";
  line("delta", fmt_double(c.delta));
  line("delta_sweep", list(c.delta_sweep));
  line("x0", fmt_vec(c.x0));
  line("k0", fmt_vec(c.k0));
  line("t_end", fmt_double(c.t_end));
  line("dt_factor", fmt_double(c.dt_factor));
  line("n_paths", std::to_string(c.n_paths));
  line("base_seed", std::to_string(c.base_seed));
  line("quenched", c.quenched ? "true" : "false");
  line("checkpoints", list(c.checkpoints));
  line("limit_dt", c.limit_dt ? fmt_double(*c.limit_dt) : "auto");
  s += "\n[stopping]\n";
  line("eps1", fmt_double(c.stopping.eps1));
  line("eps2", fmt_double(c.stopping.eps2));
  line("eps3", fmt_double(c.stopping.eps3));
  line("eps4", fmt_double(c.stopping.eps4));
  s += "\n[output]\n";
  line("dir", c.out_dir);
  line("format", to_string(c.format));
  s += "\n[coeffs]\n";
  std::string ks;
  for (std::size_t i = 0; i < c.coeff_k.size(); ++i) ks += (i ? "; " : "") + fmt_vec(c.coeff_k[i]);
  line("k", ks);
  line("fd_step", fmt_double(c.fd_step));
  s += "\n[sphere]\n";
  line("theta_grid", std::to_string(c.theta_grid));
  line("dt", c.sphere_dt ? fmt_double(*c.sphere_dt) : "auto");
  line("safety", fmt_double(c.sphere_safety));
  line("q0", c.sphere_q0);
  return s;
}

std::string config_hash(const RunConfig& cfg) {
  // where the artifacts go does not change what is computed
  RunConfig c = cfg;
  c.out_dir = "out";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_ini(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace phasedrift
