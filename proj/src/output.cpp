#include "phasedrift/output.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#ifndef PHASEDRIFT_VERSION
#define PHASEDRIFT_VERSION "0.0.0"
#endif

namespace phasedrift {

std::string library_version() { return PHASEDRIFT_VERSION; }

namespace {

std::string num(double v) {
  if (!std::isfinite(v)) return "nan";
  return fmt::format("{:.17g}", v);
}

void emit(const Json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        emit(it.value(), indent + 2, out);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // numeric arrays stay on one line
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) out += pad;
        emit(e, indent + 2, out);
      }
      out += flat ? "]" : "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? fmt::format("{:.17g}", v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

Json est(const Estimate& e) { return Json{{"value", e.value}, {"se", e.se}}; }
Json vec(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
Json mat(const Mat3& m) {
  Json a = Json::array();
  for (int i = 0; i < 3; ++i) a.push_back(Json::array({m(i, 0), m(i, 1), m(i, 2)}));
  return a;
}

}  // namespace

std::string dump_json(const Json& j) {
  std::string out;
  emit(j, 0, out);
  out += "\n";
  return out;
}

Json to_json(const EnsembleStats& s) {
  Json cps = Json::array();
  for (const CheckpointStats& c : s.checkpoints) {
    cps.push_back(Json{
        {"t", c.t},
        {"mean_Z", est(c.mean_Z)},
        {"var_Z", est(c.var_Z)},
        {"skew_Z", est(c.skew_Z)},
        {"excess_kurtosis_Z", est(c.excess_kurtosis_Z)},
        {"decoherence_re", est(c.deco_re)},
        {"decoherence_im", est(c.deco_im)},
        {"decoherence_abs", est(c.deco_abs)},
        {"mean_dK", vec(c.mean_dK)},
        {"mean_dK_se", vec(c.mean_dK_se)},
        {"K_cov", mat(c.K_cov)},
        {"K_cov_se", mat(c.K_cov_se)},
        {"mean_shell", est(c.mean_shell)},
        {"shell_drift_max", c.shell_drift_max},
    });
  }
  return Json{
      {"n_paths", s.n_paths},
      {"n_effective", s.n_effective},
      {"failed_paths", s.failed_paths},
      {"tau_violent_freq", est(s.tau_violent_freq)},
      {"tau_tube_freq", est(s.tau_tube_freq)},
      {"tau_freq", est(s.tau_freq)},
      {"energy_drift_max", s.energy_drift_max},
      {"shell_drift_path_max", s.shell_drift_path_max},
      {"checkpoints", cps},
  };
}

Json to_json(const TransportCoefficients& c) {
  return Json{
      {"k", vec(c.k)},
      {"D_mn", mat(c.D_mn)},
      {"D", c.D},
      {"D_m_plus", vec(c.D_m_plus)},
      {"D_m_minus", vec(c.D_m_minus)},
      {"E_m", vec(c.E_m)},
      {"E", c.E},
      {"E_formal", vec(c.E_formal)},
      {"F_formal", c.F_formal},
      {"kappa", c.kappa},
      {"s_max", c.s_max},
      {"quad_error", c.quad_error},
      {"evaluations", c.evaluations},
  };
}

Json to_json(const IdentityReport& r) {
  return Json{
      {"momentum_drift_residual", r.momentum_drift_residual},
      {"phase_drift_residual", r.phase_drift_residual},
      {"sphere_trace_residual", r.sphere_trace_residual},
      {"null_direction_residual", r.null_direction_residual},
  };
}

Json to_json(const ConvergenceReport& r) {
  Json trends = Json::array();
  for (const ObservableTrend& t : r.trends) {
    Json d = Json::array();
    for (std::size_t i = 0; i < t.deltas.size(); ++i) {
      d.push_back(Json{{"delta", t.deltas[i]}, {"distance", t.distance[i].value},
                       {"se", t.distance[i].se}});
    }
    Json fit{{"valid", t.fit.valid}, {"points", t.fit.points}};
    if (t.fit.valid) {
      fit["alpha"] = t.fit.alpha;
      fit["alpha_se"] = t.fit.alpha_se;
      fit["prefactor"] = t.fit.prefactor;
    }
    trends.push_back(Json{{"observable", t.name},
                          {"non_increasing", t.non_increasing},
                          {"distances", d},
                          {"power_law", fit}});
  }
  return Json{{"t", r.t}, {"trends", trends}};
}

Json to_json(const SphereSolution& s) {
  Json q = Json::array();
  for (std::size_t i = 0; i < s.q.size(); ++i) {
    q.push_back(Json::array({s.theta[i], s.q[i].real(), s.q[i].imag()}));
  }
  const auto m = s.mass();
  return Json{{"t_end", s.t_end},       {"dt", s.dt},
              {"c", s.c},               {"kappa", s.kappa},
              {"phase_drift", s.phase_drift},
              {"mass", Json::array({m.real(), m.imag()})},
              {"q", q}};
}

std::string ensemble_csv(const EnsembleStats& s) {
  std::string out =
      "t,mean_Z,mean_Z_se,var_Z,var_Z_se,skew_Z,skew_Z_se,excess_kurtosis_Z,excess_kurtosis_Z_se,"
      "decoherence_re,decoherence_re_se,decoherence_im,decoherence_im_se,decoherence_abs,"
      "decoherence_abs_se,mean_dK1,mean_dK2,mean_dK3,mean_dK1_se,mean_dK2_se,mean_dK3_se";
  static constexpr int ij[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  for (const auto& p : ij) out += fmt::format(",K_cov{}{}", p[0] + 1, p[1] + 1);
  for (const auto& p : ij) out += fmt::format(",K_cov{}{}_se", p[0] + 1, p[1] + 1);
  out += ",mean_shell,mean_shell_se,shell_drift_max\n";
  for (const CheckpointStats& c : s.checkpoints) {
    std::vector<double> row{c.t,
                            c.mean_Z.value, c.mean_Z.se,
                            c.var_Z.value, c.var_Z.se,
                            c.skew_Z.value, c.skew_Z.se,
                            c.excess_kurtosis_Z.value, c.excess_kurtosis_Z.se,
                            c.deco_re.value, c.deco_re.se,
                            c.deco_im.value, c.deco_im.se,
                            c.deco_abs.value, c.deco_abs.se};
    for (int m = 0; m < 3; ++m) row.push_back(c.mean_dK(m));
    for (int m = 0; m < 3; ++m) row.push_back(c.mean_dK_se(m));
    for (const auto& p : ij) row.push_back(c.K_cov(p[0], p[1]));
    for (const auto& p : ij) row.push_back(c.K_cov_se(p[0], p[1]));
    row.push_back(c.mean_shell.value);
    row.push_back(c.mean_shell.se);
    row.push_back(c.shell_drift_max);
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + num(row[i]);
    out += "\n";
  }
  return out;
}

std::string coefficients_csv(const std::vector<TransportCoefficients>& cs,
                             const std::vector<IdentityReport>& reports) {
  std::string out = "k1,k2,k3";
  static constexpr int ij[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  for (const auto& p : ij) out += fmt::format(",D{}{}", p[0] + 1, p[1] + 1);
  out += ",D,Dp1,Dp2,Dp3,Dm1,Dm2,Dm3,E_m1,E_m2,E_m3,E,E_formal1,E_formal2,E_formal3,F_formal,"
         "kappa,momentum_drift_residual,phase_drift_residual,sphere_trace_residual,"
         "null_direction_residual\n";
  for (std::size_t n = 0; n < cs.size(); ++n) {
    const TransportCoefficients& c = cs[n];
    std::vector<double> row{c.k.x(), c.k.y(), c.k.z()};
    for (const auto& p : ij) row.push_back(c.D_mn(p[0], p[1]));
    row.push_back(c.D);
    for (int m = 0; m < 3; ++m) row.push_back(c.D_m_plus(m));
    for (int m = 0; m < 3; ++m) row.push_back(c.D_m_minus(m));
    for (int m = 0; m < 3; ++m) row.push_back(c.E_m(m));
    row.push_back(c.E);
    for (int m = 0; m < 3; ++m) row.push_back(c.E_formal(m));
    row.push_back(c.F_formal);
    row.push_back(c.kappa);
    const IdentityReport& r = reports[n];
    row.insert(row.end(), {r.momentum_drift_residual, r.phase_drift_residual,
                           r.sphere_trace_residual, r.null_direction_residual});
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + num(row[i]);
    out += "\n";
  }
  return out;
}

std::string sphere_csv(const SphereSolution& s) {
  std::string out = "theta,q_re,q_im\n";
  for (std::size_t i = 0; i < s.q.size(); ++i) {
    out += fmt::format("{},{},{}\n", num(s.theta[i]), num(s.q[i].real()), num(s.q[i].imag()));
  }
  return out;
}

std::string trend_csv(const ConvergenceReport& r) {
  std::string out = "observable,delta,distance,se\n";
  for (const ObservableTrend& t : r.trends) {
    for (std::size_t i = 0; i < t.deltas.size(); ++i) {
      out += fmt::format("{},{},{},{}\n", t.name, num(t.deltas[i]), num(t.distance[i].value),
                         num(t.distance[i].se));
    }
  }
  return out;
}

std::string path_csv(const PhasePath& p) {
  std::string out = "t,X1,X2,X3,K1,K2,K3,Z\n";
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", num(p.times[i]), num(p.X[i].x()),
                       num(p.X[i].y()), num(p.X[i].z()), num(p.K[i].x()), num(p.K[i].y()),
                       num(p.K[i].z()), num(p.Z[i]));
  }
  return out;
}

Json make_manifest(const std::string& command, const RunConfig& cfg) {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  return Json{
      {"command", command},
      {"config_hash", config_hash(cfg)},
      {"base_seed", cfg.base_seed},
      {"versions",
       Json{{"phasedrift", library_version()},
            {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                                  EIGEN_MINOR_VERSION)},
            {"fmt", fmt::format("{}.{}.{}", FMT_VERSION / 10000, FMT_VERSION / 100 % 100,
                                FMT_VERSION % 100)},
            {"boost", BOOST_LIB_VERSION},
            {"compiler", __VERSION__}}},
      {"created_utc", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", now)},
      {"config", to_ini(cfg)},
  };
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path));
  out << content;
  if (!out) throw ConfigError(fmt::format("write to '{}' failed", path));
}

}  // namespace phasedrift
