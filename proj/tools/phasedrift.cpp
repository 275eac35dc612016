// phasedrift: command line front end.
//
//   phasedrift <subcommand> [--config PATH] [--delta F] [--n-paths N] [--seed N]
//              [--out DIR] [--format csv|json] [--quenched] [--dump-paths] [--k x,y,z]
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 selftest failure.
// Errors are reported on stderr as a single JSON object.

#include "phasedrift/coefficients.hpp"
#include "phasedrift/config.hpp"
#include "phasedrift/convergence.hpp"
#include "phasedrift/delta_dynamics.hpp"
#include "phasedrift/limit_dynamics.hpp"
#include "phasedrift/output.hpp"
#include "phasedrift/selftest.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace phasedrift;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitSelftest = 4;

struct Overrides {
  std::string config_path;
  std::optional<double> delta;
  std::optional<int> n_paths;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  bool quenched = false;
  bool dump_paths = false;
  bool refine_dt = false;
  std::vector<std::string> k;
};

int report_error(const std::string& kind, const std::string& message, int code) {
  Json j{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << std::endl;
  return code;
}

Vec3 parse_vec(const std::string& s) {
  RunConfig probe = parse_config(fmt::format("[sim]\nk0 = {}\n", s));
  return probe.k0;
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.delta) cfg.delta = *o.delta;
  if (o.n_paths) cfg.n_paths = *o.n_paths;
  if (o.seed) cfg.base_seed = *o.seed;
  if (o.out) cfg.out_dir = *o.out;
  if (o.format) cfg.format = parse_format(*o.format);
  if (o.quenched) cfg.quenched = true;
  if (!o.k.empty()) {
    cfg.coeff_k.clear();
    for (const auto& s : o.k) cfg.coeff_k.push_back(parse_vec(s));
  }
  cfg.validate();
  return cfg;
}

CorrelationModel checked_model(const RunConfig& cfg) {
  const auto violations = validate(cfg.corr);
  if (!violations.empty()) {
    std::string msg = "correlation model rejected:";
    for (const auto& v : violations) msg += " " + v + ";";
    throw ConfigError(msg);
  }
  return CorrelationModel(cfg.corr);
}

std::string artifact(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

void write_manifest(const std::string& command, const RunConfig& cfg) {
  write_file(artifact(cfg, "manifest.json"), dump_json(make_manifest(command, cfg)));
}

void write_ensemble(const RunConfig& cfg, const std::string& stem, const EnsembleStats& st) {
  if (cfg.format == OutputFormat::Json) {
    write_file(artifact(cfg, stem + ".json"), dump_json(to_json(st)));
    return;
  }
  write_file(artifact(cfg, stem + ".csv"), ensemble_csv(st));
  Json summary = to_json(st);
  summary.erase("checkpoints");
  write_file(artifact(cfg, stem + "_summary.json"), dump_json(summary));
}

int cmd_coeffs(const RunConfig& cfg) {
  const CorrelationModel model = checked_model(cfg);
  std::vector<TransportCoefficients> cs;
  std::vector<IdentityReport> reports;
  for (const Vec3& k : cfg.coeff_k) {
    cs.push_back(compute_coefficients(model, k));
    reports.push_back(check_divergence_identities(model, k, cfg.fd_step));
  }
  if (cfg.format == OutputFormat::Json) {
    Json arr = Json::array();
    for (std::size_t i = 0; i < cs.size(); ++i) {
      arr.push_back(Json{{"coefficients", to_json(cs[i])}, {"identities", to_json(reports[i])}});
    }
    write_file(artifact(cfg, "coeffs.json"), dump_json(arr));
  } else {
    write_file(artifact(cfg, "coeffs.csv"), coefficients_csv(cs, reports));
  }
  write_manifest("coeffs", cfg);
  return 0;
}

int cmd_simulate_delta(const RunConfig& cfg, bool dump_paths) {
  const CorrelationModel model = checked_model(cfg);
  const DeltaEnsembleParams p = cfg.delta_params(cfg.delta);
  const EnsembleStats st = run_ensemble(model, p);
  write_ensemble(cfg, "simulate_delta", st);
  if (dump_paths) {
    // paths are re-integrated one at a time; memory stays bounded
    for (int i = 0; i < p.n_paths; ++i) {
      const PhasePath path = simulate_delta_path(model, p, i);
      write_file(artifact(cfg, fmt::format("paths/path_{:06d}.csv", i)), path_csv(path));
    }
  }
  write_manifest("simulate-delta", cfg);
  return 0;
}

LimitEnsembleParams limit_params(const RunConfig& cfg) {
  LimitEnsembleParams lp;
  lp.x0 = cfg.x0;
  lp.k0 = cfg.k0;
  lp.t_end = cfg.t_end;
  lp.dt = cfg.limit_dt;
  lp.n_paths = cfg.n_paths;
  lp.base_seed = cfg.base_seed;
  lp.checkpoints = cfg.checkpoints;
  return lp;
}

int cmd_simulate_limit(RunConfig cfg, bool refine) {
  const CorrelationModel model = checked_model(cfg);
  LimitEnsembleParams lp = limit_params(cfg);
  if (refine && !lp.dt) {
    cfg.limit_dt = refine_limit_dt(model, lp);
    lp.dt = cfg.limit_dt;
  }
  write_ensemble(cfg, "simulate_limit", simulate_limit_ensemble(model, lp));
  write_manifest("simulate-limit", cfg);
  return 0;
}

int cmd_solve_fp(const RunConfig& cfg) {
  const CorrelationModel model = checked_model(cfg);
  const bool cosine = cfg.sphere_q0 == "cos";
  const auto q0 = [cosine](double th) { return cosine ? std::cos(th) : 1.0; };
  const SphereSolution s = solve_sphere_kolmogorov(model, cfg.k0.norm(), cfg.theta_grid,
                                                   cfg.t_end, cfg.sphere_dt, q0,
                                                   cfg.sphere_safety);
  Json j = to_json(s);
  if (cfg.t_end > 0.0) {
    j["decay_rate"] = projected_decay_rate(s, q0, q0);
    j["expected_decay_rate"] = cosine ? 2.0 * s.c + s.kappa : s.kappa;
  }
  if (cfg.format == OutputFormat::Json) {
    write_file(artifact(cfg, "solve_fp.json"), dump_json(j));
  } else {
    write_file(artifact(cfg, "solve_fp.csv"), sphere_csv(s));
    j.erase("q");
    write_file(artifact(cfg, "solve_fp_summary.json"), dump_json(j));
  }
  write_manifest("solve-fp", cfg);
  return 0;
}

int cmd_converge(const RunConfig& cfg) {
  const CorrelationModel model = checked_model(cfg);
  std::vector<DeltaRun> runs;
  for (double d : cfg.delta_sweep) runs.push_back({d, run_ensemble(model, cfg.delta_params(d))});
  const EnsembleStats limit = simulate_limit_ensemble(model, limit_params(cfg));
  const ConvergenceReport rep = summarize_convergence(runs, limit);

  Json j = to_json(rep);
  Json per_delta = Json::array();
  for (const DeltaRun& r : runs) {
    const CheckpointStats& c = r.stats.checkpoints.back();
    per_delta.push_back(Json{{"delta", r.delta},
                             {"var_Z", c.var_Z.value},
                             {"var_Z_se", c.var_Z.se},
                             {"decoherence_abs", c.deco_abs.value},
                             {"decoherence_abs_se", c.deco_abs.se},
                             {"tau_freq", r.stats.tau_freq.value}});
  }
  const CheckpointStats& lc = limit.checkpoints.back();
  j["delta_runs"] = per_delta;
  j["limit"] = Json{{"var_Z", lc.var_Z.value},
                    {"var_Z_se", lc.var_Z.se},
                    {"decoherence_abs", lc.deco_abs.value},
                    {"decoherence_abs_se", lc.deco_abs.se}};
  if (cfg.format == OutputFormat::Csv) write_file(artifact(cfg, "converge.csv"), trend_csv(rep));
  write_file(artifact(cfg, "converge.json"), dump_json(j));
  write_manifest("converge", cfg);
  return 0;
}

int cmd_validate(const RunConfig& cfg) {
  const auto violations = validate(cfg.corr);
  Json j{{"valid", violations.empty()}, {"violations", violations}};
  write_file(artifact(cfg, "validate.json"), dump_json(j));
  write_manifest("validate", cfg);
  if (!violations.empty()) {
    return report_error("config", fmt::format("{} model violation(s): {}", violations.size(),
                                              violations.front()),
                        kExitConfig);
  }
  return 0;
}

int cmd_selftest(const RunConfig& cfg) {
  const auto checks = run_selftest();
  Json arr = Json::array();
  int failed = 0;
  for (const auto& c : checks) {
    arr.push_back(Json{{"check", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    failed += !c.passed;
    std::cout << fmt::format("{} {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
  }
  write_file(artifact(cfg, "selftest.json"), dump_json(Json{{"checks", arr}, {"failed", failed}}));
  write_manifest("selftest", cfg);
  if (failed > 0) {
    return report_error("selftest", fmt::format("{} of {} checks failed", failed, checks.size()),
                        kExitSelftest);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decoherence of waves in two mismatched random media"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config_path, "INI config file or a run manifest");
  app.add_option("--delta", o.delta, "correlation length of the medium");
  app.add_option("--n-paths", o.n_paths, "ensemble size");
  app.add_option("--seed", o.seed, "base seed");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--quenched", o.quenched, "all paths in one medium realization");
  app.add_flag("--dump-paths", o.dump_paths, "write every trajectory (simulate-delta)");
  app.add_option("--k", o.k, "momentum x,y,z for coeffs (repeatable)");
  app.add_flag("--refine-dt", o.refine_dt, "halve the limit step until observables settle");

  auto* coeffs = app.add_subcommand("coeffs", "transport coefficients and identity residuals");
  auto* sim_delta = app.add_subcommand("simulate-delta", "ensemble of random characteristics");
  auto* sim_limit = app.add_subcommand("simulate-limit", "ensemble of the limiting diffusion");
  auto* solve_fp = app.add_subcommand("solve-fp", "axisymmetric Kolmogorov equation on the sphere");
  auto* converge = app.add_subcommand("converge", "delta sweep against the limit ensemble");
  auto* validate_cmd = app.add_subcommand("validate", "check the correlation model");
  auto* selftest = app.add_subcommand("selftest", "fast invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("config", e.what(), kExitConfig);
  }

  try {
    const RunConfig cfg = resolve_config(o);
    if (coeffs->parsed()) return cmd_coeffs(cfg);
    if (sim_delta->parsed()) return cmd_simulate_delta(cfg, o.dump_paths);
    if (sim_limit->parsed()) return cmd_simulate_limit(cfg, o.refine_dt);
    if (solve_fp->parsed()) return cmd_solve_fp(cfg);
    if (converge->parsed()) return cmd_converge(cfg);
    if (validate_cmd->parsed()) return cmd_validate(cfg);
    if (selftest->parsed()) return cmd_selftest(cfg);
  } catch (const ConfigError& e) {
    return report_error("config", e.what(), kExitConfig);
  } catch (const NumericalError& e) {
    return report_error("numerical", e.what(), kExitNumerical);
  } catch (const std::exception& e) {
    return report_error("numerical", e.what(), kExitNumerical);
  }
  return 0;
}
