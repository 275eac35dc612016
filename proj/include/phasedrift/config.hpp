#pragma once

#include "phasedrift/correlation.hpp"
#include "phasedrift/delta_dynamics.hpp"
#include "phasedrift/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace phasedrift {

enum class OutputFormat { Csv, Json };

// Everything a CLI run depends on. Parsed from INI-style text:
//
//   [corr]     family sigma_v sigma_s ell rho_cross cross_shift
//   [field]    n_modes seed clip_sigmas
//   [sim]      delta delta_sweep x0 k0 t_end dt_factor n_paths base_seed
//              quenched checkpoints limit_dt
//   [stopping] eps1 eps2 eps3 eps4
//   [output]   dir format
//   [coeffs]   k fd_step
//   [sphere]   theta_grid dt safety q0
//
// Vectors are comma separated; coeffs.k is a ';'-separated list of vectors.
struct RunConfig {
  CorrelationParams corr;

  int n_modes = 4096;
  std::optional<std::uint64_t> field_seed;
  std::optional<double> clip_sigmas;

  double delta = 0.05;
  std::vector<double> delta_sweep{0.2, 0.1, 0.05, 0.025};
  Vec3 x0 = Vec3::Zero();
  Vec3 k0 = Vec3(0.0, 0.0, 2.0);
  double t_end = 0.5;
  double dt_factor = kDefaultDtFactor;
  int n_paths = 1000;
  std::uint64_t base_seed = 1;
  bool quenched = false;
  std::vector<double> checkpoints;
  std::optional<double> limit_dt;

  StoppingConfig stopping;

  std::string out_dir = "out";
  OutputFormat format = OutputFormat::Csv;

  std::vector<Vec3> coeff_k{Vec3(0.0, 0.0, 2.0)};
  double fd_step = 1e-3;

  int theta_grid = 180;
  std::optional<double> sphere_dt;
  double sphere_safety = 0.9;
  std::string sphere_q0 = "cos";  // "one" or "cos"

  // Throws ConfigError on any violated invariant.
  void validate() const;

  DeltaEnsembleParams delta_params(double delta) const;
};

// Throws ConfigError on unknown sections or keys and on malformed values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical text form: every key in fixed order, floats with 17 significant
// digits. parse_config(to_ini(c)) reproduces c exactly.
std::string to_ini(const RunConfig& cfg);

// 64-bit FNV-1a of the canonical text with output.dir left out, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

std::string to_string(OutputFormat f);
OutputFormat parse_format(const std::string& s);

}  // namespace phasedrift
