#pragma once

#include "phasedrift/types.hpp"

#include <complex>
#include <span>
#include <vector>

namespace phasedrift {

// What one path contributes at one checkpoint time.
struct PathPoint {
  double z = 0.0;
  Vec3 dk = Vec3::Zero();  // K(t) - k0
  double shell = 0.0;      // |K(t)| - |k0|
};

struct CheckpointStats {
  double t = 0.0;
  Estimate mean_Z, var_Z, skew_Z, excess_kurtosis_Z;
  // decoherence factor E[e^{iZ}] and its modulus
  Estimate deco_re, deco_im, deco_abs;
  Vec3 mean_dK = Vec3::Zero(), mean_dK_se = Vec3::Zero();
  Mat3 K_cov = Mat3::Zero(), K_cov_se = Mat3::Zero();
  Estimate mean_shell;       // E[|K| - |k0|]
  double shell_drift_max = 0.0;  // max over paths of ||K| - |k0||
  std::complex<double> decoherence() const { return {deco_re.value, deco_im.value}; }
};

struct EnsembleStats {
  std::vector<CheckpointStats> checkpoints;
  Estimate tau_violent_freq, tau_tube_freq, tau_freq;  // P[event before t_end]
  double energy_drift_max = 0.0;
  // max over paths of max_t ||K(t)| - |k0||, the whole-trajectory shell drift
  double shell_drift_path_max = 0.0;
  int n_paths = 0;
  int n_effective = 0;
  std::vector<int> failed_paths;
};

// Neumaier-compensated sum in index order.
double compensated_sum(std::span<const double> xs);

// Summary of one checkpoint across the successful paths, in path order.
CheckpointStats summarize_checkpoint(double t, std::span<const PathPoint> points);

// Frequency of `hits` among n trials with binomial standard error.
Estimate frequency(int hits, int n);

// Mean of complex samples with per-component standard errors.
struct ComplexEstimate {
  std::complex<double> value;
  double se_re = 0.0, se_im = 0.0;
  double se() const;  // combined, sqrt(se_re^2 + se_im^2)
};
ComplexEstimate mean_complex(std::span<const std::complex<double>> xs);

}  // namespace phasedrift
