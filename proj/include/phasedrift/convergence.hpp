#pragma once

#include "phasedrift/stats.hpp"

#include <string>
#include <vector>

namespace phasedrift {

struct DeltaRun {
  double delta = 0.0;
  EnsembleStats stats;
};

// Least-squares fit of log d = log C + alpha log delta, weighted by (d / se)^2.
struct PowerLawFit {
  double alpha = 0.0, alpha_se = 0.0;
  double prefactor = 0.0;
  int points = 0;
  bool valid = false;
};

struct ObservableTrend {
  std::string name;
  std::vector<double> deltas;  // strictly decreasing
  std::vector<Estimate> distance;
  // d(i+1) <= d(i) + 3 sqrt(se(i)^2 + se(i+1)^2) for every consecutive pair
  bool non_increasing = true;
  PowerLawFit fit;
};

struct ConvergenceReport {
  double t = 0.0;  // checkpoint compared
  std::vector<ObservableTrend> trends;
  const ObservableTrend& trend(const std::string& name) const;
};

// Compares the last checkpoint of each delta run with the limit ensemble.
// Observables: var_Z, deco_abs, K_cov (Frobenius distance), tau_freq
// (distance to 0), skew_Z and excess_kurtosis_Z (distance to 0).
// Runs are sorted by decreasing delta. Throws ConfigError for fewer than 3 runs.
ConvergenceReport summarize_convergence(std::vector<DeltaRun> runs,
                                        const EnsembleStats& limit_stats);

PowerLawFit fit_power_law(const std::vector<double>& deltas, const std::vector<Estimate>& d);

}  // namespace phasedrift
