#pragma once

#include "phasedrift/correlation.hpp"
#include "phasedrift/field.hpp"
#include "phasedrift/stats.hpp"
#include "phasedrift/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace phasedrift {

// Exponents of the stopping-time mesh:
//   N = floor(delta^-eps1), p = floor(delta^-eps2),
//   q = p floor(delta^-eps3), N1 = N p floor(delta^-eps4).
struct StoppingConfig {
  double eps1 = 0.1;
  double eps2 = 0.2;
  double eps3 = 0.15;
  double eps4 = 0.6;

  struct Mesh {
    long N = 1, p = 1, q = 1, N1 = 1;
  };

  // Throws ConfigError unless 0 < eps1 < eps2 < 1/2, eps3 in (0, 1/2 - eps2),
  // eps4 in (1/2, 1 - eps1 - eps2).
  void validate() const;
  Mesh mesh(double delta) const;
};

struct StoppingEvents {
  std::optional<double> violent_turn;  // V_delta
  std::optional<double> tube_return;   // U_delta
  std::optional<double> tau() const;   // min of the two
};

// Trajectory of the scaled characteristics
//   dX/dt = -K, dK/dt = delta^-1/2 grad V(X/delta), dZ/dt = delta^-1/2 S(X/delta).
struct PhasePath {
  std::vector<double> times;
  std::vector<Vec3> X;
  std::vector<Vec3> K;
  std::vector<double> Z;
  double delta = 1.0;
  // max_t |H(t) - H(0)|, H = |K|^2/2 + sqrt(delta) V(X/delta)
  double energy_drift = 0.0;
  StoppingEvents tau_events;
};

// Default bound on the step: dt <= kDefaultDtFactor * delta / |k0|.
inline constexpr double kDefaultDtFactor = 0.1;

// Fixed-step RK4. The step actually used is t_end / ceil(t_end / dt).
// Throws ConfigError if dt exceeds max_dt_factor * delta / |k0|.
PhasePath integrate_path(const FieldRealization& field, const Vec3& x0, const Vec3& k0,
                         double delta, double t_end, double dt,
                         double max_dt_factor = kDefaultDtFactor);

StoppingEvents detect_stopping_times(const PhasePath& path, const StoppingConfig& cfg);

struct DeltaEnsembleParams {
  double delta = 0.05;
  Vec3 x0 = Vec3::Zero();
  Vec3 k0 = Vec3(0.0, 0.0, 2.0);
  double t_end = 0.5;
  double dt_factor = kDefaultDtFactor;
  int n_paths = 1000;
  std::uint64_t base_seed = 1;
  // seeds the medium realizations when set; base_seed otherwise
  std::optional<std::uint64_t> field_seed;
  std::vector<double> checkpoints;  // empty: {t_end}
  int n_modes = 4096;
  std::optional<double> clip_sigmas;
  bool quenched = false;
  StoppingConfig stopping;
  int threads = 0;  // 0: PHASEDRIFT_THREADS or the OpenMP default
};

// Path `index` of the ensemble (own field realization unless quenched).
PhasePath simulate_delta_path(const CorrelationModel& model, const DeltaEnsembleParams& params,
                              int index);

// OpenMP over paths; statistics are reduced in path order afterwards, so the
// result does not depend on the number of workers.
EnsembleStats run_ensemble(const CorrelationModel& model, const DeltaEnsembleParams& params);
// Single-threaded reference with the same per-path work.
EnsembleStats run_ensemble_serial(const CorrelationModel& model,
                                  const DeltaEnsembleParams& params);

// Worker count: min(OpenMP max threads, PHASEDRIFT_THREADS) unless requested > 0.
int resolve_threads(int requested);

}  // namespace phasedrift
