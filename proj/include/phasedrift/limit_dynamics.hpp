#pragma once

#include "phasedrift/coefficients.hpp"
#include "phasedrift/correlation.hpp"
#include "phasedrift/stats.hpp"
#include "phasedrift/types.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace phasedrift {

// State of the limiting diffusion; |k| stays on the initial sphere.
struct LimitState {
  Vec3 x = Vec3::Zero();
  Vec3 k = Vec3::Zero();
  double z = 0.0;
};

// One Euler-Maruyama step of the (x, k, z) diffusion:
//   k += E_m dt + (B xi)_k sqrt(dt),  z += E dt + (B xi)_z sqrt(dt),  x -= k dt,
// with B B^T = 2A and A the 4x4 second-order block, then |k| is reset to
// k_norm. Throws NumericalError if A has an eigenvalue below -1e-9.
LimitState step_limit_sde(const LimitState& state, const TransportCoefficients& coeffs,
                          double dt, const std::array<double, 4>& noise, double k_norm);

// Symmetric square root of 2A, eigenvalues in [-1e-9, 0] clamped to zero.
Mat4 diffusion_factor(const TransportCoefficients& coeffs);

struct LimitEnsembleParams {
  Vec3 x0 = Vec3::Zero();
  Vec3 k0 = Vec3(0.0, 0.0, 2.0);
  double t_end = 0.5;
  std::optional<double> dt;  // default: 1e-3 * min(1, 1/c), c the largest D_mn eigenvalue
  int n_paths = 1000;
  std::uint64_t base_seed = 1;
  std::vector<double> checkpoints;  // empty: {t_end}
  int threads = 0;
};

double default_limit_dt(const TransportCoefficients& at_k0);

EnsembleStats simulate_limit_ensemble(const CorrelationModel& model,
                                      const LimitEnsembleParams& params);
EnsembleStats simulate_limit_ensemble_serial(const CorrelationModel& model,
                                             const LimitEnsembleParams& params);

// Halves dt from the default until var Z and |E e^{iZ}| at t_end move by
// less than one standard error (at most max_halvings times). Returns the dt.
double refine_limit_dt(const CorrelationModel& model, const LimitEnsembleParams& params,
                       int max_halvings = 4);

using Observable = std::function<std::complex<double>(const Vec3& x, const Vec3& k)>;

struct ObservableEstimate {
  std::complex<double> value;
  double se_re = 0.0, se_im = 0.0;
  double se() const;
  int n_paths = 0;
};

// Monte Carlo estimate of E[e^{iZ(t)} W0(X(t), K(t))] for the limit process
// started at (x0, k0, 0). Throws NumericalError if max_se is given and the
// combined standard error exceeds it.
ObservableEstimate estimate_limit_observable(const CorrelationModel& model, const Vec3& x0,
                                             const Vec3& k0, double t, int n_paths,
                                             std::uint64_t seed, const Observable& W0,
                                             std::optional<double> dt = std::nullopt,
                                             std::optional<double> max_se = std::nullopt,
                                             int threads = 0);

// Axisymmetric reduced Kolmogorov equation on the unit sphere,
//   dq/dt = c Lap_{S^2} q + (iE - kappa) q,   c = D_perp(|k0|) / |k0|^2,
// solved by explicit finite volumes in the polar angle with zero-flux poles.
struct SphereSolution {
  std::vector<double> theta;                // cell centres
  std::vector<std::complex<double>> q;      // q(t_end, theta_i)
  std::vector<double> cell_weight;          // int sin(theta) over the cell
  double t_end = 0.0;
  double dt = 0.0;
  double c = 0.0;
  double kappa = 0.0;
  double phase_drift = 0.0;  // E
  std::complex<double> at(double polar_angle) const;
  // int q sin(theta) dtheta
  std::complex<double> mass() const;
  // int q f sin(theta) dtheta, midpoint rule per cell
  std::complex<double> project(const std::function<double(double)>& f) const;
};

// Decay rate of the projection of q on f between t = 0 and t_end,
// -log|<q(t_end), f> / <q0, f>| / t_end.
double projected_decay_rate(const SphereSolution& sol, const std::function<double(double)>& q0,
                            const std::function<double(double)>& f);

SphereSolution solve_sphere_kolmogorov(const CorrelationModel& model, double k_norm,
                                       int theta_grid_size, double t_end,
                                       std::optional<double> dt,
                                       const std::function<double(double)>& q0,
                                       double safety = 0.9);

}  // namespace phasedrift
