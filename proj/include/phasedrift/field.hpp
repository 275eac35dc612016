#pragma once

#include "phasedrift/correlation.hpp"
#include "phasedrift/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace phasedrift {

struct FieldSample {
  double V = 0.0;
  Vec3 grad_V = Vec3::Zero();
  double S = 0.0;
};

// One realization of the joint field (V, S) as a randomized spectral sum
//   V(y) = sqrt(2/N) sum_j a_j^V cos(xi_j . y + phi_j)
//   S(y) = sqrt(2/N) sum_j a_j^S cos(xi_j . (y + b) + phi_j)
// with (a^V, a^S) = sqrt(C) n_j, n_j standard normal, phi_j uniform, and
// xi_j drawn from the normalised spectrum. Immutable; evaluation is re-entrant.
class FieldRealization {
 public:
  FieldRealization() = default;

  std::size_t n_modes() const { return xi_x_.size(); }
  std::uint64_t seed() const { return seed_; }

  // V, grad V and S at y in one pass over the modes (vectorised kernel).
  FieldSample evaluate(const Vec3& y) const;
  // Same quantities with libm sin/cos and a plain loop; kept for testing.
  FieldSample evaluate_reference(const Vec3& y) const;

  double eval_V(const Vec3& y) const { return evaluate(y).V; }
  double eval_S(const Vec3& y) const { return evaluate(y).S; }
  Vec3 eval_grad_V(const Vec3& y) const { return evaluate(y).grad_V; }

  // Mode access, mainly for diagnostics and tests.
  Vec3 wavevector(std::size_t j) const { return {xi_x_[j], xi_y_[j], xi_z_[j]}; }
  double phase(std::size_t j) const { return phase_[j]; }
  Eigen::Vector2d amplitudes(std::size_t j) const;

 private:
  friend FieldRealization sample_field(const CorrelationModel&, int, std::uint64_t,
                                       std::optional<double>);

  std::uint64_t seed_ = 0;
  // Structure-of-arrays layout so the mode loop vectorises.
  std::vector<double> xi_x_, xi_y_, xi_z_, phase_;
  std::vector<double> amp_v_;
  // a^S cos(xi.b) and a^S sin(xi.b): S uses cos(theta + beta) expanded.
  std::vector<double> amp_s_cos_, amp_s_sin_;
  double norm_ = 0.0;  // sqrt(2/N)
};

// Samples a realization. Throws NumericalError if the per-mode amplitude
// covariance is not PSD (an invalid model that escaped validate()).
FieldRealization sample_field(const CorrelationModel& model, int n_modes, std::uint64_t seed,
                              std::optional<double> clip_sigmas = std::nullopt);

}  // namespace phasedrift
