#pragma once

#include "phasedrift/correlation.hpp"
#include "phasedrift/types.hpp"

#include <memory>

namespace phasedrift {

// Macroscopic coefficients of the limiting diffusion at momentum k.
//
//   D_mn = -int_0^inf R^VV_mn(sk) ds        D     =  int_0^inf R^SS(sk) ds
//   D_m(+-k) = int_0^inf R^SV_m(+-sk) ds     E_m   = -int_0^inf s (grad lap R^VV)_m(sk) ds
//   E     = int_0^inf s lap R^SV(sk) ds
//
// plus the same physics in the lettering of the averaged Wigner equation:
//   E_formal_j = int_-inf^inf R^SV_j(sk) ds,  F_formal = div_k E'(k),  kappa = D.
struct TransportCoefficients {
  Vec3 k = Vec3::Zero();
  Mat3 D_mn = Mat3::Zero();
  double D = 0.0;
  Vec3 D_m_plus = Vec3::Zero();
  Vec3 D_m_minus = Vec3::Zero();
  Vec3 E_m = Vec3::Zero();
  double E = 0.0;
  Vec3 E_formal = Vec3::Zero();
  double F_formal = 0.0;
  double kappa = 0.0;

  // quadrature diagnostics
  double s_max = 0.0;
  double quad_error = 0.0;
  int evaluations = 0;

  // Second-order block of the generator in (k, z):
  // [[D_mn, (D_m(k) + D_m(-k)) / 2], [., D]].
  Mat4 second_order_block() const;
};

struct CoefficientOptions {
  double k_min = 1e-3;
  double abs_tol = 1e-10;
  double envelope_rel = 1e-14;
  int max_evaluations = 400'000;
};

// Throws ConfigError if |k| < k_min and NumericalError if a quadrature fails.
TransportCoefficients compute_coefficients(const CorrelationModel& model, const Vec3& k,
                                           const CoefficientOptions& opt = {});

// Symmetric two-sided form -1/2 int_-inf^inf R^VV_mn(sk) ds of the momentum
// diffusion; equal to the one-sided D_mn because R^VV_mn is even.
Mat3 momentum_diffusion_two_sided(const CorrelationModel& model, const Vec3& k,
                                  const CoefficientOptions& opt = {});

struct IdentityReport {
  double momentum_drift_residual = 0.0;  // max_n |sum_m d D_mn / d k_m - E_n|
  double phase_drift_residual = 0.0;     // |sum_m d D_m(k) / d k_m - E|
  double sphere_trace_residual = 0.0;    // |tr D + E . k|
  double null_direction_residual = 0.0;  // ||D k_hat||
  double max() const;
};

// Fourth-order central differences in k (step fd_step) of the divergence-form
// identities that make the compact and expanded generator forms agree.
IdentityReport check_divergence_identities(const CorrelationModel& model, const Vec3& k,
                                           double fd_step, const CoefficientOptions& opt = {});

struct WignerCoefficients {
  Vec3 E_vec = Vec3::Zero();  // drift multiplying i grad_k W
  double F = 0.0;             // multiplies i W
  double kappa = 0.0;         // absorption
};

// Reads the averaged Wigner equation coefficients off the generator acting on
// e^{iz} r(k): E_vec = D_m(k) + D_m(-k), F = E, kappa = D.
WignerCoefficients reduce_generator_to_wigner(const TransportCoefficients& c);

// Coefficients as a function of k on the sphere |k| = const.
class CoefficientMap {
 public:
  virtual ~CoefficientMap() = default;
  virtual TransportCoefficients at(const Vec3& k) const = 0;
};

// Isotropic models: one quadrature at a reference momentum, then rotation
// (D_mn -> Q D Q^T, vectors -> Q v) and the exact 1/|k|, 1/|k|^2 scalings.
class IsotropicCoefficientMap final : public CoefficientMap {
 public:
  IsotropicCoefficientMap(const CorrelationModel& model, double k_norm,
                          const CoefficientOptions& opt = {});
  TransportCoefficients at(const Vec3& k) const override;
  const TransportCoefficients& reference() const { return ref_; }

 private:
  TransportCoefficients ref_;
  double k_norm_;
};

// Any model: full quadrature at every requested k.
class QuadratureCoefficientMap final : public CoefficientMap {
 public:
  QuadratureCoefficientMap(const CorrelationModel& model, const CoefficientOptions& opt = {})
      : model_(model), opt_(opt) {}
  TransportCoefficients at(const Vec3& k) const override {
    return compute_coefficients(model_, k, opt_);
  }

 private:
  CorrelationModel model_;
  CoefficientOptions opt_;
};

std::unique_ptr<CoefficientMap> make_coefficient_map(const CorrelationModel& model,
                                                     double k_norm,
                                                     const CoefficientOptions& opt = {});

}  // namespace phasedrift
