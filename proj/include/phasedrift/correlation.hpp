#pragma once

#include "phasedrift/rng.hpp"
#include "phasedrift/types.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace phasedrift {

enum class KernelFamily { GaussianIsotropic, BumpSpectrum };

// Entry of the 2x2 correlation tensor: R^{AB}(y) = E[A(0) B(y)].
enum class Component { VV, SV, VS, SS };

std::string to_string(KernelFamily family);
KernelFamily parse_family(const std::string& name);
std::string to_string(Component c);

struct CorrelationParams {
  double sigma_v = 1.0;
  double sigma_s = 1.0;
  double ell = 1.0;
  double rho_cross = 0.0;
  KernelFamily family = KernelFamily::GaussianIsotropic;
  // R^{SV}(y) = rho sigma_v sigma_s g(y - cross_shift). A nonzero shift makes
  // R^{SV} non-even, which switches on the cross diffusion D_m(k) + D_m(-k).
  Vec3 cross_shift = Vec3::Zero();
};

// Value and derivatives through third order at one point.
struct KernelJet {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
  Mat3 hess = Mat3::Zero();
  double laplacian = 0.0;
  Vec3 laplacian_grad = Vec3::Zero();
};

// Joint two-point correlation tensor of (V, S). Every component shares one
// unit-variance isotropic shape g(y) with g(0) = 1:
//   R^VV = sigma_v^2 g(y), R^SS = sigma_s^2 g(y),
//   R^SV = rho sigma_v sigma_s g(y - b), R^VS(y) = R^SV(-y).
// Immutable after construction.
class CorrelationModel {
 public:
  explicit CorrelationModel(const CorrelationParams& params);

  const CorrelationParams& params() const { return params_; }

  double eval(Component c, const Vec3& y) const;
  Vec3 eval_grad(Component c, const Vec3& y) const;
  Mat3 eval_hess(Component c, const Vec3& y) const;
  double eval_laplacian(Component c, const Vec3& y) const;
  Vec3 eval_laplacian_grad(Component c, const Vec3& y) const;
  KernelJet jet(Component c, const Vec3& y) const;

  // Unit-variance shape g and its derivatives.
  KernelJet shape_jet(const Vec3& y) const;

  // True when every component is rotation invariant (no cross shift).
  bool is_isotropic() const { return params_.cross_shift.isZero(0.0); }

  // Spectral density of the shape, normalised so that
  // int shape_spectrum(|xi|) d^3xi / (2 pi)^3 = g(0) = 1.
  double shape_spectrum(double xi_norm) const;

  // Largest |xi| in the support of the spectrum (infinity for the Gaussian).
  double spectral_cutoff() const;

  // Draws xi from the normalised trace spectrum.
  Vec3 sample_wavevector(CounterRng& rng) const;

  // Real 2x2 covariance of the mode amplitudes (a_V, a_S) at wavevector xi.
  // The cross-shift phase e^{i xi.b} is carried by the mode phase instead.
  Eigen::Matrix2d mode_covariance(const Vec3& xi) const;

  // Full Hermitian spectral matrix at xi, split into real and imaginary parts.
  void spectral_matrix(const Vec3& xi, Eigen::Matrix2d& re, Eigen::Matrix2d& im) const;

  // Radius (in y units) beyond which the shape and its derivatives, in units
  // of ell, stay below about 1e-12.
  double decay_radius() const;

  // Amplitude prefactor of the component, e.g. rho sigma_v sigma_s for SV.
  double amplitude(Component c) const;

 private:
  struct BumpTable {
    double cutoff = 0.0;
    std::vector<double> nodes;    // kappa_i
    std::vector<double> weights;  // normalised f(kappa_i) h
    double peak_density = 0.0;    // max of the normalised radial density
    double density_norm = 0.0;    // 1 / int c kappa^2 psi dkappa
  };

  // Derivatives G^{(n)}(u), n = 0..3, of the profile g(y) = G(|y|^2 / 2).
  void profile_derivatives(double r2, double out[4]) const;
  double bump_radial_density(double kappa) const;

  CorrelationParams params_;
  BumpTable bump_;
};

// Returns human-readable violations; empty when the model is admissible.
std::vector<std::string> validate(const CorrelationParams& params);

}  // namespace phasedrift
