#include "phasedrift/coefficients.hpp"

#include "phasedrift/quadrature.hpp"

#include <Eigen/Geometry>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace phasedrift {

namespace {

constexpr int kNumIntegrands = 17;
using Integrand = Eigen::Matrix<double, kNumIntegrands, 1>;

constexpr int kPairs[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};

void require_momentum(const Vec3& k, const CoefficientOptions& opt) {
  if (!k.allFinite() || k.norm() < opt.k_min) {
    throw ConfigError(fmt::format("|k| = {:.6g} is below k_min = {:.3g}; the origin of momentum "
                                  "space is excluded",
                                  k.norm(), opt.k_min));
  }
}

// All one-sided integrands at abscissa s, stacked.
Integrand integrand_at(const CorrelationModel& model, const Vec3& k, double s) {
  const CorrelationParams& p = model.params();
  const Vec3 y = s * k;
  const KernelJet g = model.shape_jet(y);
  KernelJet g_plus, g_minus;
  if (model.is_isotropic()) {
    g_plus = g;
    g_minus = g;
    g_minus.grad = -g.grad;
    g_minus.laplacian_grad = -g.laplacian_grad;
  } else {
    g_plus = model.shape_jet(y - p.cross_shift);
    g_minus = model.shape_jet(-y - p.cross_shift);
  }
  const double avv = model.amplitude(Component::VV);
  const double ass = model.amplitude(Component::SS);
  const double asv = model.amplitude(Component::SV);

  Integrand out;
  for (int i = 0; i < 6; ++i) out(i) = -avv * g.hess(kPairs[i][0], kPairs[i][1]);
  out(6) = ass * g.value;
  out.segment<3>(7) = asv * g_plus.grad;
  out.segment<3>(10) = asv * g_minus.grad;
  out.segment<3>(13) = -avv * s * g.laplacian_grad;
  out(16) = asv * s * g_plus.laplacian;
  return out;
}

double truncation_point(const CorrelationModel& model, const Vec3& k,
                        const CoefficientOptions& opt) {
  const double kn = k.norm();
  const double scale = model.params().ell / kn;
  const double hard = (model.decay_radius() + model.params().cross_shift.norm()) / kn;
  return quad::find_cutoff(
      [&](double s) { return integrand_at(model, k, s).lpNorm<Eigen::Infinity>(); }, 0.0,
      0.25 * scale, hard, opt.envelope_rel);
}

int initial_segments(const CorrelationModel& model, const Vec3& k, double s_max) {
  const double cells = s_max * k.norm() / model.params().ell;
  return std::clamp(static_cast<int>(std::ceil(cells)), 1, 512);
}

}  // namespace

Mat4 TransportCoefficients::second_order_block() const {
  Mat4 a = Mat4::Zero();
  a.topLeftCorner<3, 3>() = D_mn;
  const Vec3 cross = 0.5 * (D_m_plus + D_m_minus);
  a.block<3, 1>(0, 3) = cross;
  a.block<1, 3>(3, 0) = cross.transpose();
  a(3, 3) = D;
  return a;
}

namespace {

// The one-sided generator integrals only; no formal cross-check routes.
TransportCoefficients generator_coefficients(const CorrelationModel& model, const Vec3& k,
                                             const CoefficientOptions& opt) {
  require_momentum(k, opt);
  TransportCoefficients c;
  c.k = k;
  const double s_max = truncation_point(model, k, opt);
  c.s_max = s_max;
  const int segs = initial_segments(model, k, s_max);
  const quad::Options qopt{opt.abs_tol, opt.max_evaluations};

  const auto main = quad::integrate<kNumIntegrands>(
      [&](double s) { return integrand_at(model, k, s); }, 0.0, s_max, qopt, segs);
  const Integrand& v = main.value;
  for (int i = 0; i < 6; ++i) {
    c.D_mn(kPairs[i][0], kPairs[i][1]) = v(i);
    c.D_mn(kPairs[i][1], kPairs[i][0]) = v(i);
  }
  c.D = v(6);
  c.D_m_plus = v.segment<3>(7);
  c.D_m_minus = v.segment<3>(10);
  c.E_m = v.segment<3>(13);
  c.E = v(16);
  c.quad_error = main.error;
  c.evaluations = main.evaluations;
  return c;
}

}  // namespace

TransportCoefficients compute_coefficients(const CorrelationModel& model, const Vec3& k,
                                           const CoefficientOptions& opt) {
  TransportCoefficients c = generator_coefficients(model, k, opt);
  const double s_max = c.s_max;
  const int segs = initial_segments(model, k, s_max);
  const quad::Options qopt{opt.abs_tol, opt.max_evaluations};

  // Independent routes for the Wigner-equation lettering.
  const auto formal = quad::integrate<3>(
      [&](double s) -> Eigen::Vector3d {
        return model.eval_grad(Component::SV, s * k);
      },
      -s_max, s_max, qopt, 2 * segs);
  c.E_formal = formal.value;

  const auto f_formal = quad::integrate<1>(
      [&](double s) -> Eigen::Matrix<double, 1, 1> {
        return Eigen::Matrix<double, 1, 1>(s * model.eval_laplacian(Component::SV, s * k));
      },
      0.0, s_max, qopt, segs);
  c.F_formal = f_formal.value(0);

  const auto kappa = quad::integrate<1>(
      [&](double s) -> Eigen::Matrix<double, 1, 1> {
        return Eigen::Matrix<double, 1, 1>(model.eval(Component::SS, s * k));
      },
      0.0, s_max, qopt, segs);
  c.kappa = kappa.value(0);

  c.evaluations += formal.evaluations + f_formal.evaluations + kappa.evaluations;
  c.quad_error = std::max({c.quad_error, formal.error, f_formal.error, kappa.error});
  return c;
}

Mat3 momentum_diffusion_two_sided(const CorrelationModel& model, const Vec3& k,
                                  const CoefficientOptions& opt) {
  require_momentum(k, opt);
  const double s_max = truncation_point(model, k, opt);
  const int segs = initial_segments(model, k, s_max);
  const auto r = quad::integrate<6>(
      [&](double s) -> Eigen::Matrix<double, 6, 1> {
        const Mat3 h = model.eval_hess(Component::VV, s * k);
        Eigen::Matrix<double, 6, 1> out;
        for (int i = 0; i < 6; ++i) out(i) = h(kPairs[i][0], kPairs[i][1]);
        return out;
      },
      -s_max, s_max, {opt.abs_tol, opt.max_evaluations}, 2 * segs);
  Mat3 d;
  for (int i = 0; i < 6; ++i) {
    d(kPairs[i][0], kPairs[i][1]) = -0.5 * r.value(i);
    d(kPairs[i][1], kPairs[i][0]) = -0.5 * r.value(i);
  }
  return d;
}

double IdentityReport::max() const {
  return std::max({momentum_drift_residual, phase_drift_residual, sphere_trace_residual,
                   null_direction_residual});
}

IdentityReport check_divergence_identities(const CorrelationModel& model, const Vec3& k,
                                           double fd_step, const CoefficientOptions& opt) {
  const TransportCoefficients c0 = generator_coefficients(model, k, opt);
  Vec3 div_D = Vec3::Zero();
  double div_Dm = 0.0;
  // five-point central differences, error O(fd_step^4)
  const double w = 1.0 / (12.0 * fd_step);
  for (int m = 0; m < 3; ++m) {
    Vec3 dk = Vec3::Zero();
    dk(m) = fd_step;
    const TransportCoefficients up = generator_coefficients(model, k + dk, opt);
    const TransportCoefficients dn = generator_coefficients(model, k - dk, opt);
    const TransportCoefficients up2 = generator_coefficients(model, k + 2.0 * dk, opt);
    const TransportCoefficients dn2 = generator_coefficients(model, k - 2.0 * dk, opt);
    div_D += w * (8.0 * (up.D_mn.row(m) - dn.D_mn.row(m)) - (up2.D_mn.row(m) - dn2.D_mn.row(m)))
                     .transpose();
    div_Dm += w * (8.0 * (up.D_m_plus(m) - dn.D_m_plus(m)) - (up2.D_m_plus(m) - dn2.D_m_plus(m)));
  }
  IdentityReport r;
  r.momentum_drift_residual = (div_D - c0.E_m).lpNorm<Eigen::Infinity>();
  r.phase_drift_residual = std::abs(div_Dm - c0.E);
  r.sphere_trace_residual = std::abs(c0.D_mn.trace() + c0.E_m.dot(k));
  r.null_direction_residual = (c0.D_mn * k.normalized()).norm();
  return r;
}

WignerCoefficients reduce_generator_to_wigner(const TransportCoefficients& c) {
  // g = e^{iz} r(k): d/dz -> i, d^2/dz^2 -> -1. The mixed term
  // (D_m(k) + D_m(-k)) d^2/dk_m dz becomes i E_vec . grad_k, E d/dz becomes
  // i E, and D d^2/dz^2 becomes -D.
  WignerCoefficients w;
  w.E_vec = c.D_m_plus + c.D_m_minus;
  w.F = c.E;
  w.kappa = c.D;
  return w;
}

IsotropicCoefficientMap::IsotropicCoefficientMap(const CorrelationModel& model, double k_norm,
                                                 const CoefficientOptions& opt)
    : k_norm_(k_norm) {
  if (!model.is_isotropic()) {
    throw ConfigError("IsotropicCoefficientMap requires a model without cross shift");
  }
  ref_ = compute_coefficients(model, Vec3(0.0, 0.0, k_norm), opt);
}

TransportCoefficients IsotropicCoefficientMap::at(const Vec3& k) const {
  const double kn = k.norm();
  const double lambda = kn / k_norm_;
  const Mat3 q =
      Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), k / kn).toRotationMatrix();
  const double s1 = 1.0 / lambda, s2 = 1.0 / (lambda * lambda);
  TransportCoefficients c = ref_;
  c.k = k;
  c.D_mn = s1 * (q * ref_.D_mn * q.transpose());
  c.D = s1 * ref_.D;
  c.kappa = s1 * ref_.kappa;
  c.D_m_plus = s1 * (q * ref_.D_m_plus);
  c.D_m_minus = s1 * (q * ref_.D_m_minus);
  c.E_formal = s1 * (q * ref_.E_formal);
  c.E_m = s2 * (q * ref_.E_m);
  c.E = s2 * ref_.E;
  c.F_formal = s2 * ref_.F_formal;
  c.s_max = ref_.s_max * s1;
  return c;
}

std::unique_ptr<CoefficientMap> make_coefficient_map(const CorrelationModel& model,
                                                     double k_norm,
                                                     const CoefficientOptions& opt) {
  if (model.is_isotropic()) return std::make_unique<IsotropicCoefficientMap>(model, k_norm, opt);
  return std::make_unique<QuadratureCoefficientMap>(model, opt);
}

}  // namespace phasedrift
