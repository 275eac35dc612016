#include "phasedrift/field.hpp"

#include "phasedrift/detail/sincos.hpp"
#include "phasedrift/rng.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace phasedrift {

FieldRealization sample_field(const CorrelationModel& model, int n_modes, std::uint64_t seed,
                              std::optional<double> clip_sigmas) {
  if (n_modes < 1) throw ConfigError("field.n_modes must be >= 1");
  if (clip_sigmas && !(*clip_sigmas > 0.0)) throw ConfigError("field.clip_sigmas must be > 0");

  FieldRealization f;
  f.seed_ = seed;
  const auto n = static_cast<std::size_t>(n_modes);
  f.xi_x_.resize(n);
  f.xi_y_.resize(n);
  f.xi_z_.resize(n);
  f.phase_.resize(n);
  f.amp_v_.resize(n);
  f.amp_s_cos_.resize(n);
  f.amp_s_sin_.resize(n);
  f.norm_ = std::sqrt(2.0 / n_modes);

  CounterRng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec3 shift = model.params().cross_shift;

  for (std::size_t j = 0; j < n; ++j) {
    const Vec3 xi = model.sample_wavevector(rng);
    const Eigen::Matrix2d cov = model.mode_covariance(xi);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const Eigen::Vector2d lambda = eig.eigenvalues();
    const double scale = std::max(1.0, cov.diagonal().maxCoeff());
    if (lambda.minCoeff() < -1e-12 * scale) {
      throw NumericalError(fmt::format(
          "mode covariance not PSD at xi = ({:.6g}, {:.6g}, {:.6g}); min eigenvalue {:.3g}",
          xi.x(), xi.y(), xi.z(), lambda.minCoeff()));
    }
    const Eigen::Matrix2d root = eig.eigenvectors() *
                                 lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                 eig.eigenvectors().transpose();
    Eigen::Vector2d noise(normal(rng), normal(rng));
    if (clip_sigmas) noise = noise.cwiseMax(-*clip_sigmas).cwiseMin(*clip_sigmas);
    const Eigen::Vector2d amp = root * noise;
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double beta = xi.dot(shift);

    f.xi_x_[j] = xi.x();
    f.xi_y_[j] = xi.y();
    f.xi_z_[j] = xi.z();
    f.phase_[j] = phi;
    f.amp_v_[j] = amp(0);
    f.amp_s_cos_[j] = amp(1) * std::cos(beta);
    f.amp_s_sin_[j] = amp(1) * std::sin(beta);
  }
  return f;
}

Eigen::Vector2d FieldRealization::amplitudes(std::size_t j) const {
  return {amp_v_[j], std::hypot(amp_s_cos_[j], amp_s_sin_[j])};
}

FieldSample FieldRealization::evaluate(const Vec3& y) const {
  const std::size_t n = xi_x_.size();
  const double* __restrict kx = xi_x_.data();
  const double* __restrict ky = xi_y_.data();
  const double* __restrict kz = xi_z_.data();
  const double* __restrict ph = phase_.data();
  const double* __restrict av = amp_v_.data();
  const double* __restrict asc = amp_s_cos_.data();
  const double* __restrict ass = amp_s_sin_.data();
  const double y0 = y.x(), y1 = y.y(), y2 = y.z();

  double v = 0.0, gx = 0.0, gy = 0.0, gz = 0.0, s = 0.0;
#pragma omp simd reduction(+ : v, gx, gy, gz, s)
  for (std::size_t j = 0; j < n; ++j) {
    const double theta = kx[j] * y0 + ky[j] * y1 + kz[j] * y2 + ph[j];
    double sn, cs;
    detail::fast_sincos(theta, sn, cs);
    const double a = av[j];
    v += a * cs;
    gx -= a * kx[j] * sn;
    gy -= a * ky[j] * sn;
    gz -= a * kz[j] * sn;
    s += asc[j] * cs - ass[j] * sn;
  }
  FieldSample out;
  out.V = norm_ * v;
  out.grad_V = norm_ * Vec3(gx, gy, gz);
  out.S = norm_ * s;
  return out;
}

FieldSample FieldRealization::evaluate_reference(const Vec3& y) const {
  FieldSample out;
  for (std::size_t j = 0; j < xi_x_.size(); ++j) {
    const Vec3 xi(xi_x_[j], xi_y_[j], xi_z_[j]);
    const double theta = xi.dot(y) + phase_[j];
    const double cs = std::cos(theta), sn = std::sin(theta);
    out.V += amp_v_[j] * cs;
    out.grad_V -= amp_v_[j] * sn * xi;
    out.S += amp_s_cos_[j] * cs - amp_s_sin_[j] * sn;
  }
  out.V *= norm_;
  out.grad_V *= norm_;
  out.S *= norm_;
  return out;
}

}  // namespace phasedrift
