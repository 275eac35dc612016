#include "phasedrift/correlation.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace phasedrift {

namespace {

// Bump spectrum: radial density f(kappa) ~ kappa^2 exp(-a / (1 - (kappa/kc)^2)),
// kc = kBumpCutoffScale / ell. With a = 4 and kc = 4/ell the mean of |xi|^2
// is about 3/ell^2, the same curvature at the origin as the Gaussian family.
constexpr double kBumpSharpness = 4.0;
constexpr double kBumpCutoffScale = 4.0;
constexpr int kBumpNodes = 256;

// j_n(x) / x^n for n = 0..3. Power series near zero, closed forms beyond.
void spherical_bessel_ratios(double x, double out[4]) {
  if (x < 2.0) {
    const double w = -0.5 * x * x;
    for (int n = 0; n < 4; ++n) {
      double dfact = 1.0;  // (2n+1)!!
      for (int m = 3; m <= 2 * n + 1; m += 2) dfact *= m;
      double term = 1.0 / dfact;
      double sum = term;
      for (int k = 1; k < 30; ++k) {
        term *= w / (k * (2.0 * n + 2.0 * k + 1.0));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
      }
      out[n] = sum;
    }
    return;
  }
  const double s = std::sin(x), c = std::cos(x);
  const double ix = 1.0 / x;
  const double j0 = s * ix;
  const double j1 = (s * ix - c) * ix;
  const double j2 = (3.0 * ix * ix - 1.0) * s * ix - 3.0 * c * ix * ix;
  const double j3 = (15.0 * ix * ix * ix - 6.0 * ix) * s * ix - (15.0 * ix * ix - 1.0) * c * ix;
  out[0] = j0;
  out[1] = j1 * ix;
  out[2] = j2 * ix * ix;
  out[3] = j3 * ix * ix * ix;
}

}  // namespace

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::GaussianIsotropic: return "GaussianIsotropic";
    case KernelFamily::BumpSpectrum: return "BumpSpectrum";
  }
  return "unknown";
}

KernelFamily parse_family(const std::string& name) {
  if (name == "GaussianIsotropic" || name == "gaussian") return KernelFamily::GaussianIsotropic;
  if (name == "BumpSpectrum" || name == "bump") return KernelFamily::BumpSpectrum;
  throw ConfigError(fmt::format("unknown correlation family '{}'", name));
}

std::string to_string(Component c) {
  switch (c) {
    case Component::VV: return "VV";
    case Component::SV: return "SV";
    case Component::VS: return "VS";
    case Component::SS: return "SS";
  }
  return "?";
}

CorrelationModel::CorrelationModel(const CorrelationParams& params) : params_(params) {
  if (!(params_.ell > 0.0)) throw ConfigError("correlation length ell must be positive");
  if (params_.family == KernelFamily::BumpSpectrum) {
    bump_.cutoff = kBumpCutoffScale / params_.ell;
    const double h = bump_.cutoff / kBumpNodes;
    double total = 0.0;
    for (int i = 1; i < kBumpNodes; ++i) {
      const double kappa = i * h;
      const double t = kappa / bump_.cutoff;
      const double f = kappa * kappa * std::exp(-kBumpSharpness / (1.0 - t * t));
      bump_.nodes.push_back(kappa);
      bump_.weights.push_back(h * f);
      total += h * f;
    }
    for (double& w : bump_.weights) w /= total;
    bump_.density_norm = 1.0 / total;
    for (int i = 0; i <= 4 * kBumpNodes; ++i) {
      bump_.peak_density =
          std::max(bump_.peak_density, bump_radial_density(bump_.cutoff * i / (4.0 * kBumpNodes)));
    }
    bump_.peak_density *= 1.01;
  }
}

double CorrelationModel::bump_radial_density(double kappa) const {
  const double t = kappa / bump_.cutoff;
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return bump_.density_norm * kappa * kappa * std::exp(-kBumpSharpness / (1.0 - t * t));
}

void CorrelationModel::profile_derivatives(double r2, double out[4]) const {
  if (params_.family == KernelFamily::GaussianIsotropic) {
    const double inv = 1.0 / (params_.ell * params_.ell);
    const double g = std::exp(-0.5 * r2 * inv);
    out[0] = g;
    out[1] = -inv * g;
    out[2] = inv * inv * g;
    out[3] = -inv * inv * inv * g;
    return;
  }
  // G^{(n)}(u) = (-1)^n sum_i w_i kappa_i^{2n} j_n(kappa_i r) / (kappa_i r)^n
  const double r = std::sqrt(r2);
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  double ratios[4];
  for (std::size_t i = 0; i < bump_.nodes.size(); ++i) {
    const double kappa = bump_.nodes[i];
    spherical_bessel_ratios(kappa * r, ratios);
    const double k2 = kappa * kappa;
    const double w = bump_.weights[i];
    acc[0] += w * ratios[0];
    acc[1] += w * k2 * ratios[1];
    acc[2] += w * k2 * k2 * ratios[2];
    acc[3] += w * k2 * k2 * k2 * ratios[3];
  }
  out[0] = acc[0];
  out[1] = -acc[1];
  out[2] = acc[2];
  out[3] = -acc[3];
}

KernelJet CorrelationModel::shape_jet(const Vec3& y) const {
  const double r2 = y.squaredNorm();
  double g[4];
  profile_derivatives(r2, g);
  // g(y) = G(|y|^2/2): grad = G' y, hess = G'' y y^T + G' I,
  // lap = G'' |y|^2 + 3 G', grad lap = (G''' |y|^2 + 5 G'') y.
  KernelJet jet;
  jet.value = g[0];
  jet.grad = g[1] * y;
  jet.hess = g[2] * (y * y.transpose()) + g[1] * Mat3::Identity();
  jet.laplacian = g[2] * r2 + 3.0 * g[1];
  jet.laplacian_grad = (g[3] * r2 + 5.0 * g[2]) * y;
  return jet;
}

double CorrelationModel::amplitude(Component c) const {
  switch (c) {
    case Component::VV: return params_.sigma_v * params_.sigma_v;
    case Component::SS: return params_.sigma_s * params_.sigma_s;
    case Component::SV:
    case Component::VS: return params_.rho_cross * params_.sigma_v * params_.sigma_s;
  }
  return 0.0;
}

KernelJet CorrelationModel::jet(Component c, const Vec3& y) const {
  const double a = amplitude(c);
  KernelJet j;
  switch (c) {
    case Component::VV:
    case Component::SS: j = shape_jet(y); break;
    case Component::SV: j = shape_jet(y - params_.cross_shift); break;
    case Component::VS: {
      // R^VS(y) = R^SV(-y): odd-order derivatives flip sign.
      j = shape_jet(-y - params_.cross_shift);
      j.grad = -j.grad;
      j.laplacian_grad = -j.laplacian_grad;
      break;
    }
  }
  j.value *= a;
  j.grad *= a;
  j.hess *= a;
  j.laplacian *= a;
  j.laplacian_grad *= a;
  return j;
}

double CorrelationModel::eval(Component c, const Vec3& y) const {
  const double a = amplitude(c);
  if (a == 0.0) return 0.0;
  Vec3 arg = y;
  if (c == Component::SV) arg = y - params_.cross_shift;
  if (c == Component::VS) arg = -y - params_.cross_shift;
  double g[4];
  profile_derivatives(arg.squaredNorm(), g);
  return a * g[0];
}

Vec3 CorrelationModel::eval_grad(Component c, const Vec3& y) const { return jet(c, y).grad; }
Mat3 CorrelationModel::eval_hess(Component c, const Vec3& y) const { return jet(c, y).hess; }
double CorrelationModel::eval_laplacian(Component c, const Vec3& y) const {
  return jet(c, y).laplacian;
}
Vec3 CorrelationModel::eval_laplacian_grad(Component c, const Vec3& y) const {
  return jet(c, y).laplacian_grad;
}

double CorrelationModel::shape_spectrum(double xi_norm) const {
  if (params_.family == KernelFamily::GaussianIsotropic) {
    const double l = params_.ell;
    return std::pow(2.0 * std::numbers::pi, 1.5) * l * l * l *
           std::exp(-0.5 * xi_norm * xi_norm * l * l);
  }
  if (xi_norm <= 0.0) {
    // limit of f(kappa) / kappa^2 at zero
    return 2.0 * std::numbers::pi * std::numbers::pi * bump_.density_norm *
           std::exp(-kBumpSharpness);
  }
  // (2 pi)^3 f(|xi|) / (4 pi |xi|^2)
  return 2.0 * std::numbers::pi * std::numbers::pi * bump_radial_density(xi_norm) /
         (xi_norm * xi_norm);
}

double CorrelationModel::spectral_cutoff() const {
  return params_.family == KernelFamily::BumpSpectrum ? bump_.cutoff
                                                      : std::numeric_limits<double>::infinity();
}

Vec3 CorrelationModel::sample_wavevector(CounterRng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  if (params_.family == KernelFamily::GaussianIsotropic) {
    const double inv = 1.0 / params_.ell;
    return Vec3(normal(rng), normal(rng), normal(rng)) * inv;
  }
  double kappa = 0.0;
  for (;;) {
    kappa = bump_.cutoff * rng.uniform();
    if (rng.uniform() * bump_.peak_density <= bump_radial_density(kappa)) break;
  }
  Vec3 dir;
  do {
    dir = Vec3(normal(rng), normal(rng), normal(rng));
  } while (dir.squaredNorm() < 1e-20);
  return kappa * dir.normalized();
}

Eigen::Matrix2d CorrelationModel::mode_covariance(const Vec3& /*xi*/) const {
  // Shared shape: the spectral matrix divided by the sampling density is the
  // same constant matrix at every wavevector.
  const double sv = params_.sigma_v, ss = params_.sigma_s;
  Eigen::Matrix2d c;
  c << sv * sv, params_.rho_cross * sv * ss, params_.rho_cross * sv * ss, ss * ss;
  return c;
}

void CorrelationModel::spectral_matrix(const Vec3& xi, Eigen::Matrix2d& re,
                                       Eigen::Matrix2d& im) const {
  const double s = shape_spectrum(xi.norm());
  const double sv = params_.sigma_v, ss = params_.sigma_s;
  const double cross = params_.rho_cross * sv * ss * s;
  // hat R^{SV}(xi) = cross * exp(-i xi.b); hat R^{VS} is its conjugate.
  const double phase = xi.dot(params_.cross_shift);
  re << sv * sv * s, cross * std::cos(phase), cross * std::cos(phase), ss * ss * s;
  im << 0.0, cross * std::sin(phase), -cross * std::sin(phase), 0.0;
}

double CorrelationModel::decay_radius() const {
  return params_.family == KernelFamily::GaussianIsotropic ? 9.5 * params_.ell
                                                           : 60.0 * params_.ell;
}

std::vector<std::string> validate(const CorrelationParams& p) {
  std::vector<std::string> out;
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(p.sigma_v) || p.sigma_v < 0.0) out.push_back("sigma_v must be finite and >= 0");
  if (!finite(p.sigma_s) || p.sigma_s < 0.0) out.push_back("sigma_s must be finite and >= 0");
  if (!finite(p.ell) || p.ell <= 0.0) out.push_back("ell must be finite and > 0");
  if (!finite(p.rho_cross) || p.rho_cross < -1.0 || p.rho_cross > 1.0) {
    out.push_back("cross-correlation out of [-1,1]");
  }
  if (!p.cross_shift.allFinite()) out.push_back("cross_shift must be finite");
  if (!out.empty()) return out;

  const CorrelationModel model(p);

  // Deterministic wavevector sample: Fibonacci directions on a set of shells.
  constexpr int kDirections = 64;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double kmax = std::min(model.spectral_cutoff(), 8.0 / p.ell);
  std::vector<Vec3> dirs;
  for (int i = 0; i < kDirections; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / kDirections;
    const double rr = std::sqrt(1.0 - z * z);
    dirs.emplace_back(rr * std::cos(golden * i), rr * std::sin(golden * i), z);
  }

  // Hermitian PSD: nonnegative diagonal and nonnegative determinant.
  for (int shell = 0; shell <= 16 && out.empty(); ++shell) {
    const double radius = kmax * shell / 16.0 * 0.999;
    for (const Vec3& d : dirs) {
      Eigen::Matrix2d re, im;
      model.spectral_matrix(radius * d, re, im);
      const double det = re(0, 0) * re(1, 1) - (re(0, 1) * re(0, 1) + im(0, 1) * im(0, 1));
      const double scale = std::max(1e-300, re(0, 0) * re(1, 1));
      if (re(0, 0) < 0.0 || re(1, 1) < 0.0 || det < -1e-12 * scale) {
        out.push_back(fmt::format("spectral matrix not PSD at xi = ({:.6g}, {:.6g}, {:.6g})",
                                  radius * d.x(), radius * d.y(), radius * d.z()));
        break;
      }
    }
  }

  // hat R^VV must not vanish on any plane through the origin. A zero
  // potential (sigma_v = 0) is accepted as the degenerate no-scattering case.
  if (p.sigma_v > 0.0) {
    for (const Vec3& normal : dirs) {
      Vec3 u = normal.unitOrthogonal();
      Vec3 w = normal.cross(u);
      double best = 0.0;
      for (int a = 0; a < 16; ++a) {
        const double ang = 2.0 * std::numbers::pi * a / 16.0;
        for (int s = 1; s <= 8; ++s) {
          const Vec3 xi = (kmax * s / 9.0) * (std::cos(ang) * u + std::sin(ang) * w);
          best = std::max(best, p.sigma_v * p.sigma_v * model.shape_spectrum(xi.norm()));
        }
      }
      if (!(best > 0.0)) {
        out.push_back(fmt::format("power spectrum of V vanishes on the plane with normal "
                                  "({:.6g}, {:.6g}, {:.6g})",
                                  normal.x(), normal.y(), normal.z()));
        break;
      }
    }
  }

  // Rapid decay: the derivative envelope must fall by orders of magnitude
  // between a quarter and one decay radius and be negligible beyond it.
  {
    const double r0 = model.decay_radius();
    double env_near = 0.0, env_far = 0.0;
    for (int i = 0; i < 64; ++i) {
      const Vec3 y1(0.25 * r0 * (1.0 + i / 64.0), 0.0, 0.0);
      const Vec3 y2(r0 * (1.0 + i / 64.0), 0.0, 0.0);
      const KernelJet a = model.shape_jet(y1), b = model.shape_jet(y2);
      // order-n derivatives in units of ell^-n
      const double l = p.ell;
      env_near = std::max({env_near, std::abs(a.value), l * a.grad.norm(), l * l * a.hess.norm(),
                           l * l * l * a.laplacian_grad.norm()});
      env_far = std::max({env_far, std::abs(b.value), l * b.grad.norm(), l * l * b.hess.norm(),
                          l * l * l * b.laplacian_grad.norm()});
    }
    if (env_far > 1e-12 || (env_near > 0.0 && env_far > 1e-4 * env_near)) {
      out.push_back(fmt::format("correlation does not decay fast enough (envelope {:.3g} at "
                                "radius {:.3g})",
                                env_far, r0));
    }
  }
  return out;
}

}  // namespace phasedrift
