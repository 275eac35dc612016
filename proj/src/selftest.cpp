#include "phasedrift/selftest.hpp"

#include "phasedrift/coefficients.hpp"
#include "phasedrift/delta_dynamics.hpp"
#include "phasedrift/limit_dynamics.hpp"

#include <fmt/format.h>

#include <cmath>
#include <functional>
#include <numbers>

namespace phasedrift {

namespace {

SelftestCheck guarded(const std::string& name, const std::function<SelftestCheck()>& fn) {
  try {
    SelftestCheck c = fn();
    c.name = name;
    return c;
  } catch (const std::exception& e) {
    return {name, false, fmt::format("threw: {}", e.what())};
  }
}

}  // namespace

std::vector<SelftestCheck> run_selftest() {
  std::vector<SelftestCheck> out;
  const CorrelationModel gauss{CorrelationParams{}};
  const double root = std::sqrt(std::numbers::pi / 2.0);

  out.push_back(guarded("gaussian_closed_form", [&] {
    const Vec3 k(0.0, 0.0, 2.0);
    const TransportCoefficients c = compute_coefficients(gauss, k);
    const Vec3 kh = k.normalized();
    const Mat3 want = root / 2.0 * (Mat3::Identity() - kh * kh.transpose());
    const double err = std::max((c.D_mn - want).cwiseAbs().maxCoeff(), std::abs(c.kappa - root / 2.0));
    return SelftestCheck{{}, err <= 1e-8, fmt::format("max abs error {:.3e}", err)};
  }));

  out.push_back(guarded("sphere_and_divergence_identities", [&] {
    CorrelationParams shifted;
    shifted.rho_cross = 0.6;
    shifted.cross_shift = Vec3(0.3, -0.2, 0.5);
    CorrelationParams bump;
    bump.family = KernelFamily::BumpSpectrum;
    bump.rho_cross = -0.4;
    bump.ell = 0.7;
    double worst_null = 0.0, worst_trace = 0.0, worst_div = 0.0;
    for (const auto& p : {CorrelationParams{}, shifted, bump}) {
      const CorrelationModel m(p);
      const Vec3 k(0.4, -1.1, 1.6);
      const IdentityReport r = check_divergence_identities(m, k, 1e-3);
      worst_null = std::max(worst_null, r.null_direction_residual);
      worst_trace = std::max(worst_trace, r.sphere_trace_residual);
      worst_div = std::max({worst_div, r.momentum_drift_residual, r.phase_drift_residual});
    }
    const bool ok = worst_null <= 1e-10 && worst_trace <= 1e-6 && worst_div <= 1e-5;
    return SelftestCheck{{}, ok,
                         fmt::format("null {:.2e}, trace {:.2e}, divergence {:.2e}", worst_null,
                                     worst_trace, worst_div)};
  }));

  out.push_back(guarded("formal_coefficients_match_generator", [&] {
    CorrelationParams p;
    p.rho_cross = 0.5;
    p.cross_shift = Vec3(0.2, 0.1, -0.4);
    const TransportCoefficients c = compute_coefficients(CorrelationModel(p), Vec3(0.5, 0.3, 1.5));
    const double err = std::max({(c.E_formal - (c.D_m_plus + c.D_m_minus)).cwiseAbs().maxCoeff(),
                                 std::abs(c.F_formal - c.E), std::abs(c.kappa - c.D)});
    return SelftestCheck{{}, err <= 1e-10, fmt::format("max abs error {:.3e}", err)};
  }));

  out.push_back(guarded("free_motion", [&] {
    CorrelationParams p;
    p.sigma_v = p.sigma_s = 0.0;
    const CorrelationModel m(p);
    const FieldRealization f = sample_field(m, 16, 3);
    const Vec3 x0(0.1, 0.2, 0.3), k0(0.0, 1.0, 2.0);
    const PhasePath path = integrate_path(f, x0, k0, 0.1, 1.0, 0.004);
    const double err = std::max({(path.X.back() - (x0 - k0)).cwiseAbs().maxCoeff(),
                                 (path.K.back() - k0).cwiseAbs().maxCoeff(),
                                 std::abs(path.Z.back())});
    return SelftestCheck{{}, err <= 1e-12, fmt::format("max abs error {:.3e}", err)};
  }));

  out.push_back(guarded("sphere_eigen_decay", [&] {
    const auto cosine = [](double th) { return std::cos(th); };
    const SphereSolution s = solve_sphere_kolmogorov(gauss, 2.0, 180, 0.5, std::nullopt, cosine);
    const double rate = projected_decay_rate(s, cosine, cosine);
    const double want = 2.0 * s.c + s.kappa;
    const double rel = std::abs(rate - want) / want;
    return SelftestCheck{{}, rel <= 1e-2, fmt::format("rate {:.6f}, expected {:.6f}", rate, want)};
  }));

  out.push_back(guarded("limit_step_projection", [&] {
    const TransportCoefficients c = compute_coefficients(gauss, Vec3(0.0, 0.0, 2.0));
    LimitState s{Vec3::Zero(), Vec3(0.0, 0.0, 2.0), 0.0};
    s = step_limit_sde(s, c, 1e-3, {0.3, -1.2, 0.7, 0.5}, 2.0);
    const double err = std::abs(s.k.norm() - 2.0);
    return SelftestCheck{{}, err <= 1e-14, fmt::format("||k| - |k0|| = {:.3e}", err)};
  }));

  out.push_back(guarded("thread_count_independence", [&] {
    DeltaEnsembleParams p;
    p.delta = 0.2;
    p.n_paths = 16;
    p.n_modes = 64;
    p.t_end = 0.2;
    p.threads = 4;
    const EnsembleStats a = run_ensemble(gauss, p);
    const EnsembleStats b = run_ensemble_serial(gauss, p);
    const CheckpointStats &x = a.checkpoints.back(), &y = b.checkpoints.back();
    const bool ok = x.var_Z.value == y.var_Z.value && x.deco_re.value == y.deco_re.value &&
                    x.K_cov == y.K_cov;
    return SelftestCheck{{}, ok, ok ? "bitwise equal" : "parallel and serial results differ"};
  }));

  return out;
}

}  // namespace phasedrift
