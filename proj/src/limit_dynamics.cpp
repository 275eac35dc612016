#include "phasedrift/limit_dynamics.hpp"

#include "phasedrift/delta_dynamics.hpp"
#include "phasedrift/detail/parallel.hpp"
#include "phasedrift/rng.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace phasedrift {

Mat4 diffusion_factor(const TransportCoefficients& coeffs) {
  const Mat4 a = coeffs.second_order_block();
  Eigen::SelfAdjointEigenSolver<Mat4> eig(a);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of A failed");
  Eigen::Vector4d lam = eig.eigenvalues();
  if (lam.minCoeff() < -1e-9) {
    throw NumericalError(fmt::format(
        "second-order block is not positive semidefinite at k = ({}, {}, {}): eigenvalue {:.3e}",
        coeffs.k.x(), coeffs.k.y(), coeffs.k.z(), lam.minCoeff()));
  }
  for (int i = 0; i < 4; ++i) lam(i) = std::sqrt(2.0 * std::max(lam(i), 0.0));
  return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

namespace {

LimitState advance(const LimitState& s, const TransportCoefficients& c, const Mat4& B, double dt,
                   const Eigen::Vector4d& noise, double k_norm) {
  const Eigen::Vector4d kick = B * noise * std::sqrt(dt);
  LimitState next;
  next.x = s.x - s.k * dt;
  Vec3 k = s.k + c.E_m * dt + kick.head<3>();
  const double n = k.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("momentum left the sphere");
  next.k = k * (k_norm / n);
  next.z = s.z + c.E * dt + kick(3);
  return next;
}

}  // namespace

LimitState step_limit_sde(const LimitState& state, const TransportCoefficients& coeffs,
                          double dt, const std::array<double, 4>& noise, double k_norm) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const Eigen::Vector4d xi(noise[0], noise[1], noise[2], noise[3]);
  return advance(state, coeffs, diffusion_factor(coeffs), dt, xi, k_norm);
}

double default_limit_dt(const TransportCoefficients& at_k0) {
  Eigen::SelfAdjointEigenSolver<Mat3> eig(at_k0.D_mn, Eigen::EigenvaluesOnly);
  const double c = eig.eigenvalues().maxCoeff();
  return 1e-3 * (c > 1.0 ? 1.0 / c : 1.0);
}

namespace {

struct LimitPathResult {
  std::vector<PathPoint> points;
  LimitState final_state;
  double shell_max = 0.0;
};

// Runs one path of n_steps steps of size h and records the state at the
// requested step indices (sorted ascending).
LimitPathResult run_path(const CoefficientMap& coeffs, const Vec3& x0, const Vec3& k0, double h,
                         long n_steps, const std::vector<long>& record, std::uint64_t seed) {
  CounterRng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double k_norm = k0.norm();
  LimitState s{x0, k0, 0.0};
  LimitPathResult r;
  std::size_t next = 0;
  const auto emit = [&](long step) {
    while (next < record.size() && record[next] == step) {
      r.points.push_back({s.z, s.k - k0, s.k.norm() - k_norm});
      ++next;
    }
  };
  emit(0);
  for (long n = 0; n < n_steps; ++n) {
    const TransportCoefficients c = coeffs.at(s.k);
    const Eigen::Vector4d xi(normal(rng), normal(rng), normal(rng), normal(rng));
    s = advance(s, c, diffusion_factor(c), h, xi, k_norm);
    r.shell_max = std::max(r.shell_max, std::abs(s.k.norm() - k_norm));
    emit(n + 1);
  }
  if (!s.x.allFinite() || !std::isfinite(s.z)) throw NumericalError("non-finite limit path");
  r.final_state = s;
  return r;
}

struct StepPlan {
  double h = 0.0;
  long n_steps = 0;
};

StepPlan plan(double t_end, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_end >= 0.0)) throw ConfigError("t_end must be >= 0");
  StepPlan p;
  p.n_steps = t_end > 0.0 ? static_cast<long>(std::ceil(t_end / dt - 1e-9)) : 0;
  p.h = p.n_steps > 0 ? t_end / p.n_steps : 0.0;
  return p;
}

EnsembleStats run_limit(const CorrelationModel& model, const LimitEnsembleParams& p,
                        int threads) {
  if (p.n_paths < 2) throw ConfigError("n_paths must be >= 2");
  const double k_norm = p.k0.norm();
  if (!(k_norm > 0.0)) throw ConfigError("k0 must be nonzero");
  const auto coeffs = make_coefficient_map(model, k_norm);
  const double dt = p.dt ? *p.dt : default_limit_dt(coeffs->at(p.k0));
  const StepPlan sp = plan(p.t_end, dt);

  std::vector<double> ts = p.checkpoints.empty() ? std::vector<double>{p.t_end} : p.checkpoints;
  std::vector<long> idx;
  for (double t : ts) {
    if (!(t >= 0.0 && t <= p.t_end * (1.0 + 1e-12))) {
      throw ConfigError(fmt::format("checkpoint {} outside [0, t_end = {}]", t, p.t_end));
    }
    idx.push_back(sp.n_steps > 0 ? std::clamp(std::lround(t / p.t_end * sp.n_steps), 0L, sp.n_steps)
                                 : 0L);
  }
  // record in step order, report in checkpoint order
  std::vector<std::size_t> order(ts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return idx[a] < idx[b]; });
  std::vector<long> record;
  for (std::size_t i : order) record.push_back(idx[i]);

  auto out = detail::map_paths<LimitPathResult>(p.n_paths, threads, [&](int i) {
    return run_path(*coeffs, p.x0, p.k0, sp.h, sp.n_steps, record,
                    derive_seed(p.base_seed, static_cast<std::uint64_t>(i), StreamTag::LimitNoise));
  });
  detail::check_failures(p.n_paths, out.failed, out.messages);

  EnsembleStats st;
  st.n_paths = p.n_paths;
  st.failed_paths = out.failed;
  std::vector<const LimitPathResult*> ok;
  for (const auto& r : out.results) {
    if (r) ok.push_back(&*r);
  }
  st.n_effective = static_cast<int>(ok.size());
  st.checkpoints.resize(ts.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    std::vector<PathPoint> pts;
    pts.reserve(ok.size());
    for (const auto* r : ok) pts.push_back(r->points[j]);
    st.checkpoints[order[j]] = summarize_checkpoint(ts[order[j]], pts);
  }
  for (const auto* r : ok) st.shell_drift_path_max = std::max(st.shell_drift_path_max, r->shell_max);
  // no stopping times for the limit process
  st.tau_violent_freq = st.tau_tube_freq = st.tau_freq = frequency(0, st.n_effective);
  return st;
}

}  // namespace

EnsembleStats simulate_limit_ensemble(const CorrelationModel& model,
                                      const LimitEnsembleParams& params) {
  return run_limit(model, params, resolve_threads(params.threads));
}

EnsembleStats simulate_limit_ensemble_serial(const CorrelationModel& model,
                                             const LimitEnsembleParams& params) {
  return run_limit(model, params, 1);
}

double refine_limit_dt(const CorrelationModel& model, const LimitEnsembleParams& params,
                       int max_halvings) {
  LimitEnsembleParams p = params;
  p.checkpoints = {p.t_end};
  double dt = p.dt ? *p.dt : default_limit_dt(compute_coefficients(model, p.k0));
  p.dt = dt;
  EnsembleStats coarse = simulate_limit_ensemble(model, p);
  for (int i = 0; i < max_halvings; ++i) {
    p.dt = 0.5 * dt;
    const EnsembleStats fine = simulate_limit_ensemble(model, p);
    const CheckpointStats& a = coarse.checkpoints.back();
    const CheckpointStats& b = fine.checkpoints.back();
    const bool settled = std::abs(a.var_Z.value - b.var_Z.value) < b.var_Z.se &&
                         std::abs(a.deco_abs.value - b.deco_abs.value) < b.deco_abs.se;
    dt *= 0.5;
    if (settled) break;
    coarse = fine;
  }
  return dt;
}

double ObservableEstimate::se() const { return std::hypot(se_re, se_im); }

ObservableEstimate estimate_limit_observable(const CorrelationModel& model, const Vec3& x0,
                                             const Vec3& k0, double t, int n_paths,
                                             std::uint64_t seed, const Observable& W0,
                                             std::optional<double> dt,
                                             std::optional<double> max_se, int threads) {
  if (n_paths < 2) throw ConfigError("n_paths must be >= 2");
  const double k_norm = k0.norm();
  if (!(k_norm > 0.0)) throw ConfigError("k0 must be nonzero");
  const auto coeffs = make_coefficient_map(model, k_norm);
  const StepPlan sp = plan(t, dt ? *dt : default_limit_dt(coeffs->at(k0)));

  auto out = detail::map_paths<std::complex<double>>(n_paths, resolve_threads(threads), [&](int i) {
    const LimitPathResult r =
        run_path(*coeffs, x0, k0, sp.h, sp.n_steps, {},
                 derive_seed(seed, static_cast<std::uint64_t>(i), StreamTag::LimitNoise));
    const LimitState& s = r.final_state;
    return std::polar(1.0, s.z) * W0(s.x, s.k);
  });
  detail::check_failures(n_paths, out.failed, out.messages);
  std::vector<std::complex<double>> samples;
  samples.reserve(out.results.size());
  for (const auto& v : out.results) {
    if (v) samples.push_back(*v);
  }
  const ComplexEstimate m = mean_complex(samples);
  ObservableEstimate est{m.value, m.se_re, m.se_im, static_cast<int>(samples.size())};
  if (max_se && est.se() > *max_se) {
    throw NumericalError(fmt::format(
        "standard error {:.3e} exceeds the requested {:.3e} with {} paths", est.se(), *max_se,
        n_paths));
  }
  return est;
}

std::complex<double> SphereSolution::at(double polar_angle) const {
  if (theta.empty()) return {};
  // q is even about both poles, so the end cells extend flat to the pole
  if (polar_angle <= theta.front()) return q.front();
  if (polar_angle >= theta.back()) return q.back();
  const auto it = std::upper_bound(theta.begin(), theta.end(), polar_angle);
  const std::size_t j = static_cast<std::size_t>(it - theta.begin());
  const double w = (polar_angle - theta[j - 1]) / (theta[j] - theta[j - 1]);
  return (1.0 - w) * q[j - 1] + w * q[j];
}

std::complex<double> SphereSolution::mass() const {
  std::complex<double> m = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) m += q[i] * cell_weight[i];
  return m;
}

std::complex<double> SphereSolution::project(const std::function<double(double)>& f) const {
  std::complex<double> m = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) m += q[i] * f(theta[i]) * cell_weight[i];
  return m;
}

double projected_decay_rate(const SphereSolution& sol, const std::function<double(double)>& q0,
                            const std::function<double(double)>& f) {
  if (!(sol.t_end > 0.0)) throw ConfigError("decay rate needs t_end > 0");
  double p0 = 0.0;
  for (std::size_t i = 0; i < sol.theta.size(); ++i) {
    p0 += q0(sol.theta[i]) * f(sol.theta[i]) * sol.cell_weight[i];
  }
  return -std::log(std::abs(sol.project(f)) / std::abs(p0)) / sol.t_end;
}

SphereSolution solve_sphere_kolmogorov(const CorrelationModel& model, double k_norm,
                                       int theta_grid_size, double t_end,
                                       std::optional<double> dt,
                                       const std::function<double(double)>& q0, double safety) {
  if (!model.is_isotropic()) {
    throw ConfigError("the sphere solver needs an isotropic model (zero cross shift)");
  }
  if (theta_grid_size < 4) throw ConfigError("theta_grid_size must be >= 4");
  if (!(t_end >= 0.0)) throw ConfigError("t_end must be >= 0");
  if (!(safety > 0.0 && safety <= 1.0)) throw ConfigError("safety must lie in (0, 1]");

  const TransportCoefficients tc = compute_coefficients(model, Vec3(0.0, 0.0, k_norm));
  SphereSolution sol;
  sol.t_end = t_end;
  sol.c = tc.D_mn(0, 0) / (k_norm * k_norm);
  sol.kappa = tc.kappa;
  sol.phase_drift = tc.E;

  const int M = theta_grid_size;
  const double h = std::numbers::pi / M;
  sol.theta.resize(M);
  sol.cell_weight.resize(M);
  std::vector<double> face_sin(M + 1);
  for (int i = 0; i <= M; ++i) face_sin[i] = std::sin(i * h);
  face_sin[0] = face_sin[M] = 0.0;  // closed poles
  for (int i = 0; i < M; ++i) {
    sol.theta[i] = (i + 0.5) * h;
    sol.cell_weight[i] = std::cos(i * h) - std::cos((i + 1) * h);
  }

  const double bound = sol.c > 0.0 ? safety * h * h / (2.0 * sol.c) : t_end;
  double step = dt ? *dt : bound;
  if (dt && sol.c > 0.0 && *dt > bound * (1.0 + 1e-12)) {
    throw ConfigError(fmt::format(
        "dt = {:.6g} exceeds the explicit stability bound {:.6g} (= {} * dtheta^2 / (2c))", *dt,
        bound, safety));
  }
  if (!(step > 0.0)) step = 1.0;

  std::vector<double> u(M), flux(M + 1, 0.0);
  for (int i = 0; i < M; ++i) u[i] = q0(sol.theta[i]);
  long n_steps = 0;
  double hs = 0.0;
  if (t_end > 0.0 && sol.c > 0.0) {
    n_steps = static_cast<long>(std::ceil(t_end / step - 1e-9));
    hs = t_end / n_steps;
  }
  sol.dt = n_steps > 0 ? hs : 0.0;
  const double coef = sol.c / h;
  for (long n = 0; n < n_steps; ++n) {
    for (int i = 1; i < M; ++i) flux[i] = coef * face_sin[i] * (u[i] - u[i - 1]);
    for (int i = 0; i < M; ++i) u[i] += hs * (flux[i + 1] - flux[i]) / sol.cell_weight[i];
  }

  const std::complex<double> factor = std::exp(std::complex<double>(-sol.kappa, sol.phase_drift) * t_end);
  sol.q.resize(M);
  for (int i = 0; i < M; ++i) sol.q[i] = factor * u[i];
  return sol;
}

}  // namespace phasedrift
