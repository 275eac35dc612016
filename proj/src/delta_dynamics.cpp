#include "phasedrift/delta_dynamics.hpp"

#include "phasedrift/detail/parallel.hpp"
#include "phasedrift/rng.hpp"

#include <fmt/format.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace phasedrift {

void StoppingConfig::validate() const {
  const bool ok = 0.0 < eps1 && eps1 < eps2 && eps2 < 0.5 && eps3 > 0.0 &&
                  eps3 < 0.5 - eps2 && eps4 > 0.5 && eps4 < 1.0 - eps1 - eps2;
  if (!ok) {
    throw ConfigError(fmt::format(
        "stopping exponents violate 0<eps1<eps2<1/2, eps3 in (0,1/2-eps2), eps4 in "
        "(1/2,1-eps1-eps2): eps = ({}, {}, {}, {})",
        eps1, eps2, eps3, eps4));
  }
}

StoppingConfig::Mesh StoppingConfig::mesh(double delta) const {
  const auto fl = [delta](double e) {
    return std::max(1L, static_cast<long>(std::floor(std::pow(delta, -e))));
  };
  Mesh m;
  m.N = fl(eps1);
  m.p = fl(eps2);
  m.q = m.p * fl(eps3);
  m.N1 = m.N * m.p * fl(eps4);
  return m;
}

std::optional<double> StoppingEvents::tau() const {
  if (violent_turn && tube_return) return std::min(*violent_turn, *tube_return);
  if (violent_turn) return violent_turn;
  return tube_return;
}

namespace {

struct Rhs {
  Vec3 dX, dK;
  double dZ;
  double V;
};

Rhs rhs(const FieldRealization& field, const Vec3& X, const Vec3& K, double inv_delta,
        double inv_sqrt_delta) {
  const FieldSample f = field.evaluate(X * inv_delta);
  return {-K, inv_sqrt_delta * f.grad_V, inv_sqrt_delta * f.S, f.V};
}

}  // namespace

PhasePath integrate_path(const FieldRealization& field, const Vec3& x0, const Vec3& k0,
                         double delta, double t_end, double dt, double max_dt_factor) {
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
  if (!(t_end >= 0.0)) throw ConfigError("t_end must be >= 0");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const double k_norm = k0.norm();
  if (!(k_norm > 0.0)) throw ConfigError("k0 must be nonzero");
  const double dt_max = max_dt_factor * delta / k_norm;
  if (dt > dt_max * (1.0 + 1e-12)) {
    throw ConfigError(fmt::format(
        "dt = {:.6g} does not resolve the fast scale: need dt <= {:.3g} * delta / |k0| = {:.6g}",
        dt, max_dt_factor, dt_max));
  }

  const long n_steps = t_end > 0.0 ? static_cast<long>(std::ceil(t_end / dt - 1e-9)) : 0;
  const double h = n_steps > 0 ? t_end / n_steps : 0.0;
  const double inv_delta = 1.0 / delta;
  const double isd = 1.0 / std::sqrt(delta);
  const double sqrt_delta = std::sqrt(delta);

  PhasePath path;
  path.delta = delta;
  path.times.reserve(n_steps + 1);
  path.X.reserve(n_steps + 1);
  path.K.reserve(n_steps + 1);
  path.Z.reserve(n_steps + 1);

  Vec3 X = x0, K = k0;
  double Z = 0.0;
  path.times.push_back(0.0);
  path.X.push_back(X);
  path.K.push_back(K);
  path.Z.push_back(Z);

  Rhs s1 = rhs(field, X, K, inv_delta, isd);
  const double H0 = 0.5 * K.squaredNorm() + sqrt_delta * s1.V;
  double drift = 0.0;

  for (long n = 0; n < n_steps; ++n) {
    const Rhs s2 = rhs(field, X + 0.5 * h * s1.dX, K + 0.5 * h * s1.dK, inv_delta, isd);
    const Rhs s3 = rhs(field, X + 0.5 * h * s2.dX, K + 0.5 * h * s2.dK, inv_delta, isd);
    const Rhs s4 = rhs(field, X + h * s3.dX, K + h * s3.dK, inv_delta, isd);
    X += (h / 6.0) * (s1.dX + 2.0 * s2.dX + 2.0 * s3.dX + s4.dX);
    K += (h / 6.0) * (s1.dK + 2.0 * s2.dK + 2.0 * s3.dK + s4.dK);
    Z += (h / 6.0) * (s1.dZ + 2.0 * s2.dZ + 2.0 * s3.dZ + s4.dZ);

    path.times.push_back((n + 1 == n_steps) ? t_end : (n + 1) * h);
    path.X.push_back(X);
    path.K.push_back(K);
    path.Z.push_back(Z);

    s1 = rhs(field, X, K, inv_delta, isd);
    const double H = 0.5 * K.squaredNorm() + sqrt_delta * s1.V;
    drift = std::max(drift, std::abs(H - H0));
  }
  path.energy_drift = drift;
  if (!X.allFinite() || !K.allFinite() || !std::isfinite(Z)) {
    throw NumericalError("non-finite trajectory");
  }
  return path;
}

namespace {

Vec3 interpolate_direction(const PhasePath& path, double t) {
  const auto& ts = path.times;
  if (t <= ts.front()) return path.K.front().normalized();
  if (t >= ts.back()) return path.K.back().normalized();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - ts.begin());
  const double w = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
  return ((1.0 - w) * path.K[j - 1] + w * path.K[j]).normalized();
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double u = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return (p - (a + u * ab)).norm();
}

}  // namespace

StoppingEvents detect_stopping_times(const PhasePath& path, const StoppingConfig& cfg) {
  StoppingEvents ev;
  if (path.times.size() < 2) return ev;
  const StoppingConfig::Mesh m = cfg.mesh(path.delta);
  const double p = static_cast<double>(m.p);
  const double threshold = 1.0 - 1.0 / static_cast<double>(m.N);
  const double tube = 1.0 / static_cast<double>(m.q);
  const double back = 1.0 / static_cast<double>(m.N1);

  // Violent turn: compare with the direction one mesh cell back and just
  // before the current cell; K_hat(-1/p) := K_hat(0).
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    const double t = path.times[i];
    const long k = static_cast<long>(std::floor(t * p + 1e-12));
    const Vec3 now = path.K[i].normalized();
    const Vec3 prev_cell = interpolate_direction(path, std::max(0.0, (k - 1) / p));
    const Vec3 just_before = interpolate_direction(path, std::max(0.0, k / p - back));
    if (prev_cell.dot(now) <= threshold || just_before.dot(now) <= threshold) {
      ev.violent_turn = t;
      break;
    }
  }

  // Tube return: for t in [t_k, t_{k+1}), k >= 1, X(t) within 1/q of the
  // trace X([0, t_{k-1}]).
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    const double t = path.times[i];
    const long k = static_cast<long>(std::floor(t * p + 1e-12));
    if (k < 1) continue;
    const double t_prev = (k - 1) / p;
    const auto end = std::upper_bound(path.times.begin(), path.times.end(), t_prev);
    const std::size_t last = static_cast<std::size_t>(end - path.times.begin());  // samples <= t_prev
    bool hit = false;
    if (last >= 1) {
      if (last == 1) hit = (path.X[i] - path.X[0]).norm() <= tube;
      for (std::size_t j = 1; j < last && !hit; ++j) {
        hit = point_segment_distance(path.X[i], path.X[j - 1], path.X[j]) <= tube;
      }
    }
    if (hit) {
      ev.tube_return = t;
      break;
    }
  }
  return ev;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("PHASEDRIFT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

namespace {

struct DeltaPathResult {
  std::vector<PathPoint> points;
  double energy_drift = 0.0;
  double shell_max = 0.0;
  StoppingEvents events;
};

std::vector<double> checkpoint_times(const std::vector<double>& requested, double t_end) {
  std::vector<double> ts = requested.empty() ? std::vector<double>{t_end} : requested;
  for (double t : ts) {
    if (!(t >= 0.0 && t <= t_end * (1.0 + 1e-12))) {
      throw ConfigError(fmt::format("checkpoint {} outside [0, t_end = {}]", t, t_end));
    }
  }
  return ts;
}

void check_params(const DeltaEnsembleParams& p) {
  if (p.n_paths < 2) throw ConfigError("n_paths must be >= 2");
  if (!(p.dt_factor > 0.0 && p.dt_factor <= kDefaultDtFactor * (1.0 + 1e-12))) {
    throw ConfigError(fmt::format("dt_factor must lie in (0, {}]", kDefaultDtFactor));
  }
  p.stopping.validate();
}

FieldRealization quenched_field(const CorrelationModel& model, const DeltaEnsembleParams& p) {
  return sample_field(model, p.n_modes,
                      derive_seed(p.field_seed.value_or(p.base_seed), std::numeric_limits<std::uint64_t>::max(),
                                  StreamTag::Field),
                      p.clip_sigmas);
}

PhasePath path_with_field(const FieldRealization& field, const CorrelationModel& model,
                          const DeltaEnsembleParams& p, int index) {
  Vec3 x0 = p.x0;
  if (p.quenched) {
    // Paths in one medium differ by their starting cell.
    CounterRng rng(derive_seed(p.base_seed, static_cast<std::uint64_t>(index),
                               StreamTag::QuenchedOffset));
    const double side = 1000.0 * model.params().ell;
    const Vec3 offset(rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5);
    x0 += p.delta * side * offset;
  }
  const double dt = p.dt_factor * p.delta / p.k0.norm();
  PhasePath path = integrate_path(field, x0, p.k0, p.delta, p.t_end, dt, kDefaultDtFactor);
  path.tau_events = detect_stopping_times(path, p.stopping);
  return path;
}

DeltaPathResult summarize_path(const PhasePath& path, const DeltaEnsembleParams& p,
                               const std::vector<double>& ts) {
  DeltaPathResult r;
  const double k_norm = p.k0.norm();
  const long n_steps = static_cast<long>(path.times.size()) - 1;
  for (double t : ts) {
    const long idx = n_steps > 0 ? std::lround(t / p.t_end * n_steps) : 0;
    const auto i = static_cast<std::size_t>(std::clamp(idx, 0L, n_steps));
    r.points.push_back({path.Z[i], path.K[i] - p.k0, path.K[i].norm() - k_norm});
  }
  for (const Vec3& K : path.K) r.shell_max = std::max(r.shell_max, std::abs(K.norm() - k_norm));
  r.energy_drift = path.energy_drift;
  r.events = path.tau_events;
  return r;
}

EnsembleStats reduce(const detail::PathOutcome<DeltaPathResult>& out, const std::vector<double>& ts,
                     int n_paths) {
  detail::check_failures(n_paths, out.failed, out.messages);
  EnsembleStats st;
  st.n_paths = n_paths;
  st.failed_paths = out.failed;
  std::vector<const DeltaPathResult*> ok;
  for (const auto& r : out.results) {
    if (r) ok.push_back(&*r);
  }
  st.n_effective = static_cast<int>(ok.size());
  for (std::size_t c = 0; c < ts.size(); ++c) {
    std::vector<PathPoint> pts;
    pts.reserve(ok.size());
    for (const auto* r : ok) pts.push_back(r->points[c]);
    st.checkpoints.push_back(summarize_checkpoint(ts[c], pts));
  }
  int violent = 0, tube = 0, any = 0;
  for (const auto* r : ok) {
    violent += r->events.violent_turn.has_value();
    tube += r->events.tube_return.has_value();
    any += r->events.tau().has_value();
    st.energy_drift_max = std::max(st.energy_drift_max, r->energy_drift);
    st.shell_drift_path_max = std::max(st.shell_drift_path_max, r->shell_max);
  }
  st.tau_violent_freq = frequency(violent, st.n_effective);
  st.tau_tube_freq = frequency(tube, st.n_effective);
  st.tau_freq = frequency(any, st.n_effective);
  return st;
}

EnsembleStats run_with_threads(const CorrelationModel& model, const DeltaEnsembleParams& p,
                               int threads) {
  check_params(p);
  const std::vector<double> ts = checkpoint_times(p.checkpoints, p.t_end);
  std::optional<FieldRealization> shared;
  if (p.quenched) shared = quenched_field(model, p);
  auto out = detail::map_paths<DeltaPathResult>(p.n_paths, threads, [&](int i) {
    const FieldRealization own =
        shared ? FieldRealization{}
               : sample_field(model, p.n_modes,
                              derive_seed(p.field_seed.value_or(p.base_seed),
                                          static_cast<std::uint64_t>(i), StreamTag::Field),
                              p.clip_sigmas);
    const PhasePath path = path_with_field(shared ? *shared : own, model, p, i);
    return summarize_path(path, p, ts);
  });
  return reduce(out, ts, p.n_paths);
}

}  // namespace

PhasePath simulate_delta_path(const CorrelationModel& model, const DeltaEnsembleParams& p,
                              int index) {
  check_params(p);
  const FieldRealization field =
      p.quenched ? quenched_field(model, p)
                 : sample_field(model, p.n_modes,
                                derive_seed(p.field_seed.value_or(p.base_seed),
                                            static_cast<std::uint64_t>(index), StreamTag::Field),
                                p.clip_sigmas);
  return path_with_field(field, model, p, index);
}

EnsembleStats run_ensemble(const CorrelationModel& model, const DeltaEnsembleParams& params) {
  return run_with_threads(model, params, resolve_threads(params.threads));
}

EnsembleStats run_ensemble_serial(const CorrelationModel& model,
                                  const DeltaEnsembleParams& params) {
  return run_with_threads(model, params, 1);
}

}  // namespace phasedrift
