#include "phasedrift/coefficients.hpp"
#include "phasedrift/delta_dynamics.hpp"

#include <doctest.h>

#include <cmath>

using namespace phasedrift;

namespace {

CorrelationModel zero_model() {
  CorrelationParams p;
  p.sigma_v = p.sigma_s = 0.0;
  return CorrelationModel(p);
}

// Straight-line path with samples every h, used to drive the stopping
// detector with hand-made trajectories.
PhasePath scripted(double delta, double t_end, double h, auto&& x_of_t, auto&& k_of_t) {
  PhasePath p;
  p.delta = delta;
  const long n = std::lround(t_end / h);
  for (long i = 0; i <= n; ++i) {
    const double t = i * h;
    p.times.push_back(t);
    p.X.push_back(x_of_t(t));
    p.K.push_back(k_of_t(t));
    p.Z.push_back(0.0);
  }
  return p;
}

}  // namespace

TEST_CASE("free motion is exact") {
  const FieldRealization f = sample_field(zero_model(), 32, 1);
  const Vec3 x0(0.5, -1.0, 0.2), k0(0.3, 0.4, 1.2);
  const PhasePath p = integrate_path(f, x0, k0, 0.05, 1.0, 0.002);
  REQUIRE(p.times.size() == 501);
  CHECK(p.X.front() == x0);
  CHECK(p.K.front() == k0);
  CHECK(p.Z.front() == 0.0);
  for (std::size_t i = 0; i < p.times.size(); i += 50) {
    CHECK((p.X[i] - (x0 - k0 * p.times[i])).norm() < 1e-13);
    CHECK(p.K[i] == k0);
    CHECK(p.Z[i] == 0.0);
  }
  CHECK(p.energy_drift == 0.0);
  const StoppingEvents ev = detect_stopping_times(p, StoppingConfig{});
  CHECK(!ev.violent_turn);
  CHECK(!ev.tube_return);
  CHECK(!ev.tau());
}

TEST_CASE("no mismatch means no phase") {
  CorrelationParams p;
  p.sigma_s = 0.0;
  const FieldRealization f = sample_field(CorrelationModel(p), 256, 4);
  const PhasePath path = integrate_path(f, Vec3::Zero(), Vec3(0, 0, 2), 0.05, 0.5, 0.0025);
  for (double z : path.Z) CHECK(z == 0.0);
  CHECK((path.K.back() - Vec3(0, 0, 2)).norm() > 0.0);
}

TEST_CASE("the step must resolve the fast scale") {
  const FieldRealization f = sample_field(CorrelationModel{CorrelationParams{}}, 16, 1);
  // 0.1 * 0.05 / 2 = 0.0025
  CHECK_NOTHROW(integrate_path(f, Vec3::Zero(), Vec3(0, 0, 2), 0.05, 0.1, 0.0025));
  CHECK_THROWS_AS(integrate_path(f, Vec3::Zero(), Vec3(0, 0, 2), 0.05, 0.1, 0.003), ConfigError);
  CHECK_THROWS_AS(integrate_path(f, Vec3::Zero(), Vec3(0, 0, 2), 0.0, 0.1, 1e-4), ConfigError);
  CHECK_THROWS_AS(integrate_path(f, Vec3::Zero(), Vec3(0, 0, 2), 1.5, 0.1, 1e-4), ConfigError);
}

TEST_CASE("energy drift shrinks at fourth order") {
  const FieldRealization f = sample_field(CorrelationModel{CorrelationParams{}}, 1024, 12);
  const double delta = 0.05;
  const Vec3 k0(0, 0, 2);
  // slope of log drift against log dt over five halvings from the default step
  double dt = kDefaultDtFactor * delta / k0.norm();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = 5;
  for (int i = 0; i < n; ++i, dt /= 2) {
    const double x = std::log2(dt);
    const double y = std::log2(integrate_path(f, Vec3::Zero(), k0, delta, 1.0, dt).energy_drift);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CAPTURE(order);
  CHECK(order >= 3.7);
  CHECK(order <= 4.3);
}

TEST_CASE("energy ties the momentum shell to the potential") {
  const FieldRealization f = sample_field(CorrelationModel{CorrelationParams{}}, 512, 6);
  const double delta = 0.05;
  const Vec3 k0(0.2, 0.0, 1.5);
  const PhasePath p = integrate_path(f, Vec3::Zero(), k0, delta, 0.5, 0.001);
  const double v0 = f.eval_V(Vec3::Zero());
  for (std::size_t i = 0; i < p.times.size(); i += 25) {
    const double lhs = 0.5 * (p.K[i].squaredNorm() - k0.squaredNorm());
    const double rhs = std::sqrt(delta) * (v0 - f.eval_V(p.X[i] / delta));
    CHECK(std::abs(lhs - rhs) <= p.energy_drift + 1e-14);
  }
}

TEST_CASE("stopping mesh and exponents") {
  const StoppingConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  const auto m = cfg.mesh(1e-4);
  CHECK(m.N == 2);
  CHECK(m.p == 6);
  CHECK(m.q == 18);
  CHECK(m.N1 == 3012);

  StoppingConfig bad;
  bad.eps2 = 0.05;  // eps1 < eps2 broken
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.eps3 = 0.31;  // needs eps3 < 1/2 - eps2
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.eps4 = 0.75;  // needs eps4 < 1 - eps1 - eps2
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.eps4 = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("scripted right-angle turn fires in its cell") {
  // delta = 1e-4: N = 2 (threshold 0.5), p = 6
  const PhasePath p = scripted(
      1e-4, 1.0, 1e-4, [](double t) { return Vec3(0, 0, -t); },
      [](double t) { return t < 0.55 ? Vec3(0, 0, 1) : Vec3(1, 0, 0); });
  const StoppingEvents ev = detect_stopping_times(p, StoppingConfig{});
  REQUIRE(ev.violent_turn);
  CHECK(*ev.violent_turn == doctest::Approx(0.55).epsilon(1e-9));
  CHECK(std::floor(*ev.violent_turn * 6) == 3);
  // a gentle 30 degree turn stays below the threshold
  const PhasePath g = scripted(
      1e-4, 1.0, 1e-4, [](double t) { return Vec3(0, 0, -t); },
      [](double t) { return t < 0.55 ? Vec3(0, 0, 1) : Vec3(0.5, 0, std::sqrt(0.75)); });
  CHECK(!detect_stopping_times(g, StoppingConfig{}).violent_turn);
}

TEST_CASE("scripted return into the tube") {
  // out along z until 0.5, straight back; q = 18, so the tube radius is 1/18.
  // For t in [1/2, 2/3) the trace reaches z = 1/3 and 1 - t - 1/3 <= 1/18 at t = 11/18.
  const PhasePath p = scripted(
      1e-4, 1.0, 1e-4, [](double t) { return Vec3(0, 0, t < 0.5 ? t : 1.0 - t); },
      [](double t) { return Vec3(0, 0, t < 0.5 ? -1.0 : 1.0); });
  const StoppingEvents ev = detect_stopping_times(p, StoppingConfig{});
  REQUIRE(ev.tube_return);
  CHECK(*ev.tube_return == doctest::Approx(11.0 / 18.0).epsilon(3e-4));
  REQUIRE(ev.tau());
  CHECK(*ev.tau() == std::min(*ev.tube_return, *ev.violent_turn));
}

TEST_CASE("ensembles without mismatch keep full coherence") {
  CorrelationParams cp;
  cp.sigma_s = 0.0;
  DeltaEnsembleParams p;
  p.delta = 0.1;
  p.n_paths = 40;
  p.n_modes = 256;
  p.t_end = 0.3;
  p.checkpoints = {0.1, 0.3};
  const EnsembleStats st = run_ensemble(CorrelationModel(cp), p);
  REQUIRE(st.checkpoints.size() == 2);
  for (const auto& c : st.checkpoints) {
    CHECK(c.deco_abs.value == 1.0);
    CHECK(c.var_Z.value == 0.0);
    CHECK(c.K_cov.norm() > 0.0);
  }
  CHECK(st.n_effective == 40);
  CHECK(st.failed_paths.empty());
}

TEST_CASE("ensemble statistics do not depend on the worker count") {
  CorrelationParams cp;
  cp.rho_cross = 0.3;
  const CorrelationModel m(cp);
  DeltaEnsembleParams p;
  p.delta = 0.1;
  p.n_paths = 24;
  p.n_modes = 128;
  p.t_end = 0.2;
  p.checkpoints = {0.1, 0.2};
  const EnsembleStats serial = run_ensemble_serial(m, p);
  for (int threads : {1, 2, 5}) {
    p.threads = threads;
    const EnsembleStats par = run_ensemble(m, p);
    for (std::size_t c = 0; c < 2; ++c) {
      const auto &a = serial.checkpoints[c], &b = par.checkpoints[c];
      CHECK(a.mean_Z.value == b.mean_Z.value);
      CHECK(a.var_Z.value == b.var_Z.value);
      CHECK(a.var_Z.se == b.var_Z.se);
      CHECK(a.deco_abs.value == b.deco_abs.value);
      CHECK(a.K_cov == b.K_cov);
      CHECK(a.mean_shell.value == b.mean_shell.value);
    }
    CHECK(serial.tau_freq.value == par.tau_freq.value);
    CHECK(serial.energy_drift_max == par.energy_drift_max);
  }
}

TEST_CASE("each path has its own medium unless quenched") {
  const CorrelationModel m{CorrelationParams{}};
  DeltaEnsembleParams p;
  p.delta = 0.1;
  p.n_modes = 128;
  p.t_end = 0.1;
  const PhasePath a = simulate_delta_path(m, p, 0), b = simulate_delta_path(m, p, 1);
  CHECK(a.Z.back() != b.Z.back());
  CHECK(simulate_delta_path(m, p, 0).Z.back() == a.Z.back());

  // a different field seed changes the medium but not the path index
  p.field_seed = 99;
  CHECK(simulate_delta_path(m, p, 0).Z.back() != a.Z.back());

  p.field_seed.reset();
  p.quenched = true;
  const PhasePath qa = simulate_delta_path(m, p, 0), qb = simulate_delta_path(m, p, 1);
  CHECK(qa.X.front() != qb.X.front());
  CHECK(qa.Z.back() != qb.Z.back());
  p.n_paths = 8;
  const EnsembleStats q1 = run_ensemble(m, p), q2 = run_ensemble(m, p);
  CHECK(q1.checkpoints.back().var_Z.value == q2.checkpoints.back().var_Z.value);
}

TEST_CASE("momentum shell scales with sqrt(delta)") {
  const CorrelationModel m{CorrelationParams{}};
  DeltaEnsembleParams p;
  p.n_paths = 16;
  p.n_modes = 256;
  p.t_end = 0.2;
  std::vector<double> ratio;
  for (double delta : {0.2, 0.1, 0.05, 0.025}) {
    p.delta = delta;
    const EnsembleStats st = run_ensemble(m, p);
    ratio.push_back(st.shell_drift_path_max / std::sqrt(delta));
  }
  // |K|^2 - |k0|^2 = 2 sqrt(delta) (V0 - V), so the ratio is bounded by ~|V| range / |k0|
  for (double r : ratio) {
    CHECK(r > 0.0);
    CHECK(r < 8.0);
  }
}

TEST_CASE("mean phase drifts at the rate E for a correlated shifted medium") {
  CorrelationParams cp;
  cp.rho_cross = 0.8;
  cp.cross_shift = Vec3(0.3, 0.0, 0.6);
  const CorrelationModel m(cp);
  DeltaEnsembleParams p;
  // t must be short against the direction diffusion time |k0|^2 / D (E depends on
  // the direction here) and long against the correlation time delta / |k0|
  p.delta = 0.002;
  p.k0 = Vec3(0, 0, 1);
  p.t_end = 0.05;
  p.n_paths = 1000;
  p.n_modes = 512;
  const EnsembleStats st = run_ensemble(m, p);
  const double E = compute_coefficients(m, p.k0).E;
  const auto& c = st.checkpoints.back();
  const double rate = c.mean_Z.value / p.t_end, se = c.mean_Z.se / p.t_end;
  CAPTURE(E);
  CAPTURE(rate);
  CAPTURE(se);
  CHECK(std::abs(rate - E) <= 3.0 * se);
}
