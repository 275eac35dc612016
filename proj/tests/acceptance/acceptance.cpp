// Acceptance suite. One PASS/FAIL line per criterion; pass criterion numbers
// as arguments to run a subset. Exit status 1 if anything failed.

#include "phasedrift/coefficients.hpp"
#include "phasedrift/convergence.hpp"
#include "phasedrift/delta_dynamics.hpp"
#include "phasedrift/field.hpp"
#include "phasedrift/limit_dynamics.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace phasedrift;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

const double kRootHalfPi = std::sqrt(std::numbers::pi / 2.0);

// The 100 random models shared by criteria 2 and 3: both kernel families,
// every fourth one with a cross shift, |k| log-uniform in [0.1, 10].
struct RandomCase {
  CorrelationParams params;
  Vec3 k;
};

std::vector<RandomCase> random_cases() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> sigma(0.1, 3.0), ell(0.3, 3.0), rho(-1.0, 1.0),
      log_k(std::log(0.1), std::log(10.0)), shift(-0.5, 0.5);
  std::normal_distribution<double> normal;
  std::vector<RandomCase> out;
  for (int i = 0; i < 100; ++i) {
    RandomCase c;
    CorrelationParams& p = c.params;
    p.family = i % 3 == 2 ? KernelFamily::BumpSpectrum : KernelFamily::GaussianIsotropic;
    p.sigma_v = sigma(rng);
    p.sigma_s = sigma(rng);
    p.ell = ell(rng);
    p.rho_cross = rho(rng);
    if (i % 4 == 1) p.cross_shift = p.ell * Vec3(shift(rng), shift(rng), shift(rng));
    c.k = Vec3(normal(rng), normal(rng), normal(rng)).normalized() * std::exp(log_k(rng));
    out.push_back(c);
  }
  return out;
}

Outcome coefficient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const Vec3 k(0, 0, 2);
  const TransportCoefficients c = compute_coefficients(CorrelationModel{CorrelationParams{}}, k);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Vec3 u = k.normalized();
  const Mat3 d_want = kRootHalfPi / k.norm() * (Mat3::Identity() - u * u.transpose());
  const double kappa_want = kRootHalfPi / k.norm();
  const double err_d = (c.D_mn - d_want).cwiseAbs().maxCoeff();
  const double err_k = std::abs(c.kappa - kappa_want);
  return {err_d <= 1e-8 && err_k <= 1e-8 && secs < 1.0,
          fmt::format("|D_mn - closed form| = {:.2e}, |kappa - closed form| = {:.2e}, "
                      "quadrature {:.3f} s",
                      err_d, err_k, secs)};
}

Outcome sphere_identities() {
  const auto t0 = std::chrono::steady_clock::now();
  double null = 0, trace = 0, div_m = 0, div_z = 0;
  for (const RandomCase& c : random_cases()) {
    // the stencil step follows |k| so that small momenta are resolved
    const IdentityReport r =
        check_divergence_identities(CorrelationModel(c.params), c.k, 5e-4 * c.k.norm());
    null = std::max(null, r.null_direction_residual);
    trace = std::max(trace, r.sphere_trace_residual);
    div_m = std::max(div_m, r.momentum_drift_residual);
    div_z = std::max(div_z, r.phase_drift_residual);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {null <= 1e-10 && trace <= 1e-6 && div_m <= 1e-5 && div_z <= 1e-5 && secs < 30.0,
          fmt::format("100 models, worst |D k^| = {:.2e}, |tr D + E.k| = {:.2e}, "
                      "|div D_mn - E_n| = {:.2e}, |div D_m - E| = {:.2e}",
                      null, trace, div_m, div_z)};
}

Outcome formal_consistency() {
  double e = 0, f = 0, kap = 0;
  for (const RandomCase& c : random_cases()) {
    const TransportCoefficients t = compute_coefficients(CorrelationModel(c.params), c.k);
    e = std::max(e, (t.E_formal - (t.D_m_plus + t.D_m_minus)).cwiseAbs().maxCoeff());
    f = std::max(f, std::abs(t.F_formal - t.E));
    kap = std::max(kap, std::abs(t.kappa - t.D));
  }
  return {e <= 1e-10 && f <= 1e-10 && kap <= 1e-10,
          fmt::format("100 models, worst |E_formal - D_m(k) - D_m(-k)| = {:.2e}, "
                      "|F_formal - E| = {:.2e}, |kappa - D| = {:.2e}",
                      e, f, kap)};
}

Outcome integrator() {
  const auto t0 = std::chrono::steady_clock::now();
  const FieldRealization f = sample_field(CorrelationModel{CorrelationParams{}}, 1024, 12);
  const double delta = 0.05;
  const Vec3 k0(0, 0, 2);
  // least-squares slope of log drift against log dt over five halvings
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

  CorrelationParams quiet;
  quiet.sigma_v = quiet.sigma_s = 0.0;
  const FieldRealization none = sample_field(CorrelationModel(quiet), 32, 1);
  const Vec3 x0(0.5, -1.0, 0.2), k1(0.3, 0.4, 1.2);
  const PhasePath p = integrate_path(none, x0, k1, 0.05, 1.0, 0.002);
  double x_err = 0, k_err = 0, z_err = 0;
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    x_err = std::max(x_err, (p.X[i] - (x0 - k1 * p.times[i])).norm());
    k_err = std::max(k_err, (p.K[i] - k1).norm());
    z_err = std::max(z_err, std::abs(p.Z[i]));
  }
  const bool free_ok = x_err <= 1e-13 && k_err == 0.0 && z_err == 0.0 && p.energy_drift == 0.0;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {order >= 3.7 && order <= 4.3 && free_ok && secs < 10.0,
          fmt::format("energy drift order {:.3f}; free motion |dX| = {:.1e}, |dK| = {:.1e}, "
                      "|Z| = {:.1e}",
                      order, x_err, k_err, z_err)};
}

// The decorrelated ensemble behind criteria 5 and 6.
const EnsembleStats& brownian_ensemble() {
  static std::optional<EnsembleStats> cached;
  if (!cached) {
    DeltaEnsembleParams p;
    p.delta = 0.02;
    p.n_paths = 5000;
    p.t_end = 0.5;
    p.checkpoints = {0.1, 0.5};
    p.base_seed = 20;
    cached = run_ensemble(CorrelationModel{CorrelationParams{}}, p);
  }
  return *cached;
}

Outcome phase_brownian_limit() {
  const auto t0 = std::chrono::steady_clock::now();
  const EnsembleStats& st = brownian_ensemble();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const CheckpointStats& c = st.checkpoints.back();
  const double kappa =
      compute_coefficients(CorrelationModel{CorrelationParams{}}, Vec3(0, 0, 2)).kappa;
  const double t = c.t;
  const double z_var = (c.var_Z.value - 2.0 * kappa * t) / c.var_Z.se;
  const double z_deco = (c.deco_abs.value - std::exp(-kappa * t)) / c.deco_abs.se;
  const double z_skew = c.skew_Z.value / c.skew_Z.se;
  const bool ok = st.n_effective >= 5000 && std::abs(z_var) <= 3 && std::abs(z_deco) <= 3 &&
                  std::abs(z_skew) <= 3 && secs < 600.0;
  return {ok, fmt::format("{} paths, Var Z = {:.4f} vs 2 kappa t = {:.4f} ({:+.2f} se), "
                          "|E e^iZ| = {:.4f} vs {:.4f} ({:+.2f} se), skew {:+.3f} ({:+.2f} se), "
                          "ensemble {:.0f} s",
                          st.n_effective, c.var_Z.value, 2.0 * kappa * t, z_var, c.deco_abs.value,
                          std::exp(-kappa * t), z_deco, c.skew_Z.value, z_skew, secs)};
}

Outcome momentum_diffusion() {
  const EnsembleStats& st = brownian_ensemble();
  const CheckpointStats& c = st.checkpoints.front();
  const Mat3 d = compute_coefficients(CorrelationModel{CorrelationParams{}}, Vec3(0, 0, 2)).D_mn;
  const Mat3 want = 2.0 * d * c.t;
  double worst = 0;
  std::string parts;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      const double z = (c.K_cov(i, j) - want(i, j)) / c.K_cov_se(i, j);
      worst = std::max(worst, std::abs(z));
      parts += fmt::format("{}{}{}: {:.5f} vs {:.5f} ({:+.1f} se)", parts.empty() ? "" : ", ",
                           "xyz"[i], "xyz"[j], c.K_cov(i, j), want(i, j), z);
    }
  }
  return {worst <= 4.0, fmt::format("t = {}, {}", c.t, parts)};
}

Outcome delta_convergence() {
  const CorrelationModel m{CorrelationParams{}};
  std::vector<DeltaRun> runs;
  for (double delta : {0.2, 0.1, 0.05, 0.025}) {
    DeltaEnsembleParams p;
    p.delta = delta;
    p.n_paths = 2000;
    p.t_end = 0.5;
    p.base_seed = 70;
    runs.push_back({delta, run_ensemble(m, p)});
  }
  LimitEnsembleParams lp;
  lp.n_paths = 20000;
  lp.t_end = 0.5;
  lp.base_seed = 71;
  const ConvergenceReport r = summarize_convergence(runs, simulate_limit_ensemble(m, lp));
  bool ok = true;
  std::string parts;
  for (const char* name : {"var_Z", "deco_abs", "K_cov", "tau_freq"}) {
    const ObservableTrend& tr = r.trend(name);
    ok = ok && tr.non_increasing;
    std::string ds;
    for (const Estimate& e : tr.distance) ds += fmt::format("{}{:.4f}", ds.empty() ? "" : " ", e.value);
    parts += fmt::format("{}{} [{}]{}", parts.empty() ? "" : "; ", name, ds,
                         tr.non_increasing ? "" : " increasing");
  }
  return {ok, parts};
}

Outcome limit_vs_pde() {
  CorrelationParams cp;
  cp.rho_cross = 0.5;
  const CorrelationModel m(cp);
  const double kn = 2.0, t = 0.5;
  const int grid = 180;
  bool ok = true;
  double worst = 0;
  for (bool cosine : {false, true}) {
    const auto q0 = [cosine](double th) { return cosine ? std::cos(th) : 1.0; };
    const SphereSolution fine = solve_sphere_kolmogorov(m, kn, grid, t, std::nullopt, q0);
    const SphereSolution coarse = solve_sphere_kolmogorov(m, kn, grid / 2, t, std::nullopt, q0);
    const Observable w = [cosine](const Vec3&, const Vec3& k) {
      return std::complex<double>(cosine ? k.z() / k.norm() : 1.0);
    };
    for (double th0 : {0.3, 1.2, 2.5}) {
      const Vec3 k0 = kn * Vec3(std::sin(th0), 0.0, std::cos(th0));
      const ObservableEstimate e = estimate_limit_observable(m, Vec3::Zero(), k0, t, 4000, 80, w);
      const std::complex<double> pde = fine.at(th0);
      // second order in the angle: the fine grid is off by about a third of the gap
      const std::complex<double> pde_err = (fine.at(th0) - coarse.at(th0)) / 3.0;
      const double s_re = std::hypot(e.se_re, pde_err.real());
      const double s_im = std::hypot(e.se_im, pde_err.imag());
      const double z = std::max(std::abs(e.value.real() - pde.real()) / s_re,
                                std::abs(e.value.imag() - pde.imag()) / s_im);
      worst = std::max(worst, z);
      ok = ok && z <= 3.0;
    }
  }
  const auto cosine = [](double th) { return std::cos(th); };
  const SphereSolution s = solve_sphere_kolmogorov(m, kn, grid, t, std::nullopt, cosine);
  const double want = 2.0 * s.c + s.kappa;
  const double rel = std::abs(projected_decay_rate(s, cosine, cosine) - want) / want;
  ok = ok && rel <= 1e-2;
  return {ok, fmt::format("q0 in {{1, cos}}, theta0 in {{0.3, 1.2, 2.5}}: worst deviation "
                          "{:.2f} sigma; cos decay rate relative error {:.2e} at grid {}",
                          worst, rel, grid)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every data file under dir with its bytes. The manifest records the output
// directory and a timestamp, so only its config hash is kept.
std::map<std::string, std::string> artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = fs::relative(e.path(), dir).string();
    if (name == "stdout" || name == "stderr") continue;
    std::string bytes = slurp(e.path());
    if (name == "manifest.json") {
      bytes = nlohmann::json::parse(bytes)["config_hash"].get<std::string>();
    }
    out[name] = std::move(bytes);
  }
  return out;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "phasedrift_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "run.ini") << R"([field]
n_modes = 128
[sim]
delta = 0.05
delta_sweep = 0.2, 0.1, 0.05
t_end = 0.2
n_paths = 40
checkpoints = 0.1, 0.2
base_seed = 11
[sphere]
theta_grid = 60
q0 = cos
)";
  const std::vector<std::string> commands = {
      "coeffs --k 0,0,2 --k 0.3,-1,0.5",
      "coeffs --format json",
      "simulate-delta --dump-paths",
      "simulate-delta --format json --quenched",
      "simulate-limit",
      "simulate-limit --format json",
      "solve-fp",
      "converge",
      "validate",
  };
  const std::vector<std::string> envs = {"PHASEDRIFT_THREADS=1", "PHASEDRIFT_THREADS=1",
                                         "OMP_NUM_THREADS=4 PHASEDRIFT_THREADS=4"};
  int compared = 0;
  std::vector<std::string> bad;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::vector<std::map<std::string, std::string>> got;
    for (std::size_t r = 0; r < envs.size(); ++r) {
      const fs::path dir = root / fmt::format("c{}_r{}", c, r);
      fs::create_directories(dir);
      const std::string cmd = fmt::format(
          "{} '{}' {} --config '{}' --out '{}' >'{}' 2>'{}'", envs[r], PHASEDRIFT_CLI, commands[c],
          (root / "run.ini").string(), dir.string(), (dir / "stdout").string(),
          (dir / "stderr").string());
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        bad.push_back(fmt::format("'{}' exited abnormally", commands[c]));
        continue;
      }
      got.push_back(artifacts(dir));
    }
    for (std::size_t r = 1; r < got.size(); ++r) {
      if (got[r] != got[0]) bad.push_back(fmt::format("'{}' differs in run {}", commands[c], r));
    }
    if (!got.empty()) compared += static_cast<int>(got[0].size());
  }
  fs::remove_all(root);
  if (!bad.empty()) return {false, bad.front()};
  return {compared > 0, fmt::format("{} commands x 3 runs (1, 1, 4 threads), {} artifacts "
                                    "byte-identical",
                                    commands.size(), compared)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {
      coefficient_oracle, sphere_identities,    formal_consistency,
      integrator,         phase_brownian_limit, momentum_diffusion,
      delta_convergence,  limit_vs_pde,         determinism,
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) selected.push_back(i);
  }
  int failed = 0;
  for (int n : selected) {
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      fmt::print(stderr, "no criterion {}\n", n);
      return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[n - 1]();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fmt::print("{} criterion {}: {} [{:.1f} s]\n", o.passed ? "PASS" : "FAIL", n, o.detail, secs);
    std::fflush(stdout);
    failed += !o.passed;
  }
  return failed == 0 ? 0 : 1;
}
