#include "phasedrift/convergence.hpp"

#include "phasedrift/types.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace phasedrift {

const ObservableTrend& ConvergenceReport::trend(const std::string& name) const {
  for (const auto& t : trends) {
    if (t.name == name) return t;
  }
  throw ConfigError(fmt::format("no trend named '{}'", name));
}

PowerLawFit fit_power_law(const std::vector<double>& deltas, const std::vector<Estimate>& d) {
  PowerLawFit fit;
  std::vector<double> x, y, w;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(d[i].value > 0.0) || !(deltas[i] > 0.0)) continue;
    x.push_back(std::log(deltas[i]));
    y.push_back(std::log(d[i].value));
    // var(log d) ~ (se / d)^2
    const double rel = d[i].se > 0.0 ? d[i].se / d[i].value : 1e-12;
    w.push_back(1.0 / (rel * rel));
  }
  fit.points = static_cast<int>(x.size());
  if (fit.points < 2) return fit;

  Eigen::Matrix2d normal = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Eigen::Vector2d row(1.0, x[i]);
    normal += w[i] * row * row.transpose();
    rhs += w[i] * y[i] * row;
  }
  if (std::abs(normal.determinant()) < 1e-300) return fit;
  const Eigen::Matrix2d cov = normal.inverse();
  const Eigen::Vector2d beta = cov * rhs;
  fit.prefactor = std::exp(beta(0));
  fit.alpha = beta(1);
  // inflate by the reduced chi-square when there are spare degrees of freedom
  double scale = 1.0;
  if (fit.points > 2) {
    double chi2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - beta(0) - beta(1) * x[i];
      chi2 += w[i] * r * r;
    }
    scale = std::max(1.0, chi2 / (fit.points - 2));
  }
  fit.alpha_se = std::sqrt(cov(1, 1) * scale);
  fit.valid = std::isfinite(fit.alpha) && std::isfinite(fit.alpha_se);
  return fit;
}

namespace {

Estimate scalar_distance(const Estimate& a, const Estimate& b) {
  return {std::abs(a.value - b.value), std::hypot(a.se, b.se)};
}

Estimate matrix_distance(const CheckpointStats& a, const CheckpointStats& b) {
  const Mat3 diff = a.K_cov - b.K_cov;
  const double norm = diff.norm();
  double var = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double s2 = a.K_cov_se(i, j) * a.K_cov_se(i, j) + b.K_cov_se(i, j) * b.K_cov_se(i, j);
      const double g = norm > 0.0 ? diff(i, j) / norm : 1.0;
      var += g * g * s2;
    }
  }
  return {norm, std::sqrt(var)};
}

}  // namespace

ConvergenceReport summarize_convergence(std::vector<DeltaRun> runs,
                                        const EnsembleStats& limit_stats) {
  if (runs.size() < 3) throw ConfigError("convergence summary needs at least 3 delta values");
  std::stable_sort(runs.begin(), runs.end(),
                   [](const DeltaRun& a, const DeltaRun& b) { return a.delta > b.delta; });
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (!(runs[i].delta < runs[i - 1].delta)) throw ConfigError("delta values must be distinct");
  }
  if (limit_stats.checkpoints.empty()) throw ConfigError("limit ensemble has no checkpoints");
  const CheckpointStats& lim = limit_stats.checkpoints.back();

  ConvergenceReport rep;
  rep.t = lim.t;
  const auto add = [&](const std::string& name, auto&& distance) {
    ObservableTrend tr;
    tr.name = name;
    for (const DeltaRun& r : runs) {
      if (r.stats.checkpoints.empty()) throw ConfigError("delta ensemble has no checkpoints");
      tr.deltas.push_back(r.delta);
      tr.distance.push_back(distance(r.stats));
    }
    for (std::size_t i = 1; i < tr.distance.size(); ++i) {
      const Estimate &prev = tr.distance[i - 1], &cur = tr.distance[i];
      if (cur.value > prev.value + 3.0 * std::hypot(prev.se, cur.se)) tr.non_increasing = false;
    }
    tr.fit = fit_power_law(tr.deltas, tr.distance);
    rep.trends.push_back(std::move(tr));
  };

  add("var_Z", [&](const EnsembleStats& s) {
    return scalar_distance(s.checkpoints.back().var_Z, lim.var_Z);
  });
  add("deco_abs", [&](const EnsembleStats& s) {
    return scalar_distance(s.checkpoints.back().deco_abs, lim.deco_abs);
  });
  add("K_cov", [&](const EnsembleStats& s) { return matrix_distance(s.checkpoints.back(), lim); });
  add("tau_freq", [](const EnsembleStats& s) { return s.tau_freq; });
  add("skew_Z", [](const EnsembleStats& s) {
    const Estimate& e = s.checkpoints.back().skew_Z;
    return Estimate{std::abs(e.value), e.se};
  });
  add("excess_kurtosis_Z", [](const EnsembleStats& s) {
    const Estimate& e = s.checkpoints.back().excess_kurtosis_Z;
    return Estimate{std::abs(e.value), e.se};
  });
  return rep;
}

}  // namespace phasedrift
