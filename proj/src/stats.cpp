#include "phasedrift/stats.hpp"

#include <algorithm>
#include <cmath>

namespace phasedrift {

double compensated_sum(std::span<const double> xs) {
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

namespace {

double mean_of(std::span<const double> xs) {
  return xs.empty() ? 0.0 : compensated_sum(xs) / static_cast<double>(xs.size());
}

// Mean and its standard error.
Estimate mean_estimate(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  const double m = mean_of(xs);
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - m) * (xs[i] - m);
  const double var = n > 1 ? compensated_sum(sq) / (n - 1.0) : 0.0;
  return {m, n > 0 ? std::sqrt(var / n) : 0.0};
}

}  // namespace

Estimate frequency(int hits, int n) {
  if (n <= 0) return {};
  const double p = static_cast<double>(hits) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

double ComplexEstimate::se() const { return std::hypot(se_re, se_im); }

ComplexEstimate mean_complex(std::span<const std::complex<double>> xs) {
  std::vector<double> re(xs.size()), im(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    re[i] = xs[i].real();
    im[i] = xs[i].imag();
  }
  const Estimate r = mean_estimate(re), i = mean_estimate(im);
  return {{r.value, i.value}, r.se, i.se};
}

CheckpointStats summarize_checkpoint(double t, std::span<const PathPoint> points) {
  CheckpointStats st;
  st.t = t;
  const std::size_t n = points.size();
  if (n == 0) return st;
  const double nd = static_cast<double>(n);

  std::vector<double> buf(n);
  const auto collect = [&](auto&& fn) -> std::span<const double> {
    for (std::size_t i = 0; i < n; ++i) buf[i] = fn(points[i]);
    return buf;
  };

  // Z moments
  st.mean_Z = mean_estimate(collect([](const PathPoint& p) { return p.z; }));
  const double mz = st.mean_Z.value;
  const double m2 = mean_of(collect([&](const PathPoint& p) { return std::pow(p.z - mz, 2); }));
  const double m3 = mean_of(collect([&](const PathPoint& p) { return std::pow(p.z - mz, 3); }));
  const double m4 = mean_of(collect([&](const PathPoint& p) { return std::pow(p.z - mz, 4); }));
  const double var = n > 1 ? m2 * nd / (nd - 1.0) : 0.0;
  st.var_Z = {var, std::sqrt(std::max(0.0, m4 - m2 * m2) / nd)};
  st.skew_Z = {m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0,
               std::sqrt(6.0 * (nd - 2.0) / ((nd + 1.0) * (nd + 3.0)))};
  st.excess_kurtosis_Z = {m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0, std::sqrt(24.0 / nd)};

  // decoherence
  st.deco_re = mean_estimate(collect([](const PathPoint& p) { return std::cos(p.z); }));
  st.deco_im = mean_estimate(collect([](const PathPoint& p) { return std::sin(p.z); }));
  const double cr = st.deco_re.value, ci = st.deco_im.value;
  const double modulus = std::hypot(cr, ci);
  if (modulus > 0.0) {
    // delta method: project each sample on the direction of the mean
    const Estimate proj = mean_estimate(collect([&](const PathPoint& p) {
      return (cr * std::cos(p.z) + ci * std::sin(p.z)) / modulus;
    }));
    st.deco_abs = {modulus, proj.se};
  } else {
    st.deco_abs = {0.0, std::hypot(st.deco_re.se, st.deco_im.se)};
  }

  // momentum increments
  for (int m = 0; m < 3; ++m) {
    const Estimate e = mean_estimate(collect([m](const PathPoint& p) { return p.dk(m); }));
    st.mean_dK(m) = e.value;
    st.mean_dK_se(m) = e.se;
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = a; b < 3; ++b) {
      const double ma = st.mean_dK(a), mb = st.mean_dK(b);
      const Estimate prod = mean_estimate(
          collect([&](const PathPoint& p) { return (p.dk(a) - ma) * (p.dk(b) - mb); }));
      const double cov = n > 1 ? prod.value * nd / (nd - 1.0) : 0.0;
      st.K_cov(a, b) = st.K_cov(b, a) = cov;
      st.K_cov_se(a, b) = st.K_cov_se(b, a) = prod.se;
    }
  }

  st.mean_shell = mean_estimate(collect([](const PathPoint& p) { return p.shell; }));
  for (const PathPoint& p : points) st.shell_drift_max = std::max(st.shell_drift_max, std::abs(p.shell));
  return st;
}

}  // namespace phasedrift
