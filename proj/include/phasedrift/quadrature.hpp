#pragma once

#include "phasedrift/types.hpp"

#include <Eigen/Core>
#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

namespace phasedrift::quad {

// Gauss-Kronrod 7/15 nodes on [-1, 1] (non-negative half).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Options {
  double abs_tol = 1e-10;
  int max_evaluations = 2'000'000;
};

template <int N>
struct Result {
  Eigen::Matrix<double, N, 1> value;
  double error = 0.0;  // max-norm error estimate
  int evaluations = 0;
};

namespace detail {

template <int N>
struct Segment {
  double a, b;
  Eigen::Matrix<double, N, 1> value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <int N, class F>
Segment<N> gk15(F& f, double a, double b) {
  using V = Eigen::Matrix<double, N, 1>;
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  const V fc = f(mid);
  V kron = kKronrodWeights[7] * fc;
  V gauss = kGaussWeights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const V sum = f(mid - dx) + f(mid + dx);
    kron += kKronrodWeights[i] * sum;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
  }
  Segment<N> s{a, b, half * kron, 0.0};
  s.error = (half * (kron - gauss)).template lpNorm<Eigen::Infinity>();
  return s;
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod 7/15 for a vector-valued integrand on
// [a, b]; the error estimate is the max over components. Throws
// NumericalError if the tolerance is not met within the evaluation budget.
template <int N, class F>
Result<N> integrate(F&& f, double a, double b, const Options& opt = {},
                    int initial_segments = 1) {
  std::priority_queue<detail::Segment<N>> heap;
  Result<N> res;
  res.value.setZero();
  const int segs = std::max(1, initial_segments);
  for (int i = 0; i < segs; ++i) {
    const double lo = a + (b - a) * i / segs;
    const double hi = (i + 1 == segs) ? b : a + (b - a) * (i + 1) / segs;
    heap.push(detail::gk15<N>(f, lo, hi));
    res.evaluations += 15;
  }
  double err = 0.0;
  {
    auto copy = heap;
    while (!copy.empty()) {
      err += copy.top().error;
      copy.pop();
    }
  }
  for (;;) {
    if (err <= opt.abs_tol) {
      // Exact re-summation; the running error can drift by round-off.
      std::vector<detail::Segment<N>> items;
      items.reserve(heap.size());
      while (!heap.empty()) {
        items.push_back(heap.top());
        heap.pop();
      }
      std::sort(items.begin(), items.end(),
                [](const auto& l, const auto& r) { return l.a < r.a; });
      double exact_err = 0.0;
      for (const auto& it : items) {
        res.value += it.value;
        exact_err += it.error;
      }
      res.error = exact_err;
      if (exact_err <= opt.abs_tol) return res;
      res.value.setZero();
      for (auto& it : items) heap.push(it);
      err = exact_err;
    }
    if (res.evaluations + 30 > opt.max_evaluations) {
      throw NumericalError(fmt::format(
          "quadrature on [{:.6g}, {:.6g}] did not converge: error {:.3g} > {:.3g} after {} "
          "evaluations",
          a, b, err, opt.abs_tol, res.evaluations));
    }
    const detail::Segment<N> worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw NumericalError("quadrature interval underflow");
    }
    auto left = detail::gk15<N>(f, worst.a, mid);
    auto right = detail::gk15<N>(f, mid, worst.b);
    err += left.error + right.error - worst.error;
    heap.push(std::move(left));
    heap.push(std::move(right));
    res.evaluations += 30;
  }
}

// Scans outward from `start` in steps of `step` and returns the first
// abscissa beyond which `envelope` stays below rel * (peak envelope) for
// `quiet_blocks` consecutive steps. Bounded by `hard_limit`.
template <class F>
double find_cutoff(F&& envelope, double start, double step, double hard_limit,
                   double rel = 1e-14, int quiet_blocks = 8) {
  double peak = 0.0;
  int quiet = 0;
  double last_loud = start;
  for (double s = start; s <= hard_limit; s += step) {
    const double e = envelope(s);
    peak = std::max(peak, e);
    if (peak > 0.0 && e < rel * peak) {
      if (++quiet >= quiet_blocks) return last_loud + step;
    } else {
      quiet = 0;
      last_loud = s;
    }
  }
  return hard_limit;
}

}  // namespace phasedrift::quad
