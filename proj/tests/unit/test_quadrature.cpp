#include "phasedrift/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace phasedrift;

TEST_CASE("polynomials of low degree are exact on one panel") {
  auto f = [](double x) {
    Eigen::Matrix<double, 1, 1> v;
    v(0) = std::pow(x, 12) + 3.0 * x;
    return v;
  };
  const auto r = quad::integrate<1>(f, 0.0, 1.0);
  CHECK(r.value(0) == doctest::Approx(1.0 / 13.0 + 1.5).epsilon(1e-14));
  CHECK(r.evaluations == 15);
}

TEST_CASE("known integrals") {
  auto gauss = [](double s) {
    Eigen::Matrix<double, 1, 1> v;
    v(0) = std::exp(-0.5 * s * s);
    return v;
  };
  const auto g = quad::integrate<1>(gauss, 0.0, 40.0);
  CHECK(g.value(0) == doctest::Approx(std::sqrt(std::numbers::pi / 2.0)).epsilon(1e-13));
  CHECK(g.error <= 1e-10);

  auto osc = [](double s) {
    Eigen::Matrix<double, 1, 1> v;
    v(0) = std::sin(s) * s;
    return v;
  };
  // int_0^{2pi} s sin s ds = -2 pi
  const auto o = quad::integrate<1>(osc, 0.0, 2.0 * std::numbers::pi, {1e-12, 100'000});
  CHECK(o.value(0) == doctest::Approx(-2.0 * std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("vector integrands share one adaptive mesh") {
  auto f = [](double s) {
    Eigen::Vector3d v(std::exp(-s), s * std::exp(-s), std::cos(s));
    return v;
  };
  const auto r = quad::integrate<3>(f, 0.0, 50.0, {}, 4);
  CHECK(r.value(0) == doctest::Approx(1.0 - std::exp(-50.0)).epsilon(1e-12));
  CHECK(r.value(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.value(2) == doctest::Approx(std::sin(50.0)).epsilon(1e-10).scale(1.0));
}

TEST_CASE("exhausting the budget throws") {
  auto kink = [](double s) {
    Eigen::Matrix<double, 1, 1> v;
    v(0) = 1.0 / std::sqrt(std::abs(s - 0.3) + 1e-300);
    return v;
  };
  CHECK_THROWS_AS(quad::integrate<1>(kink, 0.0, 1.0, {1e-14, 600}), NumericalError);
}

TEST_CASE("cutoff follows the envelope") {
  const double cut = quad::find_cutoff([](double s) { return std::exp(-s); }, 0.0, 0.1, 1e3);
  // e^{-s} < 1e-14 beyond s = 32.24
  CHECK(cut > 32.2);
  CHECK(cut < 32.5);
  CHECK(quad::find_cutoff([](double) { return 1.0; }, 0.0, 1.0, 20.0) == 20.0);
}
