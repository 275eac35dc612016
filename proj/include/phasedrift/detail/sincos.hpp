#pragma once

#include <bit>
#include <cstdint>

namespace phasedrift::detail {

// Branch-free sin/cos for |x| < 1e5 with error below 1 ulp-ish (max abs error
// ~2e-16 on [-400, 400]). Written so that GCC vectorises it inside
// `omp simd` loops; libm sin/cos does not vectorise without -ffast-math.
// Cody-Waite reduction by pi/2 followed by the fdlibm kernel polynomials.
inline void fast_sincos(double x, double& s, double& c) {
  constexpr double kTwoOverPi = 0.63661977236758134308;
  constexpr double kPio2_1 = 1.57079632673412561417e+00;
  constexpr double kPio2_2 = 6.07710050650619224932e-11;
  constexpr double kPio2_3 = 2.02226624879595063154e-21;
  constexpr double kRound = 0x1.8p52;

  // qr holds round(x 2/pi) in its low mantissa bits, two's complement mod 4
  const double qr = x * kTwoOverPi + kRound;
  const double q = qr - kRound;
  const std::uint64_t qi = std::bit_cast<std::uint64_t>(qr);
  const double r = ((x - q * kPio2_1) - q * kPio2_2) - q * kPio2_3;
  const double z = r * r;

  const double sp =
      r + r * z *
              (-1.66666666666666324348e-01 +
               z * (8.33333333332248946124e-03 +
                    z * (-1.98412698298579493134e-04 +
                         z * (2.75573137070700676789e-06 +
                              z * (-2.50507602534068634195e-08 + z * 1.58969099521155010221e-10)))));
  const double cp =
      1.0 - 0.5 * z +
      z * z *
          (4.16666666666666019037e-02 +
           z * (-1.38888888888741095749e-03 +
                z * (2.48015872894767294178e-05 +
                     z * (-2.75573143513906633035e-07 +
                          z * (2.08757232129817482790e-09 + z * -1.13596475577881948265e-11)))));

  // quadrant: swap on odd, sign bits from bit 1 of q and of q + 1
  const bool odd = qi & 1;
  const double ss = odd ? cp : sp;
  const double cc = odd ? sp : cp;
  s = std::bit_cast<double>(std::bit_cast<std::uint64_t>(ss) ^ ((qi & 2) << 62));
  c = std::bit_cast<double>(std::bit_cast<std::uint64_t>(cc) ^ (((qi + 1) & 2) << 62));
}

}  // namespace phasedrift::detail
