#pragma once

// Scalar reference arithmetic for the Monte Carlo kernels. Every vector variant
// performs exactly these IEEE operations in this order, so outputs agree bit for bit.
// Builtins only: this header is also compiled freestanding. Internal linkage keeps
// the copies inside ISA-specific translation units from being merged.

#include <stdint.h>

#include "mfk/kernels.hpp"

namespace mfk::kernels::math {

inline constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr uint32_t kWeyl1 = 0xBB67AE85u;

struct Block {
  uint32_t v[4];
};

static inline Block philox4x32(Block c, uint32_t k0, uint32_t k1) {
  for (int r = 0; r < 10; ++r) {
    const uint64_t p0 = static_cast<uint64_t>(kPhiloxM0) * c.v[0];
    const uint64_t p1 = static_cast<uint64_t>(kPhiloxM1) * c.v[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
    c = Block{{hi1 ^ c.v[1] ^ k0, lo1, hi0 ^ c.v[3] ^ k1, lo0}};
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return c;
}

static inline double bits_to_double(uint64_t b) {
  double d;
  __builtin_memcpy(&d, &b, sizeof d);
  return d;
}

static inline uint64_t double_to_bits(double d) {
  uint64_t b;
  __builtin_memcpy(&b, &d, sizeof b);
  return b;
}

inline constexpr uint64_t kOneBits = 0x3FF0000000000000ull;
inline constexpr double kHalfUlp = 1.1102230246251565404e-16;  // 2^-53

// Uniform on (0, 1) from 52 random bits: never 0, never 1.
static inline double uniform52(uint32_t hi, uint32_t lo) {
  const uint64_t k = (static_cast<uint64_t>(hi & 0xFFFFFu) << 32) | lo;
  return (bits_to_double(kOneBits | k) - 1.0) + kHalfUlp;
}

inline constexpr double kLg1 = 6.666666666666735130e-01;
inline constexpr double kLg2 = 3.999999999940941908e-01;
inline constexpr double kLg3 = 2.857142874366239149e-01;
inline constexpr double kLg4 = 2.222219843214978396e-01;
inline constexpr double kLg5 = 1.818357216161805012e-01;
inline constexpr double kLg6 = 1.531383769920937332e-01;
inline constexpr double kLg7 = 1.479819860511658591e-01;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kSqrt2 = 1.41421356237309514547;
inline constexpr double kTwo52 = 4503599627370496.0;
inline constexpr uint64_t kTwo52Bits = 0x4330000000000000ull;
inline constexpr uint64_t kMantMask = 0x000FFFFFFFFFFFFFull;

// Natural log of a positive normal double.
static inline double log_pos(double x) {
  const uint64_t b = double_to_bits(x);
  // Exponent as a double through the 2^52 trick, same as the vector paths.
  double k = bits_to_double(kTwo52Bits | (b >> 52)) - (kTwo52 + 1023.0);
  double m = bits_to_double((b & kMantMask) | kOneBits);
  if (m > kSqrt2) {
    m = m * 0.5;
    k = k + 1.0;
  }
  const double f = m - 1.0;
  const double s = f / (2.0 + f);
  const double hfsq = 0.5 * f * f;
  const double z = s * s;
  const double w = z * z;
  const double t1 = w * (kLg2 + w * (kLg4 + w * kLg6));
  const double t2 = z * (kLg1 + w * (kLg3 + w * (kLg5 + w * kLg7)));
  const double R = t2 + t1;
  return k * kLn2Hi - ((hfsq - (s * (hfsq + R) + k * kLn2Lo)) - f);
}

inline constexpr double kHalfPi = 1.57079632679489661923;
// Taylor coefficients (-1)^j / (2j+1)! and (-1)^j / (2j)!.
inline constexpr double kS3 = -1.66666666666666666667e-01, kS5 = 8.33333333333333333333e-03,
                        kS7 = -1.98412698412698412698e-04, kS9 = 2.75573192239858906526e-06,
                        kS11 = -2.50521083854417187751e-08, kS13 = 1.60590438368216145994e-10,
                        kS15 = -7.64716373181981647590e-13, kS17 = 2.81145725434552076320e-15;
inline constexpr double kC2 = -0.5, kC4 = 4.16666666666666666667e-02, kC6 = -1.38888888888888888889e-03,
                        kC8 = 2.48015873015873015873e-05, kC10 = -2.75573192239858906526e-07,
                        kC12 = 2.08767569878680989792e-09, kC14 = -1.14707455977297247139e-11,
                        kC16 = 4.77947733238738529744e-14, kC18 = -1.56192069685862264622e-16;
// Horner order after the leading coefficient, for the vector paths.
inline constexpr double kSinTail[] = {kS15, kS13, kS11, kS9, kS7, kS5, kS3};
inline constexpr double kCosTail[] = {kC16, kC14, kC12, kC10, kC8, kC6, kC4, kC2};

static inline double poly_sin(double y, double y2) {
  double p = kS17;
  p = p * y2 + kS15;
  p = p * y2 + kS13;
  p = p * y2 + kS11;
  p = p * y2 + kS9;
  p = p * y2 + kS7;
  p = p * y2 + kS5;
  p = p * y2 + kS3;
  return y + (y * y2) * p;
}

static inline double poly_cos(double y2) {
  double p = kC18;
  p = p * y2 + kC16;
  p = p * y2 + kC14;
  p = p * y2 + kC12;
  p = p * y2 + kC10;
  p = p * y2 + kC8;
  p = p * y2 + kC6;
  p = p * y2 + kC4;
  p = p * y2 + kC2;
  return 1.0 + y2 * p;
}

// cos and sin of 2 pi u for u in (0, 1).
static inline void cos_sin_2pi(double u, double& c, double& s) {
  const double t = 4.0 * u;
  const double k = __builtin_nearbyint(t);
  const double y = (t - k) * kHalfPi;
  const double y2 = y * y;
  const double sy = poly_sin(y, y2), cy = poly_cos(y2);
  const uint64_t q = double_to_bits(k + kTwo52) & 3u;
  const double a = (q & 1u) ? sy : cy;
  const double b = (q & 1u) ? cy : sy;
  c = (q == 1u || q == 2u) ? -a : a;
  s = (q >= 2u) ? -b : b;
}

static inline void box_muller(Block w, double& z0, double& z1) {
  const double u1 = uniform52(w.v[0], w.v[1]);
  const double u2 = uniform52(w.v[2], w.v[3]);
  const double r = __builtin_sqrt(-2.0 * log_pos(u1));
  double c, s;
  cos_sin_2pi(u2, c, s);
  z0 = r * c;
  z1 = r * s;
}

static inline Block counter(uint32_t step, uint32_t pair, uint32_t phase, uint64_t traj) {
  return Block{{step, pair | (phase << 16), static_cast<uint32_t>(traj), static_cast<uint32_t>(traj >> 32)}};
}

// Reference kernels on the lane range [l0, l1).
static inline void fill_normals_range(const NormalBatch& b, double* out, int l0, int l1) {
  const uint32_t k0 = static_cast<uint32_t>(b.seed), k1 = static_cast<uint32_t>(b.seed >> 32);
  for (int l = l0; l < l1; ++l) {
    for (int i = 0; i < b.n; i += 2) {
      const Block w = philox4x32(counter(b.step[l], static_cast<uint32_t>(i / 2), b.phase, b.traj[l]), k0, k1);
      double z0, z1;
      box_muller(w, z0, z1);
      out[i * b.lanes + l] = z0;
      if (i + 1 < b.n) out[(i + 1) * b.lanes + l] = z1;
    }
  }
}

static inline void em_step_range(const EmBatch& p, double* x, const double* xi, double* mean_out, int l0, int l1) {
  const double inv_n = 1.0 / p.n;
  const int L = p.lanes;
  for (int l = l0; l < l1; ++l) {
    double sum = 0.0;
    for (int i = 0; i < p.n; ++i) sum = sum + x[i * L + l];
    const double m = sum * inv_n;
    double inc_sum = 0.0;
    for (int i = 0; i < p.n; ++i) {
      const double z = x[i * L + l];
      const double force = ((p.a3 * z) * z) * z + p.a1 * z;
      const double drift = -force - p.J * (z - m);
      const double inc = drift * p.dt + p.noise * xi[i * L + l];
      inc_sum = inc_sum + inc;
      x[i * L + l] = z + inc;
    }
    if (p.project) {
      const double shift = inc_sum * inv_n;
      for (int i = 0; i < p.n; ++i) x[i * L + l] = x[i * L + l] - shift;
    }
    double after = 0.0;
    for (int i = 0; i < p.n; ++i) after = after + x[i * L + l];
    mean_out[l] = after * inv_n;
  }
}

}  // namespace mfk::kernels::math
