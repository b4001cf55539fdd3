#include <arm_neon.h>

#include "kernel_math.hpp"

namespace mfk::kernels {

namespace {

inline uint64x2_t u64(uint64_t v) { return vdupq_n_u64(v); }
inline float64x2_t f64(double v) { return vdupq_n_f64(v); }

struct Words {
  uint64x2_t c0, c1, c2, c3;  // one 32-bit word per 64-bit slot
};

inline Words philox(Words w, uint32_t k0, uint32_t k1) {
  const uint32x2_t m0 = vdup_n_u32(math::kPhiloxM0), m1 = vdup_n_u32(math::kPhiloxM1);
  const uint64x2_t lo32 = u64(0xFFFFFFFFull);
  for (int r = 0; r < 10; ++r) {
    const uint64x2_t p0 = vmull_u32(vmovn_u64(w.c0), m0);
    const uint64x2_t p1 = vmull_u32(vmovn_u64(w.c2), m1);
    const uint64x2_t hi0 = vshrq_n_u64(p0, 32), lo0 = vandq_u64(p0, lo32);
    const uint64x2_t hi1 = vshrq_n_u64(p1, 32), lo1 = vandq_u64(p1, lo32);
    w = Words{veorq_u64(veorq_u64(hi1, w.c1), u64(k0)), lo1, veorq_u64(veorq_u64(hi0, w.c3), u64(k1)), lo0};
    k0 += math::kWeyl0;
    k1 += math::kWeyl1;
  }
  return w;
}

inline float64x2_t uniform52(uint64x2_t hi, uint64x2_t lo) {
  const uint64x2_t k = vorrq_u64(vshlq_n_u64(vandq_u64(hi, u64(0xFFFFFull)), 32), lo);
  const float64x2_t d = vreinterpretq_f64_u64(vorrq_u64(k, u64(math::kOneBits)));
  return vaddq_f64(vsubq_f64(d, f64(1.0)), f64(math::kHalfUlp));
}

inline float64x2_t log_pos(float64x2_t x) {
  const uint64x2_t b = vreinterpretq_u64_f64(x);
  float64x2_t k = vsubq_f64(vreinterpretq_f64_u64(vorrq_u64(u64(math::kTwo52Bits), vshrq_n_u64(b, 52))),
                            f64(math::kTwo52 + 1023.0));
  float64x2_t m = vreinterpretq_f64_u64(vorrq_u64(vandq_u64(b, u64(math::kMantMask)), u64(math::kOneBits)));
  const uint64x2_t fold = vcgtq_f64(m, f64(math::kSqrt2));
  m = vbslq_f64(fold, vmulq_f64(m, f64(0.5)), m);
  k = vbslq_f64(fold, vaddq_f64(k, f64(1.0)), k);
  const float64x2_t f = vsubq_f64(m, f64(1.0));
  const float64x2_t s = vdivq_f64(f, vaddq_f64(f64(2.0), f));
  const float64x2_t hfsq = vmulq_f64(vmulq_f64(f64(0.5), f), f);
  const float64x2_t z = vmulq_f64(s, s);
  const float64x2_t w = vmulq_f64(z, z);
  const float64x2_t t1 =
      vmulq_f64(w, vaddq_f64(f64(math::kLg2), vmulq_f64(w, vaddq_f64(f64(math::kLg4), vmulq_f64(w, f64(math::kLg6))))));
  const float64x2_t t2 = vmulq_f64(
      z, vaddq_f64(f64(math::kLg1),
                   vmulq_f64(w, vaddq_f64(f64(math::kLg3),
                                          vmulq_f64(w, vaddq_f64(f64(math::kLg5), vmulq_f64(w, f64(math::kLg7))))))));
  const float64x2_t R = vaddq_f64(t2, t1);
  const float64x2_t inner =
      vsubq_f64(hfsq, vaddq_f64(vmulq_f64(s, vaddq_f64(hfsq, R)), vmulq_f64(k, f64(math::kLn2Lo))));
  return vsubq_f64(vmulq_f64(k, f64(math::kLn2Hi)), vsubq_f64(inner, f));
}

inline float64x2_t horner(float64x2_t p, float64x2_t y2, double coeff) {
  return vaddq_f64(vmulq_f64(p, y2), f64(coeff));
}

inline void cos_sin_2pi(float64x2_t u, float64x2_t& c, float64x2_t& s) {
  const float64x2_t t = vmulq_f64(f64(4.0), u);
  const float64x2_t k = vrndnq_f64(t);
  const float64x2_t y = vmulq_f64(vsubq_f64(t, k), f64(math::kHalfPi));
  const float64x2_t y2 = vmulq_f64(y, y);

  float64x2_t ps = f64(math::kS17);
  for (double coeff : math::kSinTail)
    ps = horner(ps, y2, coeff);
  const float64x2_t sy = vaddq_f64(y, vmulq_f64(vmulq_f64(y, y2), ps));
  float64x2_t pc = f64(math::kC18);
  for (double coeff : math::kCosTail)
    pc = horner(pc, y2, coeff);
  const float64x2_t cy = vaddq_f64(f64(1.0), vmulq_f64(y2, pc));

  const uint64x2_t q = vandq_u64(vreinterpretq_u64_f64(vaddq_f64(k, f64(math::kTwo52))), u64(3));
  const uint64x2_t odd = vceqq_u64(vandq_u64(q, u64(1)), u64(1));
  const float64x2_t a = vbslq_f64(odd, sy, cy);
  const float64x2_t b = vbslq_f64(odd, cy, sy);
  const uint64x2_t neg_c = vorrq_u64(vceqq_u64(q, u64(1)), vceqq_u64(q, u64(2)));
  const uint64x2_t neg_s = vceqq_u64(vandq_u64(q, u64(2)), u64(2));
  c = vbslq_f64(neg_c, vnegq_f64(a), a);
  s = vbslq_f64(neg_s, vnegq_f64(b), b);
}

void fill_normals(const NormalBatch& b, double* out) {
  const uint32_t k0 = static_cast<uint32_t>(b.seed), k1 = static_cast<uint32_t>(b.seed >> 32);
  const int full = b.lanes - b.lanes % 2;
  for (int l = 0; l < full; l += 2) {
    const uint64x2_t step = vmovl_u32(vld1_u32(b.step + l));
    const uint64x2_t traj = vld1q_u64(b.traj + l);
    const uint64x2_t traj_lo = vandq_u64(traj, u64(0xFFFFFFFFull));
    const uint64x2_t traj_hi = vshrq_n_u64(traj, 32);
    for (int i = 0; i < b.n; i += 2) {
      const uint32_t word1 = static_cast<uint32_t>(i / 2) | (b.phase << 16);
      const Words w = philox(Words{step, u64(word1), traj_lo, traj_hi}, k0, k1);
      const float64x2_t u1 = uniform52(w.c0, w.c1);
      const float64x2_t u2 = uniform52(w.c2, w.c3);
      const float64x2_t r = vsqrtq_f64(vmulq_f64(f64(-2.0), log_pos(u1)));
      float64x2_t c, s;
      cos_sin_2pi(u2, c, s);
      vst1q_f64(out + i * b.lanes + l, vmulq_f64(r, c));
      if (i + 1 < b.n) vst1q_f64(out + (i + 1) * b.lanes + l, vmulq_f64(r, s));
    }
  }
  math::fill_normals_range(b, out, full, b.lanes);
}

void em_step(const EmBatch& p, double* x, const double* xi, double* mean_out) {
  const int L = p.lanes;
  const int full = L - L % 2;
  const float64x2_t inv_n = f64(1.0 / p.n);
  const float64x2_t a3 = f64(p.a3), a1 = f64(p.a1), J = f64(p.J), dt = f64(p.dt), noise = f64(p.noise);
  for (int l = 0; l < full; l += 2) {
    float64x2_t sum = f64(0.0);
    for (int i = 0; i < p.n; ++i) sum = vaddq_f64(sum, vld1q_f64(x + i * L + l));
    const float64x2_t m = vmulq_f64(sum, inv_n);
    float64x2_t inc_sum = f64(0.0);
    for (int i = 0; i < p.n; ++i) {
      const float64x2_t z = vld1q_f64(x + i * L + l);
      const float64x2_t force = vaddq_f64(vmulq_f64(vmulq_f64(vmulq_f64(a3, z), z), z), vmulq_f64(a1, z));
      const float64x2_t drift = vsubq_f64(vnegq_f64(force), vmulq_f64(J, vsubq_f64(z, m)));
      const float64x2_t inc = vaddq_f64(vmulq_f64(drift, dt), vmulq_f64(noise, vld1q_f64(xi + i * L + l)));
      inc_sum = vaddq_f64(inc_sum, inc);
      vst1q_f64(x + i * L + l, vaddq_f64(z, inc));
    }
    if (p.project) {
      const float64x2_t shift = vmulq_f64(inc_sum, inv_n);
      for (int i = 0; i < p.n; ++i) vst1q_f64(x + i * L + l, vsubq_f64(vld1q_f64(x + i * L + l), shift));
    }
    float64x2_t after = f64(0.0);
    for (int i = 0; i < p.n; ++i) after = vaddq_f64(after, vld1q_f64(x + i * L + l));
    vst1q_f64(mean_out + l, vmulq_f64(after, inv_n));
  }
  math::em_step_range(p, x, xi, mean_out, full, L);
}

constexpr KernelTable kNeon{Isa::Neon, "neon", &fill_normals, &em_step};

}  // namespace

// Advanced SIMD is mandatory on AArch64.
const KernelTable* neon_table() { return &kNeon; }

}  // namespace mfk::kernels
