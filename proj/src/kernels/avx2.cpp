#include <immintrin.h>

#include "kernel_math.hpp"

namespace mfk::kernels {

namespace {

using math::kHalfUlp;

inline __m256i u64(uint64_t v) { return _mm256_set1_epi64x(static_cast<long long>(v)); }
inline __m256d neg(__m256d v) { return _mm256_xor_pd(v, _mm256_set1_pd(-0.0)); }

struct Words {
  __m256i c0, c1, c2, c3;  // one 32-bit word per 64-bit slot
};

inline Words philox(Words w, uint32_t k0, uint32_t k1) {
  const __m256i m0 = u64(math::kPhiloxM0), m1 = u64(math::kPhiloxM1), lo32 = u64(0xFFFFFFFFull);
  for (int r = 0; r < 10; ++r) {
    const __m256i p0 = _mm256_mul_epu32(w.c0, m0);
    const __m256i p1 = _mm256_mul_epu32(w.c2, m1);
    const __m256i hi0 = _mm256_srli_epi64(p0, 32), lo0 = _mm256_and_si256(p0, lo32);
    const __m256i hi1 = _mm256_srli_epi64(p1, 32), lo1 = _mm256_and_si256(p1, lo32);
    w = Words{_mm256_xor_si256(_mm256_xor_si256(hi1, w.c1), u64(k0)), lo1,
              _mm256_xor_si256(_mm256_xor_si256(hi0, w.c3), u64(k1)), lo0};
    k0 += math::kWeyl0;
    k1 += math::kWeyl1;
  }
  return w;
}

inline __m256d uniform52(__m256i hi, __m256i lo) {
  const __m256i k = _mm256_or_si256(_mm256_slli_epi64(_mm256_and_si256(hi, u64(0xFFFFFull)), 32), lo);
  const __m256d d = _mm256_castsi256_pd(_mm256_or_si256(k, u64(math::kOneBits)));
  return _mm256_add_pd(_mm256_sub_pd(d, _mm256_set1_pd(1.0)), _mm256_set1_pd(kHalfUlp));
}

inline __m256d log_pos(__m256d x) {
  const __m256i b = _mm256_castpd_si256(x);
  __m256d k = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(u64(math::kTwo52Bits), _mm256_srli_epi64(b, 52))),
                            _mm256_set1_pd(math::kTwo52 + 1023.0));
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(b, u64(math::kMantMask)), u64(math::kOneBits)));
  const __m256d fold = _mm256_cmp_pd(m, _mm256_set1_pd(math::kSqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), fold);
  k = _mm256_blendv_pd(k, _mm256_add_pd(k, _mm256_set1_pd(1.0)), fold);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d f = _mm256_sub_pd(m, one);
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(_mm256_set1_pd(2.0), f));
  const __m256d hfsq = _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(0.5), f), f);
  const __m256d z = _mm256_mul_pd(s, s);
  const __m256d w = _mm256_mul_pd(z, z);
  auto c = [](double v) { return _mm256_set1_pd(v); };
  const __m256d t1 = _mm256_mul_pd(
      w, _mm256_add_pd(c(math::kLg2), _mm256_mul_pd(w, _mm256_add_pd(c(math::kLg4), _mm256_mul_pd(w, c(math::kLg6))))));
  const __m256d t2 = _mm256_mul_pd(
      z, _mm256_add_pd(c(math::kLg1),
                       _mm256_mul_pd(w, _mm256_add_pd(c(math::kLg3),
                                                      _mm256_mul_pd(w, _mm256_add_pd(c(math::kLg5),
                                                                                     _mm256_mul_pd(w, c(math::kLg7))))))));
  const __m256d R = _mm256_add_pd(t2, t1);
  const __m256d inner = _mm256_sub_pd(
      hfsq, _mm256_add_pd(_mm256_mul_pd(s, _mm256_add_pd(hfsq, R)), _mm256_mul_pd(k, c(math::kLn2Lo))));
  return _mm256_sub_pd(_mm256_mul_pd(k, c(math::kLn2Hi)), _mm256_sub_pd(inner, f));
}

inline __m256d horner(__m256d p, __m256d y2, double coeff) {
  return _mm256_add_pd(_mm256_mul_pd(p, y2), _mm256_set1_pd(coeff));
}

inline void cos_sin_2pi(__m256d u, __m256d& c, __m256d& s) {
  const __m256d t = _mm256_mul_pd(_mm256_set1_pd(4.0), u);
  const __m256d k = _mm256_round_pd(t, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  const __m256d y = _mm256_mul_pd(_mm256_sub_pd(t, k), _mm256_set1_pd(math::kHalfPi));
  const __m256d y2 = _mm256_mul_pd(y, y);

  __m256d ps = _mm256_set1_pd(math::kS17);
  for (double coeff : math::kSinTail)
    ps = horner(ps, y2, coeff);
  const __m256d sy = _mm256_add_pd(y, _mm256_mul_pd(_mm256_mul_pd(y, y2), ps));
  __m256d pc = _mm256_set1_pd(math::kC18);
  for (double coeff : math::kCosTail)
    pc = horner(pc, y2, coeff);
  const __m256d cy = _mm256_add_pd(_mm256_set1_pd(1.0), _mm256_mul_pd(y2, pc));

  const __m256i q = _mm256_and_si256(_mm256_castpd_si256(_mm256_add_pd(k, _mm256_set1_pd(math::kTwo52))), u64(3));
  const __m256d odd = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q, u64(1)), u64(1)));
  const __m256d a = _mm256_blendv_pd(cy, sy, odd);
  const __m256d b = _mm256_blendv_pd(sy, cy, odd);
  const __m256d neg_c =
      _mm256_castsi256_pd(_mm256_or_si256(_mm256_cmpeq_epi64(q, u64(1)), _mm256_cmpeq_epi64(q, u64(2))));
  const __m256d neg_s = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q, u64(2)), u64(2)));
  c = _mm256_blendv_pd(a, neg(a), neg_c);
  s = _mm256_blendv_pd(b, neg(b), neg_s);
}

void fill_normals(const NormalBatch& b, double* out) {
  const uint32_t k0 = static_cast<uint32_t>(b.seed), k1 = static_cast<uint32_t>(b.seed >> 32);
  const int full = b.lanes - b.lanes % 4;
  for (int l = 0; l < full; l += 4) {
    const __m256i step = _mm256_cvtepu32_epi64(_mm_loadu_si128(reinterpret_cast<const __m128i*>(b.step + l)));
    const __m256i traj = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b.traj + l));
    const __m256i traj_lo = _mm256_and_si256(traj, u64(0xFFFFFFFFull));
    const __m256i traj_hi = _mm256_srli_epi64(traj, 32);
    for (int i = 0; i < b.n; i += 2) {
      const uint32_t word1 = static_cast<uint32_t>(i / 2) | (b.phase << 16);
      const Words w = philox(Words{step, u64(word1), traj_lo, traj_hi}, k0, k1);
      const __m256d u1 = uniform52(w.c0, w.c1);
      const __m256d u2 = uniform52(w.c2, w.c3);
      const __m256d r = _mm256_sqrt_pd(_mm256_mul_pd(_mm256_set1_pd(-2.0), log_pos(u1)));
      __m256d c, s;
      cos_sin_2pi(u2, c, s);
      _mm256_storeu_pd(out + i * b.lanes + l, _mm256_mul_pd(r, c));
      if (i + 1 < b.n) _mm256_storeu_pd(out + (i + 1) * b.lanes + l, _mm256_mul_pd(r, s));
    }
  }
  math::fill_normals_range(b, out, full, b.lanes);
}

void em_step(const EmBatch& p, double* x, const double* xi, double* mean_out) {
  const int L = p.lanes;
  const int full = L - L % 4;
  const __m256d inv_n = _mm256_set1_pd(1.0 / p.n);
  const __m256d a3 = _mm256_set1_pd(p.a3), a1 = _mm256_set1_pd(p.a1), J = _mm256_set1_pd(p.J);
  const __m256d dt = _mm256_set1_pd(p.dt), noise = _mm256_set1_pd(p.noise);
  for (int l = 0; l < full; l += 4) {
    __m256d sum = _mm256_setzero_pd();
    for (int i = 0; i < p.n; ++i) sum = _mm256_add_pd(sum, _mm256_loadu_pd(x + i * L + l));
    const __m256d m = _mm256_mul_pd(sum, inv_n);
    __m256d inc_sum = _mm256_setzero_pd();
    for (int i = 0; i < p.n; ++i) {
      const __m256d z = _mm256_loadu_pd(x + i * L + l);
      const __m256d force =
          _mm256_add_pd(_mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(a3, z), z), z), _mm256_mul_pd(a1, z));
      const __m256d drift = _mm256_sub_pd(neg(force), _mm256_mul_pd(J, _mm256_sub_pd(z, m)));
      const __m256d inc =
          _mm256_add_pd(_mm256_mul_pd(drift, dt), _mm256_mul_pd(noise, _mm256_loadu_pd(xi + i * L + l)));
      inc_sum = _mm256_add_pd(inc_sum, inc);
      _mm256_storeu_pd(x + i * L + l, _mm256_add_pd(z, inc));
    }
    if (p.project) {
      const __m256d shift = _mm256_mul_pd(inc_sum, inv_n);
      for (int i = 0; i < p.n; ++i)
        _mm256_storeu_pd(x + i * L + l, _mm256_sub_pd(_mm256_loadu_pd(x + i * L + l), shift));
    }
    __m256d after = _mm256_setzero_pd();
    for (int i = 0; i < p.n; ++i) after = _mm256_add_pd(after, _mm256_loadu_pd(x + i * L + l));
    _mm256_storeu_pd(mean_out + l, _mm256_mul_pd(after, inv_n));
  }
  math::em_step_range(p, x, xi, mean_out, full, L);
}

constexpr KernelTable kAvx2{Isa::Avx2, "avx2", &fill_normals, &em_step};

}  // namespace

const KernelTable* avx2_table() {
  static const bool ok = __builtin_cpu_supports("avx2");
  return ok ? &kAvx2 : nullptr;
}

}  // namespace mfk::kernels
