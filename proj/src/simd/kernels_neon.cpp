// aarch64 only. Advanced SIMD is part of the base ISA there.
#include <arm_neon.h>

#include "funnel/simd/kernels.hpp"

namespace funnel::simd::neon {

double dot(const float* a, const float* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t va = vld1q_f32(a + i);
    const float32x4_t vb = vld1q_f32(b + i);
    acc0 = vaddq_f64(acc0, vmulq_f64(vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb))));
    acc1 = vaddq_f64(acc1, vmulq_f64(vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb)));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

void dot_rows(const float* query, const float* rows, std::size_t count, std::size_t dim, double* out) {
  for (std::size_t r = 0; r < count; ++r) out[r] = dot(query, rows + r * dim, dim);
}

void bm25_weights(const double* tf, const double* norm, std::size_t n, double idf, double k1p1, double* out) {
  const float64x2_t vidf = vdupq_n_f64(idf);
  const float64x2_t vk = vdupq_n_f64(k1p1);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t t = vld1q_f64(tf + i);
    const float64x2_t nl = vld1q_f64(norm + i);
    const float64x2_t w = vdivq_f64(vmulq_f64(t, vk), vaddq_f64(t, nl));
    vst1q_f64(out + i, vmulq_f64(vidf, w));
  }
  for (; i < n; ++i) out[i] = idf * ((tf[i] * k1p1) / (tf[i] + norm[i]));
}

}  // namespace funnel::simd::neon
