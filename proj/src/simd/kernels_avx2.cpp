// Compiled with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include "funnel/simd/kernels.hpp"

namespace funnel::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(const float* a, const float* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    const __m256d a0 = _mm256_cvtps_pd(_mm256_castps256_ps128(va));
    const __m256d a1 = _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1));
    const __m256d b0 = _mm256_cvtps_pd(_mm256_castps256_ps128(vb));
    const __m256d b1 = _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(a0, b0));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(a1, b1));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

void dot_rows(const float* query, const float* rows, std::size_t count, std::size_t dim, double* out) {
  for (std::size_t r = 0; r < count; ++r) out[r] = dot(query, rows + r * dim, dim);
}

void bm25_weights(const double* tf, const double* norm, std::size_t n, double idf, double k1p1, double* out) {
  const __m256d vidf = _mm256_set1_pd(idf);
  const __m256d vk = _mm256_set1_pd(k1p1);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_loadu_pd(tf + i);
    const __m256d nl = _mm256_loadu_pd(norm + i);
    const __m256d w = _mm256_div_pd(_mm256_mul_pd(t, vk), _mm256_add_pd(t, nl));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(vidf, w));
  }
  for (; i < n; ++i) out[i] = idf * ((tf[i] * k1p1) / (tf[i] + norm[i]));
}

}  // namespace funnel::simd::avx2
