#include "funnel/simd/kernels.hpp"

namespace funnel::simd::scalar {

double dot(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

void dot_rows(const float* query, const float* rows, std::size_t count, std::size_t dim, double* out) {
  for (std::size_t r = 0; r < count; ++r) out[r] = dot(query, rows + r * dim, dim);
}

void bm25_weights(const double* tf, const double* norm, std::size_t n, double idf, double k1p1, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = idf * ((tf[i] * k1p1) / (tf[i] + norm[i]));
}

}  // namespace funnel::simd::scalar
