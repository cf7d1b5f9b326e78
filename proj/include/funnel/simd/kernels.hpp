#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference and vector
// variants selected once at startup; tests hold the variants to the reference.
//
//  * bm25_weights: out[i] = idf * ((tf[i] * k1p1) / (tf[i] + norm[i])).
//    Every variant evaluates exactly this expression tree lane-wise, so all
//    variants are bitwise identical to the scalar reference.
//  * dot / dot_rows: float inputs, double accumulation. Products are exact in
//    double; variants differ from the reference only in summation order.

#include <cstddef>
#include <string_view>

namespace funnel::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  double (*dot)(const float* a, const float* b, std::size_t n);
  // out[r] = dot(query, rows + r * dim) for r in [0, count)
  void (*dot_rows)(const float* query, const float* rows, std::size_t count, std::size_t dim, double* out);
  void (*bm25_weights)(const double* tf, const double* norm, std::size_t n, double idf, double k1p1,
                       double* out);
};

std::string_view to_string(Isa isa);

/// Whether the running CPU (and this build) can execute `isa`.
bool supported(Isa isa);

/// The table for `isa`; throws funnel::Error(invalid_argument) if unsupported.
const KernelTable& kernels(Isa isa);

/// The active table. Picks the widest supported ISA unless the environment
/// variable FUNNEL_SIMD names another one ("scalar", "avx2", "neon").
const KernelTable& kernels();

namespace scalar {
double dot(const float* a, const float* b, std::size_t n);
void dot_rows(const float* query, const float* rows, std::size_t count, std::size_t dim, double* out);
void bm25_weights(const double* tf, const double* norm, std::size_t n, double idf, double k1p1, double* out);
}  // namespace scalar

namespace avx2 {
double dot(const float* a, const float* b, std::size_t n);
void dot_rows(const float* query, const float* rows, std::size_t count, std::size_t dim, double* out);
void bm25_weights(const double* tf, const double* norm, std::size_t n, double idf, double k1p1, double* out);
}  // namespace avx2

namespace neon {
double dot(const float* a, const float* b, std::size_t n);
void dot_rows(const float* query, const float* rows, std::size_t count, std::size_t dim, double* out);
void bm25_weights(const double* tf, const double* norm, std::size_t n, double idf, double k1p1, double* out);
}  // namespace neon

}  // namespace funnel::simd
