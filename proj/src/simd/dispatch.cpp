#include <cstdlib>
#include <string>

#include "funnel/error.hpp"
#include "funnel/simd/kernels.hpp"

namespace funnel::simd {

namespace {

constexpr KernelTable scalar_table{Isa::scalar, &scalar::dot, &scalar::dot_rows, &scalar::bm25_weights};
#if defined(FUNNEL_HAVE_AVX2)
constexpr KernelTable avx2_table{Isa::avx2, &avx2::dot, &avx2::dot_rows, &avx2::bm25_weights};
#endif
#if defined(FUNNEL_HAVE_NEON)
constexpr KernelTable neon_table{Isa::neon, &neon::dot, &neon::dot_rows, &neon::bm25_weights};
#endif

const KernelTable& select_default() {
  if (const char* forced = std::getenv("FUNNEL_SIMD"); forced != nullptr && *forced != '\0') {
    const std::string name(forced);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (name == to_string(isa) && supported(isa)) return kernels(isa);
    }
  }
  if (supported(Isa::avx2)) return kernels(Isa::avx2);
  if (supported(Isa::neon)) return kernels(Isa::neon);
  return scalar_table;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(FUNNEL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(FUNNEL_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels(Isa isa) {
  if (!supported(isa)) {
    throw Error(Errc::invalid_argument, std::string("SIMD variant not available: ") + std::string(to_string(isa)));
  }
  switch (isa) {
#if defined(FUNNEL_HAVE_AVX2)
    case Isa::avx2: return avx2_table;
#endif
#if defined(FUNNEL_HAVE_NEON)
    case Isa::neon: return neon_table;
#endif
    default: return scalar_table;
  }
}

const KernelTable& kernels() {
  static const KernelTable& active = select_default();
  return active;
}

}  // namespace funnel::simd
