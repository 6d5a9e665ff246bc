#pragma once

// Descriptor-distance kernels with a scalar reference and vectorized variants
// selected at runtime.
//
// All variants accumulate squared differences into eight partial sums
// (element i goes to lane i % 8), fold them in the fixed order
//   ((l0+l4) + (l2+l6)) + ((l1+l5) + (l3+l7))
// and then add the tail elements one at a time. No fused multiply-add is
// used, so every backend returns bitwise-identical results.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

namespace urbanfix::simd {

enum class Backend { kScalar, kAvx2, kNeon };

std::string_view backend_name(Backend backend);

// Two smallest squared distances from a query row to a block of rows.
// best_index / second_index are -1 when fewer rows were scanned.
struct NearestTwo {
  float best = std::numeric_limits<float>::infinity();
  float second = std::numeric_limits<float>::infinity();
  int64_t best_index = -1;
  int64_t second_index = -1;
};

struct KernelTable {
  Backend backend;
  float (*squared_l2)(const float* a, const float* b, size_t n);
  // Rows of `refs` are `dim` floats each, contiguous. Ties keep the lower
  // row index.
  NearestTwo (*nearest_two)(const float* query, const float* refs,
                            size_t rows, size_t dim);
};

// True when the running CPU (and this build) supports `backend`.
bool backend_available(Backend backend);

std::vector<Backend> available_backends();

// Kernel table for a specific backend; throws if it is unavailable.
const KernelTable& kernels(Backend backend);

// Best available backend, chosen once per process. The environment variable
// URBANFIX_SIMD=scalar|avx2|neon overrides the choice when that backend is
// available.
const KernelTable& active_kernels();

namespace detail {
const KernelTable& scalar_table();
#if defined(URBANFIX_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(URBANFIX_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace urbanfix::simd
