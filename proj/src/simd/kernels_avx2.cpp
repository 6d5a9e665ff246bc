#include <immintrin.h>

#include "urbanfix/simd/kernels.hpp"

namespace urbanfix::simd {

namespace {

inline float squared_l2_avx2(const float* a, const float* b, size_t n) {
  __m256 acc = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    acc = _mm256_add_ps(acc, _mm256_mul_ps(d, d));
  }
  // s[k] = l[k] + l[k+4]
  const __m128 s = _mm_add_ps(_mm256_castps256_ps128(acc),
                              _mm256_extractf128_ps(acc, 1));
  // (s0+s2, s1+s3)
  const __m128 pair = _mm_add_ps(s, _mm_movehl_ps(s, s));
  float sum = _mm_cvtss_f32(_mm_add_ss(pair, _mm_shuffle_ps(pair, pair, 0x55)));
  for (; i < n; ++i) {
    const float d = a[i] - b[i];
    sum = sum + d * d;
  }
  return sum;
}

NearestTwo nearest_two_avx2(const float* query, const float* refs, size_t rows,
                            size_t dim) {
  NearestTwo out;
  for (size_t r = 0; r < rows; ++r) {
    const float d = squared_l2_avx2(query, refs + r * dim, dim);
    if (d < out.best) {
      out.second = out.best;
      out.second_index = out.best_index;
      out.best = d;
      out.best_index = static_cast<int64_t>(r);
    } else if (d < out.second) {
      out.second = d;
      out.second_index = static_cast<int64_t>(r);
    }
  }
  return out;
}

float squared_l2_entry(const float* a, const float* b, size_t n) {
  return squared_l2_avx2(a, b, n);
}

}  // namespace

namespace detail {

const KernelTable& avx2_table() {
  static const KernelTable table{Backend::kAvx2, &squared_l2_entry,
                                 &nearest_two_avx2};
  return table;
}

}  // namespace detail

}  // namespace urbanfix::simd
