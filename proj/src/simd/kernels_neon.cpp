#include <arm_neon.h>

#include "urbanfix/simd/kernels.hpp"

namespace urbanfix::simd {

namespace {

// Two q-registers hold lanes 0..3 and 4..7 of the eight partial sums.
inline float squared_l2_neon(const float* a, const float* b, size_t n) {
  float32x4_t lo = vdupq_n_f32(0.0f);
  float32x4_t hi = vdupq_n_f32(0.0f);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const float32x4_t d0 = vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i));
    const float32x4_t d1 = vsubq_f32(vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
    lo = vaddq_f32(lo, vmulq_f32(d0, d0));
    hi = vaddq_f32(hi, vmulq_f32(d1, d1));
  }
  const float32x4_t s = vaddq_f32(lo, hi);
  const float32x2_t pair = vadd_f32(vget_low_f32(s), vget_high_f32(s));
  float sum = vget_lane_f32(pair, 0) + vget_lane_f32(pair, 1);
  for (; i < n; ++i) {
    const float d = a[i] - b[i];
    sum = sum + d * d;
  }
  return sum;
}

NearestTwo nearest_two_neon(const float* query, const float* refs, size_t rows,
                            size_t dim) {
  NearestTwo out;
  for (size_t r = 0; r < rows; ++r) {
    const float d = squared_l2_neon(query, refs + r * dim, dim);
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
  return squared_l2_neon(a, b, n);
}

}  // namespace

namespace detail {

const KernelTable& neon_table() {
  static const KernelTable table{Backend::kNeon, &squared_l2_entry,
                                 &nearest_two_neon};
  return table;
}

}  // namespace detail

}  // namespace urbanfix::simd
