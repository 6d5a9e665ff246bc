#include "urbanfix/simd/kernels.hpp"

namespace urbanfix::simd {

namespace {

float squared_l2_scalar(const float* a, const float* b, size_t n) {
  float lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (size_t k = 0; k < 8; ++k) {
      const float d = a[i + k] - b[i + k];
      lane[k] = lane[k] + d * d;
    }
  }
  float s[4];
  for (size_t k = 0; k < 4; ++k) s[k] = lane[k] + lane[k + 4];
  const float even = s[0] + s[2];
  const float odd = s[1] + s[3];
  float sum = even + odd;
  for (; i < n; ++i) {
    const float d = a[i] - b[i];
    sum = sum + d * d;
  }
  return sum;
}

NearestTwo nearest_two_scalar(const float* query, const float* refs,
                              size_t rows, size_t dim) {
  NearestTwo out;
  for (size_t r = 0; r < rows; ++r) {
    const float d = squared_l2_scalar(query, refs + r * dim, dim);
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

}  // namespace

namespace detail {

const KernelTable& scalar_table() {
  static const KernelTable table{Backend::kScalar, &squared_l2_scalar,
                                 &nearest_two_scalar};
  return table;
}

}  // namespace detail

}  // namespace urbanfix::simd
