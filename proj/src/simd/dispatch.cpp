#include <cstdlib>
#include <string>

#include "urbanfix/error.hpp"
#include "urbanfix/simd/kernels.hpp"

namespace urbanfix::simd {

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
    case Backend::kNeon: return "neon";
  }
  return "unknown";
}

bool backend_available(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
#if defined(URBANFIX_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::kNeon:
#if defined(URBANFIX_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::kScalar, Backend::kAvx2, Backend::kNeon}) {
    if (backend_available(b)) out.push_back(b);
  }
  return out;
}

const KernelTable& kernels(Backend backend) {
  if (!backend_available(backend)) {
    throw Error(ErrorCode::kInvalidArgument,
                "SIMD backend not available: " +
                    std::string(backend_name(backend)));
  }
  switch (backend) {
#if defined(URBANFIX_HAVE_AVX2)
    case Backend::kAvx2: return detail::avx2_table();
#endif
#if defined(URBANFIX_HAVE_NEON)
    case Backend::kNeon: return detail::neon_table();
#endif
    default: return detail::scalar_table();
  }
}

namespace {

const KernelTable& select_kernels() {
  if (const char* env = std::getenv("URBANFIX_SIMD")) {
    const std::string want(env);
    for (Backend b : available_backends()) {
      if (backend_name(b) == want) return kernels(b);
    }
  }
  if (backend_available(Backend::kAvx2)) return kernels(Backend::kAvx2);
  if (backend_available(Backend::kNeon)) return kernels(Backend::kNeon);
  return kernels(Backend::kScalar);
}

}  // namespace

const KernelTable& active_kernels() {
  static const KernelTable& table = select_kernels();
  return table;
}

}  // namespace urbanfix::simd
