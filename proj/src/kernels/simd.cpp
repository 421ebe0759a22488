#include "meshrecon/kernels/simd.hpp"

#include <cstdlib>
#include <cstring>

namespace meshrecon::kernels {

namespace {

bool detect_avx2() {
#if defined(__x86_64__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

SimdLevel initial_level() {
  const char* env = std::getenv("MESHRECON_SIMD");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return SimdLevel::kScalar;
    if (std::strcmp(env, "avx2") == 0 && detect_avx2()) return SimdLevel::kAvx2;
    return SimdLevel::kScalar;
  }
  return detect_avx2() ? SimdLevel::kAvx2 : SimdLevel::kScalar;
}

SimdLevel g_level = initial_level();

}  // namespace

SimdLevel active_level() { return g_level; }

const char* level_name(SimdLevel level) {
  switch (level) {
    case SimdLevel::kScalar:
      return "scalar";
    case SimdLevel::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool cpu_supports(SimdLevel level) {
  if (level == SimdLevel::kScalar) return true;
  return detect_avx2();
}

bool force_level(SimdLevel level) {
  if (!cpu_supports(level)) return false;
  g_level = level;
  return true;
}

}  // namespace meshrecon::kernels
