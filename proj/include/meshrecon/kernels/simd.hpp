#pragma once

namespace meshrecon::kernels {

enum class SimdLevel { kScalar = 0, kAvx2 = 1 };

// Level selected at startup: highest level the CPU supports, unless the
// MESHRECON_SIMD environment variable ("scalar" or "avx2") overrides it.
SimdLevel active_level();

const char* level_name(SimdLevel level);

// Test hook. Returns false if the CPU does not support the requested level.
bool force_level(SimdLevel level);

bool cpu_supports(SimdLevel level);

}  // namespace meshrecon::kernels
