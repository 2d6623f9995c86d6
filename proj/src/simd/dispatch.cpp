// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string>

#include "stimkit/error.hpp"
#include "stimkit/simd/kernels.hpp"

namespace stimkit::simd {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(STIMKIT_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() {
  static const Isa selected = [] {
    if (const char* env = std::getenv("STIMKIT_SIMD")) {
      if (std::string(env) == "scalar") return Isa::kScalar;
    }
    return isa_supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
  }();
  return selected;
}

template <typename T>
const KernelTable<T>& kernels(Isa isa) {
  if (!isa_supported(isa)) {
    fail(ErrorKind::kConfig,
         "kernel variant not supported on this CPU: " + std::string(to_string(isa)));
  }
#if defined(STIMKIT_HAVE_AVX2)
  if (isa == Isa::kAvx2) return detail::avx2_table<T>();
#endif
  return detail::scalar_table<T>();
}

template const KernelTable<float>& kernels<float>(Isa);
template const KernelTable<double>& kernels<double>(Isa);

}  // namespace stimkit::simd
