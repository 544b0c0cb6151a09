#include <cstdlib>
#include <string>

#include "udn/errors.hpp"
#include "udn/kernels.hpp"

namespace udn::kernels {

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_supported() {
#if defined(__GNUC__) || defined(__clang__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
#endif

namespace {

const Backend& select() {
  if (const char* env = std::getenv("UDN_KERNELS")) {
    std::string want(env);
    if (want == "scalar") return scalar();
#if defined(__x86_64__) || defined(_M_X64)
    if (want == "avx2") {
      if (!avx2_supported())
        throw ConfigError("UDN_KERNELS=avx2 but the CPU lacks AVX2/FMA");
      return avx2();
    }
#endif
    throw ConfigError("unknown UDN_KERNELS value: " + want);
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_supported()) return avx2();
#endif
  return scalar();
}

}  // namespace

const Backend& active() {
  static const Backend& chosen = select();
  return chosen;
}

}  // namespace udn::kernels
