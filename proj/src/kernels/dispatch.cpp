#include <cstdlib>
#include <string_view>

#include "mfk/kernels.hpp"

namespace mfk::kernels {

#if !defined(MFK_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(MFK_HAVE_NEON)
const KernelTable* neon_table() { return nullptr; }
#endif

const KernelTable& active_table() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* env = std::getenv("MFK_KERNELS");
    if (env && std::string_view(env) == "scalar") return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    if (const KernelTable* t = neon_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace mfk::kernels
