#include "npgmo/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace npgmo::kernels {

#if defined(NPGMO_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif

bool avx2_available() noexcept {
#if defined(NPGMO_HAVE_AVX2)
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

const KernelTable& table(Isa isa) noexcept {
#if defined(NPGMO_HAVE_AVX2)
    if (isa == Isa::Avx2 && avx2_available()) return avx2_table();
#endif
    (void)isa;
    return scalar_table();
}

const KernelTable& active() noexcept {
    static const KernelTable& chosen = [] () -> const KernelTable& {
        const char* env = std::getenv("NPGMO_KERNELS");
        if (env != nullptr && std::string_view(env) == "scalar") return scalar_table();
        return table(Isa::Avx2);
    }();
    return chosen;
}

}  // namespace npgmo::kernels
