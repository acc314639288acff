#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "simest/kernels.hpp"

namespace simest::kernels {

namespace {

const KernelTable scalar_table{scalar::gemv, scalar::gemv_acc, scalar::axpy, scalar::sum_sq_diff};

#if defined(SIMEST_HAVE_AVX2)
const KernelTable avx2_table{avx2::gemv, avx2::gemv_acc, avx2::axpy, avx2::sum_sq_diff};
#endif

bool cpu_has_avx2() {
#if defined(SIMEST_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa initial_isa() {
    const char* force = std::getenv("SIMEST_FORCE_SCALAR");
    if (force != nullptr && std::strcmp(force, "0") != 0 && force[0] != '\0') return Isa::scalar;
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

Isa& current() {
    static Isa isa = initial_isa();
    return isa;
}

}  // namespace

bool avx2_available() { return cpu_has_avx2(); }

const KernelTable& table(Isa isa) {
    if (isa == Isa::scalar) return scalar_table;
#if defined(SIMEST_HAVE_AVX2)
    if (cpu_has_avx2()) return avx2_table;
#endif
    throw std::runtime_error("kernels: AVX2 variant requested but not available");
}

const KernelTable& active() { return table(current()); }

Isa active_isa() { return current(); }

void set_active_isa(Isa isa) {
    (void)table(isa);
    current() = isa;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace simest::kernels
