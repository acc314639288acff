#pragma once

#include <cstddef>
#include <string_view>

// Small dense kernels on contiguous double arrays. Matrices are row-major.
// Each kernel has a scalar reference and an AVX2/FMA variant; the variant is
// chosen once at runtime from CPUID and can be overridden for testing.

namespace simest::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
    // y = M x, M is rows x cols
    void (*gemv)(const double* M, std::size_t rows, std::size_t cols, const double* x, double* y);
    // y += M x
    void (*gemv_acc)(const double* M, std::size_t rows, std::size_t cols, const double* x, double* y);
    // y += a x
    void (*axpy)(std::size_t n, double a, const double* x, double* y);
    // sum_k (a_k - b_k)^2
    double (*sum_sq_diff)(std::size_t n, const double* a, const double* b);
};

namespace scalar {
void   gemv(const double* M, std::size_t rows, std::size_t cols, const double* x, double* y);
void   gemv_acc(const double* M, std::size_t rows, std::size_t cols, const double* x, double* y);
void   axpy(std::size_t n, double a, const double* x, double* y);
double sum_sq_diff(std::size_t n, const double* a, const double* b);
}  // namespace scalar

namespace avx2 {
void   gemv(const double* M, std::size_t rows, std::size_t cols, const double* x, double* y);
void   gemv_acc(const double* M, std::size_t rows, std::size_t cols, const double* x, double* y);
void   axpy(std::size_t n, double a, const double* x, double* y);
double sum_sq_diff(std::size_t n, const double* a, const double* b);
}  // namespace avx2

/// True when the CPU and the build both support the AVX2 variant.
bool avx2_available();

/// Table for an explicit ISA. Requesting avx2 on a machine without it throws.
const KernelTable& table(Isa isa);

/// Table currently in use. Starts at the best available ISA; the environment
/// variable SIMEST_FORCE_SCALAR=1 pins it to scalar.
const KernelTable& active();
Isa                active_isa();

/// Overrides the active ISA for the whole process. Not thread-safe; call before work starts.
void set_active_isa(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace simest::kernels
