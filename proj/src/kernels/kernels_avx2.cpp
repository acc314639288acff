#include <immintrin.h>

#include "simest/kernels.hpp"

#if !defined(__AVX2__) || !defined(__FMA__)
#error kernels_avx2.cpp must be compiled with -mavx2 -mfma
#endif

namespace simest::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s  = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double dot(const double* a, const double* b, std::size_t n) {
    __m256d     acc0 = _mm256_setzero_pd();
    __m256d     acc1 = _mm256_setzero_pd();
    std::size_t k    = 0;
    for (; k + 8 <= n; k += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
    }
    for (; k + 4 <= n; k += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) s += a[k] * b[k];
    return s;
}

}  // namespace

void gemv(const double* M, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i) y[i] = dot(M + i * cols, x, cols);
}

void gemv_acc(const double* M, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i) y[i] += dot(M + i * cols, x, cols);
}

void axpy(std::size_t n, double a, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t   k  = 0;
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(y + k, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
    }
    for (; k < n; ++k) y[k] += a * x[k];
}

double sum_sq_diff(std::size_t n, const double* a, const double* b) {
    __m256d     acc0 = _mm256_setzero_pd();
    __m256d     acc1 = _mm256_setzero_pd();
    std::size_t k    = 0;
    for (; k + 8 <= n; k += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4));
        acc0             = _mm256_fmadd_pd(d0, d0, acc0);
        acc1             = _mm256_fmadd_pd(d1, d1, acc1);
    }
    for (; k + 4 <= n; k += 4) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
        acc0             = _mm256_fmadd_pd(d0, d0, acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

}  // namespace simest::kernels::avx2
