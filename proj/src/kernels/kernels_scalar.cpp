#include "simest/kernels.hpp"

namespace simest::kernels::scalar {

void gemv(const double* M, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = M + i * cols;
        double        acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

void gemv_acc(const double* M, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = M + i * cols;
        double        acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
        y[i] += acc;
    }
}

void axpy(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t k = 0; k < n; ++k) y[k] += a * x[k];
}

double sum_sq_diff(std::size_t n, const double* a, const double* b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = a[k] - b[k];
        acc += d * d;
    }
    return acc;
}

}  // namespace simest::kernels::scalar
