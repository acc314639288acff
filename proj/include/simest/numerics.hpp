#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string_view>
#include <vector>

#include "simest/errors.hpp"

namespace simest {

using Matrix   = Eigen::MatrixXd;
using Vector   = Eigen::VectorXd;
using CMatrix  = Eigen::MatrixXcd;
using CVector  = Eigen::VectorXcd;
using Complex  = std::complex<double>;
using Spectrum = std::vector<Complex>;

/// Tolerances shared by the dense kernels. Defaults are the documented contract values.
struct NumericTolerances {
    double schur_reconstruction = 1e-10;  // relative to ||A||
    double orthogonality        = 1e-12;
    double lyapunov_residual    = 1e-9;   // relative to ||A||*||X|| + ||Q||
    double care_residual        = 1e-8;   // relative
    double imaginary_axis       = 1e-8;   // |Re(lambda)| threshold relative to ||H||
    double singular_rcond       = 1e-12;
};

struct SchurForm {
    Matrix   U;  // orthogonal
    Matrix   T;  // quasi upper triangular
    Spectrum eigenvalues;
};

/// Throws ValidationError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& M, std::string_view what);
void require_square(const Matrix& M, std::string_view what);

/// Real Schur decomposition A = U T U^T (no balancing, so U stays orthogonal).
SchurForm real_schur(const Matrix& A);

/// Diagonal similarity balancing (radix 2). Returns D^{-1} A D and writes diag(D).
Matrix balance(const Matrix& A, Vector* scaling = nullptr);

/// Eigenvalues of a square matrix; the matrix is balanced before QR iteration.
Spectrum eigenvalues(const Matrix& A);

/// Largest real part of the spectrum; -inf for an empty matrix.
double spectral_abscissa(const Matrix& A);

/// True when every eigenvalue satisfies Re(lambda) < -margin.
bool is_hurwitz(const Matrix& A, double margin = 0.0);

/// Solves A X + X B = C for X (complex Schur / Bartels-Stewart).
Matrix solve_sylvester(const Matrix& A, const Matrix& B, const Matrix& C);

/// Solves A^T X + X A + Q = 0 for Hurwitz A. Throws SolvabilityError otherwise.
Matrix solve_lyapunov(const Matrix& A, const Matrix& Q, const NumericTolerances& tol = {});

/// Stabilizing solution of A^T X + X A - X B R^{-1} B^T X + Q = 0 via the ordered
/// Schur form of the Hamiltonian.
Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                  const NumericTolerances& tol = {});

/// Residual A^T X + X A - X B R^{-1} B^T X + Q.
Matrix care_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                     const Matrix& X);

/// Singular values in descending order.
Vector singular_values(const Matrix& M);
double sigma_max(const Matrix& M);
double sigma_max(const CMatrix& M);

/// Induced 2-norm with a zero default for empty matrices.
double norm2(const Matrix& M);

/// Ordered complex Schur form: eigenvalues selected by `first` are moved to the
/// leading block. Returns the number of selected eigenvalues.
struct ComplexSchurForm {
    CMatrix U;
    CMatrix T;
};
template <typename Pred>
int reorder_schur(ComplexSchurForm& form, Pred first);

ComplexSchurForm complex_schur(const Matrix& A);

/// Swaps the adjacent diagonal entries k and k+1 of a triangular Schur factor.
void swap_schur_pair(ComplexSchurForm& form, int k);

template <typename Pred>
int reorder_schur(ComplexSchurForm& form, Pred first) {
    const int n     = static_cast<int>(form.T.rows());
    int       count = 0;
    for (int i = 0; i < n; ++i) {
        if (!first(form.T(i, i))) continue;
        for (int k = i - 1; k >= count; --k) swap_schur_pair(form, k);
        ++count;
    }
    return count;
}

}  // namespace simest
