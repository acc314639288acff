#include "simest/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace simest {

void require_finite(const Matrix& M, std::string_view what) {
    if (!M.allFinite()) throw ValidationError(std::string(what) + ": matrix has non-finite entries");
}

void require_square(const Matrix& M, std::string_view what) {
    if (M.rows() != M.cols()) {
        throw DimensionError(std::string(what) + ": expected a square matrix, got " +
                             std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
    }
}

SchurForm real_schur(const Matrix& A) {
    require_square(A, "real_schur");
    require_finite(A, "real_schur");
    SchurForm out;
    const auto n = A.rows();
    if (n == 0) {
        out.U = Matrix(0, 0);
        out.T = Matrix(0, 0);
        return out;
    }
    Eigen::RealSchur<Matrix> schur(A, true);
    if (schur.info() != Eigen::Success) throw NumericError("real_schur: QR iteration did not converge");
    out.U = schur.matrixU();
    out.T = schur.matrixT();
    for (Eigen::Index i = 0; i < n;) {
        if (i + 1 < n && out.T(i + 1, i) != 0.0) {
            const double a = out.T(i, i), b = out.T(i, i + 1);
            const double c = out.T(i + 1, i), d = out.T(i + 1, i + 1);
            const double re   = 0.5 * (a + d);
            const double disc = 0.25 * (a - d) * (a - d) + b * c;
            const double im   = std::sqrt(std::max(-disc, 0.0));
            out.eigenvalues.emplace_back(re, im);
            out.eigenvalues.emplace_back(re, -im);
            i += 2;
        } else {
            out.eigenvalues.emplace_back(out.T(i, i), 0.0);
            i += 1;
        }
    }
    return out;
}

Matrix balance(const Matrix& A, Vector* scaling) {
    require_square(A, "balance");
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    Matrix     B = A;
    const auto n = B.rows();
    Vector     d = Vector::Ones(n);
    bool       done = false;
    for (int sweep = 0; !done && sweep < 100; ++sweep) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = B.col(i).cwiseAbs().sum() - std::abs(B(i, i));
            double r = B.row(i).cwiseAbs().sum() - std::abs(B(i, i));
            if (c == 0.0 || r == 0.0) continue;
            const double s = c + r;
            double       f = 1.0;
            double       g = r / radix;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                d(i) *= f;
                B.row(i) /= f;
                B.col(i) *= f;
            }
        }
    }
    if (scaling) *scaling = d;
    return B;
}

Spectrum eigenvalues(const Matrix& A) {
    require_square(A, "eigenvalues");
    require_finite(A, "eigenvalues");
    if (A.rows() == 0) return {};
    return real_schur(balance(A)).eigenvalues;
}

double spectral_abscissa(const Matrix& A) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& l : eigenvalues(A)) best = std::max(best, l.real());
    return best;
}

bool is_hurwitz(const Matrix& A, double margin) { return A.rows() == 0 || spectral_abscissa(A) < -margin; }

ComplexSchurForm complex_schur(const Matrix& A) {
    require_square(A, "complex_schur");
    ComplexSchurForm out;
    if (A.rows() == 0) {
        out.U = CMatrix(0, 0);
        out.T = CMatrix(0, 0);
        return out;
    }
    Eigen::ComplexSchur<CMatrix> schur(A.cast<Complex>(), true);
    if (schur.info() != Eigen::Success) throw NumericError("complex_schur: QR iteration did not converge");
    out.U = schur.matrixU();
    out.T = schur.matrixT();
    return out;
}

void swap_schur_pair(ComplexSchurForm& form, int k) {
    CMatrix&      T = form.T;
    const Complex a = T(k, k), b = T(k + 1, k + 1), c = T(k, k + 1);
    // First column of the rotation spans the eigenvector of b in the 2x2 block.
    Complex      v1 = c, v2 = b - a;
    const double nv = std::sqrt(std::norm(v1) + std::norm(v2));
    if (nv == 0.0) return;
    v1 /= nv;
    v2 /= nv;
    Eigen::Matrix2cd Z;
    Z << v1, -std::conj(v2), v2, std::conj(v1);
    T.middleCols(k, 2) = T.middleCols(k, 2) * Z;
    T.middleRows(k, 2) = Z.adjoint() * T.middleRows(k, 2);
    form.U.middleCols(k, 2) = form.U.middleCols(k, 2) * Z;
    T(k + 1, k)             = Complex(0.0, 0.0);
    T(k, k)                 = b;
    T(k + 1, k + 1)         = a;
}

Matrix solve_sylvester(const Matrix& A, const Matrix& B, const Matrix& C) {
    require_square(A, "solve_sylvester(A)");
    require_square(B, "solve_sylvester(B)");
    if (C.rows() != A.rows() || C.cols() != B.rows()) throw DimensionError("solve_sylvester: C has wrong shape");
    const int m = static_cast<int>(A.rows()), n = static_cast<int>(B.rows());
    if (m == 0 || n == 0) return Matrix::Zero(m, n);
    const auto sa = complex_schur(A);
    const auto sb = complex_schur(B);
    const CMatrix& S = sa.T;
    const CMatrix& T = sb.T;
    CMatrix        F = sa.U.adjoint() * C.cast<Complex>() * sb.U;
    CMatrix        Y = CMatrix::Zero(m, n);
    // S Y + Y T = F with S, T upper triangular: rows bottom-up, columns left-right.
    for (int i = m - 1; i >= 0; --i) {
        for (int j = 0; j < n; ++j) {
            Complex acc = F(i, j);
            for (int k = i + 1; k < m; ++k) acc -= S(i, k) * Y(k, j);
            for (int k = 0; k < j; ++k) acc -= Y(i, k) * T(k, j);
            const Complex den = S(i, i) + T(j, j);
            if (std::abs(den) == 0.0) throw SolvabilityError("solve_sylvester: A and -B share an eigenvalue");
            Y(i, j) = acc / den;
        }
    }
    return (sa.U * Y * sb.U.adjoint()).real();
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& Q, const NumericTolerances& tol) {
    require_square(A, "solve_lyapunov(A)");
    require_square(Q, "solve_lyapunov(Q)");
    require_finite(A, "solve_lyapunov(A)");
    require_finite(Q, "solve_lyapunov(Q)");
    if (A.rows() != Q.rows()) throw DimensionError("solve_lyapunov: A and Q differ in size");
    if (!is_hurwitz(A)) throw SolvabilityError("solve_lyapunov: A is not Hurwitz");
    Matrix       X   = solve_sylvester(A.transpose(), A, -Q);
    X                = (0.5 * (X + X.transpose())).eval();
    const double res = (A.transpose() * X + X * A + Q).norm();
    const double ref = A.norm() * X.norm() + Q.norm();
    if (res > tol.lyapunov_residual * std::max(ref, 1e-300)) {
        throw NumericError("solve_lyapunov: residual check failed");
    }
    return X;
}

Matrix care_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& X) {
    const Matrix G = B * R.ldlt().solve(B.transpose());
    return A.transpose() * X + X * A - X * G * X + Q;
}

Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                  const NumericTolerances& tol) {
    require_square(A, "solve_care(A)");
    require_square(Q, "solve_care(Q)");
    require_square(R, "solve_care(R)");
    require_finite(A, "solve_care(A)");
    require_finite(B, "solve_care(B)");
    require_finite(Q, "solve_care(Q)");
    require_finite(R, "solve_care(R)");
    const auto n = A.rows();
    if (B.rows() != n || Q.rows() != n || R.rows() != B.cols()) throw DimensionError("solve_care: inconsistent shapes");
    if (n == 0) return Matrix(0, 0);
    Eigen::LLT<Matrix> rfac(R);
    if (rfac.info() != Eigen::Success) throw ValidationError("solve_care: R is not positive definite");
    const Matrix G = B * rfac.solve(B.transpose());

    Matrix H(2 * n, 2 * n);
    H << A, -G, -Q, -A.transpose();
    const double hnorm = std::max(H.norm(), 1e-300);

    auto form = complex_schur(H);
    for (int i = 0; i < form.T.rows(); ++i) {
        if (std::abs(form.T(i, i).real()) < tol.imaginary_axis * hnorm) {
            throw BoundaryError("solve_care: Hamiltonian has eigenvalues on the imaginary axis");
        }
    }
    const int stable = reorder_schur(form, [](const Complex& l) { return l.real() < 0.0; });
    if (stable != n) throw SolvabilityError("solve_care: stable invariant subspace has wrong dimension");
    const CMatrix U11 = form.U.topLeftCorner(n, n);
    const CMatrix U21 = form.U.bottomLeftCorner(n, n);
    Eigen::PartialPivLU<CMatrix> lu(U11.transpose());
    const double rc = lu.rcond();
    if (!(rc > tol.singular_rcond)) throw SolvabilityError("solve_care: pair is not stabilizable");
    CMatrix Xc = lu.solve(U21.transpose()).transpose();
    Matrix  X  = Xc.real();
    X          = (0.5 * (X + X.transpose())).eval();

    if (!is_hurwitz(A - G * X)) throw SolvabilityError("solve_care: solution is not stabilizing");
    const double res = care_residual(A, B, Q, R, X).norm();
    const double ref = 2.0 * A.norm() * X.norm() + G.norm() * X.norm() * X.norm() + Q.norm();
    if (!(res <= tol.care_residual * std::max(ref, 1.0))) throw NumericError("solve_care: residual check failed");
    return X;
}

Vector singular_values(const Matrix& M) {
    require_finite(M, "singular_values");
    if (M.size() == 0) return Vector(0);
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues();
}

double sigma_max(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

double sigma_max(const CMatrix& M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMatrix> svd(M);
    return svd.singularValues()(0);
}

double norm2(const Matrix& M) { return sigma_max(M); }

}  // namespace simest
