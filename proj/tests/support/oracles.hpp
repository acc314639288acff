#pragma once

// Independent reference computations used by the test suites. These avoid the
// library code paths they check: no Schur/Hamiltonian machinery from simest.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

using Matrix  = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

inline Matrix random_matrix(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Matrix                           M(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) M(i, j) = nd(rng);
    return M;
}

/// Random Hurwitz matrix: random matrix shifted left past its Gershgorin discs.
inline Matrix random_hurwitz(std::mt19937_64& rng, int n, double margin = 0.1) {
    Matrix A   = random_matrix(rng, n, n);
    double rad = 0.0;
    for (int i = 0; i < n; ++i) rad = std::max(rad, A.row(i).cwiseAbs().sum());
    std::uniform_real_distribution<double> ud(0.0, 0.5);
    A.diagonal().array() -= rad * (1.0 + ud(rng)) + margin;
    // Scramble so the matrix is not diagonally dominant in the original basis.
    Matrix T = random_matrix(rng, n, n) + 2.0 * Matrix::Identity(n, n);
    return T * A * T.inverse();
}

/// Characteristic polynomial coefficients (monic, highest first) by Faddeev-LeVerrier.
inline std::vector<long double> charpoly(const Matrix& A) {
    const int n = static_cast<int>(A.rows());
    using LM    = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    LM                       Al = A.cast<long double>();
    LM                       M  = LM::Zero(n, n);
    std::vector<long double> c(n + 1, 0.0L);
    c[0] = 1.0L;
    for (int k = 1; k <= n; ++k) {
        M = Al * M + c[k - 1] * LM::Identity(n, n);
        c[k] = -(Al * M).trace() / static_cast<long double>(k);
    }
    return c;
}

/// Roots of a monic polynomial by Aberth-Ehrlich iteration with Newton polishing.
inline std::vector<Complex> poly_roots(const std::vector<long double>& c) {
    using LC    = std::complex<long double>;
    const int n = static_cast<int>(c.size()) - 1;
    auto      eval = [&](LC z, LC& dp) {
        LC p = c[0];
        dp   = 0;
        for (int k = 1; k <= n; ++k) {
            dp = dp * z + p;
            p  = p * z + c[k];
        }
        return p;
    };
    long double bound = 0;
    for (int k = 1; k <= n; ++k) bound = std::max(bound, std::abs(c[k]));
    bound += 1;
    std::vector<LC> z(n);
    for (int k = 0; k < n; ++k) z[k] = std::polar(bound * 0.5L, 2.0L * 3.14159265358979323846L * (k + 0.25L) / n);
    for (int it = 0; it < 2000; ++it) {
        long double change = 0;
        for (int i = 0; i < n; ++i) {
            LC dp;
            LC p     = eval(z[i], dp);
            LC ratio = p / dp;
            LC s     = 0;
            for (int j = 0; j < n; ++j)
                if (j != i) s += 1.0L / (z[i] - z[j]);
            LC w = ratio / (1.0L - ratio * s);
            z[i] -= w;
            change = std::max(change, std::abs(w) / (1 + std::abs(z[i])));
        }
        if (change < 1e-17L) break;
    }
    std::vector<Complex> out;
    for (auto& r : z) out.emplace_back(static_cast<double>(r.real()), static_cast<double>(r.imag()));
    return out;
}

/// Greedy matching distance between two multisets of complex numbers.
inline double match_distance(std::vector<Complex> a, std::vector<Complex> b) {
    if (a.size() != b.size()) return INFINITY;
    double worst = 0.0;
    for (const auto& x : a) {
        auto   best = b.begin();
        double bd   = INFINITY;
        for (auto it = b.begin(); it != b.end(); ++it) {
            if (std::abs(*it - x) < bd) {
                bd   = std::abs(*it - x);
                best = it;
            }
        }
        worst = std::max(worst, bd);
        b.erase(best);
    }
    return worst;
}

/// Lyapunov solution via the Kronecker-vectorized linear system.
inline Matrix lyapunov_kron(const Matrix& A, const Matrix& Q) {
    const int n = static_cast<int>(A.rows());
    Matrix    I = Matrix::Identity(n, n);
    Matrix    K = Matrix::Zero(n * n, n * n);
    const Matrix At = A.transpose();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            K.block(i * n, j * n, n, n) += I(i, j) * At;
            K.block(i * n, j * n, n, n) += At(i, j) * I;
        }
    Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
    Eigen::VectorXd x = K.fullPivLu().solve(-q);
    return Eigen::Map<Matrix>(x.data(), n, n);
}

/// C (jw I - A)^{-1} B + D through a dense full-pivot LU on the resolvent.
inline CMatrix response(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D, double w) {
    const int n = static_cast<int>(A.rows());
    CMatrix   out = D.cast<Complex>();
    if (n == 0) return out;
    CMatrix R = Complex(0.0, w) * CMatrix::Identity(n, n) - A.cast<Complex>();
    out += C.cast<Complex>() * R.fullPivLu().solve(B.cast<Complex>());
    return out;
}

/// Largest singular value as sqrt of the largest eigenvalue of M^H M.
inline double smax(const CMatrix& M) {
    if (M.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(M.adjoint() * M);
    return std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
}

/// Dense log grid sup of sigma_max, with golden-section refinement around the best samples.
inline double grid_hinf(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D, int points = 10000,
                        double lo = 1e-4, double hi = 1e4) {
    auto f = [&](double w) { return smax(response(A, B, C, D, w)); };
    std::vector<double> ws(points);
    for (int k = 0; k < points; ++k) ws[k] = lo * std::pow(hi / lo, static_cast<double>(k) / (points - 1));
    std::vector<double> vals(points);
    for (int k = 0; k < points; ++k) vals[k] = f(ws[k]);
    double best = std::max(f(0.0), smax(D.cast<Complex>()));
    // Refine around every local maximum of the sampled curve.
    for (int k = 0; k < points; ++k) {
        best = std::max(best, vals[k]);
        const bool left  = k == 0 || vals[k] >= vals[k - 1];
        const bool right = k == points - 1 || vals[k] >= vals[k + 1];
        if (!(left && right)) continue;
        double a = k == 0 ? 0.0 : ws[k - 1], b = k == points - 1 ? ws[k] * 2 : ws[k + 1];
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = b - g * (b - a), x2 = a + g * (b - a);
        double f1 = f(x1), f2 = f(x2);
        for (int it = 0; it < 80; ++it) {
            if (f1 > f2) {
                b  = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = f(x1);
            } else {
                a  = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = f(x2);
            }
        }
        best = std::max({best, f1, f2});
    }
    return best;
}

}  // namespace oracle
