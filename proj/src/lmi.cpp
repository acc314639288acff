#include "simest/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "simest/sysnorms.hpp"

namespace simest {

Matrix ObserverLmiProblem::Bbreve() const {
    Matrix B = Matrix::Zero(states(), states() + measurements());
    B.leftCols(states()) = dA;
    return B;
}

Matrix ObserverLmiProblem::Dbreve() const {
    Matrix D = Matrix::Zero(measurements(), states() + measurements());
    D.rightCols(measurements()).setIdentity();
    return D;
}

void ObserverLmiProblem::validate() const {
    require_square(A, "observer LMI (A)");
    const auto n = A.rows();
    if (C.cols() != n || Cz.cols() != n) throw DimensionError("observer LMI: C or C_z width differs from n");
    if (dA.rows() != n || dA.cols() != n) throw DimensionError("observer LMI: dA must be n x n");
    require_finite(A, "observer LMI (A)");
    require_finite(C, "observer LMI (C)");
    require_finite(Cz, "observer LMI (C_z)");
    require_finite(dA, "observer LMI (dA)");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("observer LMI: gamma must be positive");
}

ObserverLmiProblem make_observer_problem(const Matrix& A_l, const Matrix& A_k, const Matrix& C, const Matrix& Cz,
                                         double gamma) {
    ObserverLmiProblem p{A_l, C, Cz, A_k - A_l, gamma};
    p.validate();
    return p;
}

namespace {

// Fixed data of the affine map (Q, Y) -> F with F = F0 + He(U' Z V), Z = [Q, -Y].
struct LmiStructure {
    int    n = 0, r = 0, q = 0, size = 0;
    Matrix F0;
    Matrix V;  // (n + r) x size

    explicit LmiStructure(const ObserverLmiProblem& p) {
        n    = p.states();
        r    = p.measurements();
        q    = p.estimated();
        size = n + (n + r) + q;
        F0   = Matrix::Zero(size, size);
        F0.block(0, 2 * n + r, n, q)          = p.Cz.transpose();
        F0.block(2 * n + r, 0, q, n)          = p.Cz;
        F0.block(n, n, n + r, n + r)          = -p.gamma * Matrix::Identity(n + r, n + r);
        F0.block(2 * n + r, 2 * n + r, q, q)  = -p.gamma * Matrix::Identity(q, q);
        V = Matrix::Zero(n + r, size);
        V.block(0, 0, n, n)         = p.A;
        V.block(0, n, n, n + r)     = p.Bbreve();
        V.block(n, 0, r, n)         = p.C;
        V.block(n, n, r, n + r)     = p.Dbreve();
    }

    Matrix F(const Matrix& Z) const {
        Matrix       out = F0;
        const Matrix ZV  = Z * V;
        out.topRows(n) += ZV;
        out.leftCols(n) += ZV.transpose();
        return out;
    }
};

// Decision vector: upper triangle of Q (row-wise), then Y (row-major), then t.
struct Layout {
    int n, r;
    int nq() const { return n * (n + 1) / 2; }
    int ny() const { return n * r; }
    int total() const { return nq() + ny() + 1; }

    Matrix Q(const Vector& x) const {
        Matrix Q(n, n);
        int    k = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) Q(i, j) = Q(j, i) = x(k++);
        return Q;
    }
    Matrix Y(const Vector& x) const {
        Matrix Y(n, r);
        int    k = nq();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < r; ++j) Y(i, j) = x(k++);
        return Y;
    }
    Matrix Z(const Vector& x) const {
        Matrix Z(n, n + r);
        Z << Q(x), -Y(x);
        return Z;
    }
    Vector pack(const Matrix& Q, const Matrix& Y, double t) const {
        Vector x(total());
        int    k = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) x(k++) = Q(i, j);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < r; ++j) x(k++) = Y(i, j);
        x(k) = t;
        return x;
    }
};

// Each scalar variable touches at most two entries of Z.
struct ZTerm {
    int    a, b;
    double coef;
};

std::vector<std::vector<ZTerm>> z_terms(const Layout& lay) {
    std::vector<std::vector<ZTerm>> out;
    for (int i = 0; i < lay.n; ++i) {
        for (int j = i; j < lay.n; ++j) {
            if (i == j) out.push_back({{i, i, 1.0}});
            else out.push_back({{i, j, 1.0}, {j, i, 1.0}});
        }
    }
    for (int i = 0; i < lay.n; ++i)
        for (int j = 0; j < lay.r; ++j) out.push_back({{i, lay.n + j, -1.0}});
    return out;
}

bool inverse_if_pd(const Matrix& S, Matrix& W, double& logdet) {
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) return false;
    const Matrix L = llt.matrixL();
    logdet         = 2.0 * L.diagonal().array().log().sum();
    if (!std::isfinite(logdet)) return false;
    W = llt.solve(Matrix::Identity(S.rows(), S.cols()));
    return true;
}

double max_eig(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

class BarrierProblem {
   public:
    BarrierProblem(const ObserverLmiProblem& p, const LmiOptions& o)
        : st_(p), lay_{p.states(), p.measurements()}, terms_(z_terms(lay_)) {
        eps_   = o.epsilon_scale * std::max(1.0, p.A.norm());
        bound_ = o.q_bound;
        if (!(bound_ > eps_)) throw ValidationError("observer LMI: q_bound must exceed epsilon");
    }

    const Layout&       layout() const { return lay_; }
    const LmiStructure& structure() const { return st_; }
    int                 barrier_dimension() const { return st_.size + 2 * lay_.n; }
    double              eps() const { return eps_; }
    double              bound() const { return bound_; }

    // Barrier value at x; returns false outside the domain.
    bool value(const Vector& x, double& phi) const {
        Matrix W;
        double l1, l2, l3;
        const Matrix Q = lay_.Q(x);
        const int    n = lay_.n;
        if (!inverse_if_pd(x(lay_.total() - 1) * Matrix::Identity(st_.size, st_.size) - st_.F(lay_.Z(x)), W, l1)) return false;
        if (!inverse_if_pd(Q - eps_ * Matrix::Identity(n, n), W, l2)) return false;
        if (!inverse_if_pd(bound_ * Matrix::Identity(n, n) - Q, W, l3)) return false;
        phi = -(l1 + l2 + l3);
        return true;
    }

    // Gradient and Hessian of the barrier (without the linear tau*t term).
    bool derivatives(const Vector& x, Vector& g, Matrix& H) const {
        const int    n = lay_.n, r = lay_.r, m = lay_.total();
        const Matrix Q = lay_.Q(x);
        Matrix       W, Wq, Wr;
        double       ld;
        const double t = x(m - 1);
        if (!inverse_if_pd(t * Matrix::Identity(st_.size, st_.size) - st_.F(lay_.Z(x)), W, ld)) return false;
        if (!inverse_if_pd(Q - eps_ * Matrix::Identity(n, n), Wq, ld)) return false;
        if (!inverse_if_pd(bound_ * Matrix::Identity(n, n) - Q, Wr, ld)) return false;

        // U = [I_n 0 0] selects the leading n rows/cols of W.
        const Matrix VW  = st_.V * W;
        const Matrix K   = VW.leftCols(n);                      // V W U'
        const Matrix P   = VW * st_.V.transpose();              // V W V'
        const Matrix S   = W.topLeftCorner(n, n);               // U W U'
        const Matrix W2  = W * W;
        const Matrix K2  = (st_.V * W2).leftCols(n);            // V W^2 U'

        // Per Z-entry gradient and t cross terms.
        const int nz = n * (n + r);
        Vector    gz(nz), hzt(nz);
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n + r; ++b) {
                double gv = 2.0 * K(b, a);
                if (b < n) gv += -Wq(b, a) + Wr(b, a);
                gz(a * (n + r) + b)  = gv;
                hzt(a * (n + r) + b) = -2.0 * K2(b, a);
            }
        }
        auto hzz = [&](int a, int b, int c, int d) {
            double h = 2.0 * (K(b, c) * K(d, a) + P(b, d) * S(c, a));
            if (b < n && d < n) h += Wq(b, c) * Wq(d, a) + Wr(b, c) * Wr(d, a);
            return h;
        };

        g.setZero(m);
        H.setZero(m, m);
        for (int k = 0; k < m - 1; ++k) {
            for (const auto& tk : terms_[static_cast<std::size_t>(k)]) {
                g(k) += tk.coef * gz(tk.a * (n + r) + tk.b);
                H(k, m - 1) += tk.coef * hzt(tk.a * (n + r) + tk.b);
            }
            H(m - 1, k) = H(k, m - 1);
            for (int l = k; l < m - 1; ++l) {
                double h = 0.0;
                for (const auto& tk : terms_[static_cast<std::size_t>(k)])
                    for (const auto& tl : terms_[static_cast<std::size_t>(l)]) h += tk.coef * tl.coef * hzz(tk.a, tk.b, tl.a, tl.b);
                H(k, l) = H(l, k) = h;
            }
        }
        g(m - 1)        = -W.trace();
        H(m - 1, m - 1) = W2.trace();
        return true;
    }

   private:
    LmiStructure                    st_;
    Layout                          lay_;
    std::vector<std::vector<ZTerm>> terms_;
    double                          eps_   = 0.0;
    double                          bound_ = 0.0;
};

// Solves H dx = -g, adding a growing ridge when H is numerically singular.
bool newton_direction(const Matrix& H, const Vector& g, Vector& dx) {
    const double scale = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    for (double ridge : {0.0, 1e-14, 1e-12, 1e-10}) {
        Eigen::LDLT<Matrix> ldlt(H + ridge * scale * Matrix::Identity(H.rows(), H.cols()));
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) continue;
        dx = ldlt.solve(-g);
        if (dx.allFinite()) return true;
    }
    return false;
}

}  // namespace

Matrix observer_lmi_block(const ObserverLmiProblem& prob, const Matrix& Q, const Matrix& Y) {
    prob.validate();
    const int n = prob.states(), r = prob.measurements(), q = prob.estimated();
    if (Q.rows() != n || Q.cols() != n || Y.rows() != n || Y.cols() != r) throw DimensionError("observer_lmi_block: Q or Y has wrong shape");
    const Matrix B = prob.Bbreve(), D = prob.Dbreve();
    const int    size = 2 * n + r + q;
    Matrix       F    = Matrix::Zero(size, size);
    const Matrix QB   = Q * B - Y * D;
    F.block(0, 0, n, n)                  = Q * prob.A + prob.A.transpose() * Q - Y * prob.C - prob.C.transpose() * Y.transpose();
    F.block(0, n, n, n + r)              = QB;
    F.block(n, 0, n + r, n)              = QB.transpose();
    F.block(0, 2 * n + r, n, q)          = prob.Cz.transpose();
    F.block(2 * n + r, 0, q, n)          = prob.Cz;
    F.block(n, n, n + r, n + r)          = -prob.gamma * Matrix::Identity(n + r, n + r);
    F.block(2 * n + r, 2 * n + r, q, q)  = -prob.gamma * Matrix::Identity(q, q);
    return F;
}

LmiOutcome solve_observer_lmi(const ObserverLmiProblem& prob, const LmiOptions& opts) {
    prob.validate();
    const BarrierProblem bp(prob, opts);
    const Layout&        lay = bp.layout();
    const int            m   = lay.total();
    const int            n   = lay.n;

    // Start from Q at the geometric middle of its box, Y = 0 and t above lambda_max.
    const double q0 = std::sqrt(bp.eps() * bp.bound());
    Matrix       Q0 = q0 * Matrix::Identity(n, n);
    Matrix       Y0 = Matrix::Zero(n, lay.r);
    const double t0 = max_eig(bp.structure().F(lay.Z(lay.pack(Q0, Y0, 0.0)))) + 1.0;
    Vector       x  = lay.pack(Q0, Y0, t0);

    const double dim = bp.barrier_dimension();
    double       tau = 1.0 / std::max(1.0, std::abs(t0));
    LmiOutcome   out;
    out.best_t  = std::numeric_limits<double>::infinity();
    out.lower_t = -std::numeric_limits<double>::infinity();
    Vector g;
    Matrix H;

    bool stalled = false;
    for (int outer = 0; outer < opts.max_outer && !stalled; ++outer) {
        out.outer_steps = outer + 1;
        for (int it = 0; it < opts.max_newton; ++it) {
            if (!bp.derivatives(x, g, H)) throw NumericError("observer LMI: iterate left the barrier domain");
            g(m - 1) += tau;
            Vector dx;
            if (!newton_direction(H, g, dx)) {
                // Late in the path the Hessian loses rank numerically; keep the current interior point.
                if (outer == 0) throw NumericError("observer LMI: singular Newton system");
                stalled = true;
                break;
            }
            const double decrement = -g.dot(dx);
            ++out.newton_steps;
            if (decrement / 2.0 < 1e-9) break;

            double phi0;
            bp.value(x, phi0);
            phi0 += tau * x(m - 1);
            double s = decrement > 0.5 ? 1.0 / (1.0 + std::sqrt(decrement)) : 1.0;
            bool   moved = false;
            for (int ls = 0; ls < 60; ++ls, s *= 0.5) {
                const Vector xn = x + s * dx;
                double       phi;
                if (!bp.value(xn, phi)) continue;
                phi += tau * xn(m - 1);
                if (phi <= phi0 - 0.01 * s * decrement) {
                    x     = xn;
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
        }
        const double tmax = max_eig(bp.structure().F(lay.Z(x)));
        out.best_t        = std::min(out.best_t, tmax);
        out.lower_t       = std::max(out.lower_t, x(m - 1) - dim / tau);
        if (out.lower_t > 0.0) break;                                        // certified infeasible
        if (opts.stop_margin > 0.0 && out.best_t < -opts.stop_margin) break;  // good enough
        if (dim / tau < opts.gap_tol) break;
        tau *= opts.barrier_growth;
    }

    const Matrix Q = lay.Q(x);
    const Matrix Y = lay.Y(x);
    const double tmax = max_eig(observer_lmi_block(prob, Q, Y));
    out.best_t        = std::min(out.best_t, tmax);
    if (tmax < 0.0) {
        out.feasible               = true;
        out.certificate.Q          = Q;
        out.certificate.Y          = Y;
        out.certificate.L          = Q.ldlt().solve(Y);
        out.certificate.gamma      = prob.gamma;
        out.certificate.margin     = -tmax;
    }
    return out;
}

CertificateCheck verify_certificate(const LmiCertificate& cert, const ObserverLmiProblem& prob) {
    CertificateCheck   chk;
    std::ostringstream why;
    const int          n = prob.states(), r = prob.measurements();
    if (cert.Q.rows() != n || cert.Q.cols() != n || cert.Y.rows() != n || cert.Y.cols() != r) {
        chk.diagnostics = "certificate has wrong shape";
        return chk;
    }
    if (!cert.Q.allFinite() || !cert.Y.allFinite()) {
        chk.diagnostics = "certificate has non-finite entries";
        return chk;
    }
    ObserverLmiProblem p = prob;
    p.gamma              = cert.gamma;
    const Matrix Qs      = 0.5 * (cert.Q + cert.Q.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eq(Qs, Eigen::EigenvaluesOnly);
    chk.min_eig_q = eq.eigenvalues().minCoeff();
    const Matrix F = observer_lmi_block(p, Qs, cert.Y);
    Eigen::SelfAdjointEigenSolver<Matrix> ef(0.5 * (F + F.transpose()), Eigen::EigenvaluesOnly);
    chk.margin = -ef.eigenvalues().maxCoeff();
    if (!(chk.min_eig_q > 0.0)) why << "Q is not positive definite; ";
    if (!(chk.margin > 0.0)) why << "LMI block is not negative definite (max eig " << -chk.margin << "); ";

    const Matrix L = Qs.fullPivLu().solve(cert.Y);
    chk.closed_loop_stable = L.allFinite() && is_hurwitz(p.A - L * p.C);
    if (!chk.closed_loop_stable) {
        why << "A - L C is not Hurwitz; ";
        chk.achieved_norm = std::numeric_limits<double>::infinity();
    } else {
        const auto es     = build_error_system(p.A + p.dA, p.A, p.C, p.Cz, L);
        chk.achieved_norm = hinf_norm(es.model).value;
        if (!(chk.achieved_norm < cert.gamma)) why << "error norm " << chk.achieved_norm << " is not below gamma; ";
    }
    chk.diagnostics = why.str();
    chk.verified    = chk.diagnostics.empty();
    return chk;
}

FilterDesign synth_hinf_filter(const Matrix& A, const Matrix& C, const Matrix& Cz, const FilterOptions& opts) {
    const Matrix zero = Matrix::Zero(A.rows(), A.cols());
    auto         attempt = [&](double g) {
        ObserverLmiProblem p{A, C, Cz, zero, g};
        p.validate();
        return solve_observer_lmi(p, opts.lmi);
    };
    if (!is_detectable(A, C)) throw SynthesisError("synth_hinf_filter: (A, C) is not detectable");

    double     hi = 1.0;
    LmiOutcome best = attempt(hi);
    while (!best.feasible) {
        hi *= 10.0;
        if (hi > opts.gamma_cap) throw SynthesisError("synth_hinf_filter: no feasible gamma below the cap");
        best = attempt(hi);
    }
    double lo = hi / 10.0;
    while (true) {
        if (lo < opts.gamma_floor) {
            lo = 0.0;
            break;
        }
        auto o = attempt(lo);
        if (!o.feasible) break;
        hi   = lo;
        best = o;
        lo /= 10.0;
    }
    while (lo > 0.0 && hi / lo > 1.0 + opts.rel_tol) {
        const double mid = std::sqrt(lo * hi);
        auto         o   = attempt(mid);
        if (o.feasible) {
            hi   = mid;
            best = o;
        } else {
            lo = mid;
        }
    }
    FilterDesign d;
    d.L           = best.certificate.L;
    d.gamma       = hi;
    d.certificate = best.certificate;
    d.achieved_norm = hinf_norm(build_error_system(A, A, C, Cz, d.L).model).value;
    return d;
}

}  // namespace simest
