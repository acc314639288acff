#include "simest/sim.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "simest/kernels.hpp"

namespace simest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Target {
    double re;
    double im;  // >= 0; a positive value stands for the pair re +- j im
};

std::vector<Target> placement_targets(const Matrix& A, const FeedbackOptions& o) {
    const Spectrum      lam = eigenvalues(A);
    std::vector<Target> out;
    const double        zeta = o.min_damping;
    for (const auto& l : lam) {
        if (l.imag() < 0.0) continue;
        double re = -std::max(std::abs(l.real()), o.min_magnitude);
        double im = std::abs(l.imag()) < 1e-12 ? 0.0 : std::abs(l.imag());
        if (im > 0.0 && -re / std::hypot(re, im) < zeta) re = -zeta / std::sqrt(1.0 - zeta * zeta) * im;
        out.push_back({o.scale * re, o.scale * im});
    }
    // Keep targets distinct from each other and from the open-loop spectrum.
    auto clash = [&](const Target& t, std::size_t upto) {
        const Complex mu(t.re, t.im);
        const double  tol = 1e-6 * std::max(1.0, std::abs(mu));
        for (std::size_t k = 0; k < upto; ++k) {
            if (std::abs(mu - Complex(out[k].re, out[k].im)) < 1e-3 * std::max(1.0, std::abs(mu))) return true;
        }
        for (const auto& l : lam) {
            if (std::abs(mu - Complex(l.real(), std::abs(l.imag()))) < tol) return true;
        }
        return false;
    };
    for (std::size_t k = 0; k < out.size(); ++k) {
        for (int guard = 0; guard < 100 && clash(out[k], k); ++guard) out[k].re *= 1.07;
    }
    return out;
}

Matrix real_block_diagonal(const std::vector<Target>& targets, int n) {
    Matrix L = Matrix::Zero(n, n);
    int    i = 0;
    for (const auto& t : targets) {
        if (t.im == 0.0) {
            L(i, i) = t.re;
            i += 1;
        } else {
            L(i, i)         = t.re;
            L(i + 1, i + 1) = t.re;
            L(i, i + 1)     = t.im;
            L(i + 1, i)     = -t.im;
            i += 2;
        }
    }
    if (i != n) throw SynthesisError("design_state_feedback: target count does not match the state dimension");
    return L;
}

Matrix lqr_gain(const Matrix& A, const Matrix& B) {
    const auto   n = A.rows(), m = B.cols();
    const Matrix X = solve_care(A, B, Matrix::Identity(n, n), Matrix::Identity(m, m));
    return B.transpose() * X;
}

// A signal written as X * state + W * exogenous.
struct Affine {
    Matrix X;
    Matrix W;
};

Affine operator*(const Matrix& M, const Affine& a) { return {M * a.X, M * a.W}; }
Affine operator+(const Affine& a, const Affine& b) { return {a.X + b.X, a.W + b.W}; }
Affine operator-(const Affine& a, const Affine& b) { return {a.X - b.X, a.W - b.W}; }

Affine stack(const std::vector<Affine>& parts, int nx, int nw) {
    int rows = 0;
    for (const auto& p : parts) rows += static_cast<int>(p.X.rows());
    Affine out{Matrix::Zero(rows, nx), Matrix::Zero(rows, nw)};
    int    r = 0;
    for (const auto& p : parts) {
        out.X.middleRows(r, p.X.rows()) = p.X;
        out.W.middleRows(r, p.W.rows()) = p.W;
        r += static_cast<int>(p.X.rows());
    }
    return out;
}

// State layout of the interconnection.
struct Layout {
    int x = 0, w1 = 0, w2 = 0, obs = 0, in = 0, ot = 0, total = 0;
    int n = 0, m = 0, r = 0, q = 0, n1 = 0, n2 = 0, no = 0, nin = 0, not_ = 0;
};

struct Interconnection {
    Layout lay;
    Matrix M, E;
    Affine z, z_hat, u, y;
    int    nw = 0;
};

Interconnection build(const SimulationScenario& sc, const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& Cz) {
    const ObserverDesign& ob = sc.observer;
    Layout                lay;
    lay.n  = static_cast<int>(A.rows());
    lay.m  = static_cast<int>(B.cols());
    lay.r  = static_cast<int>(C.rows());
    lay.q  = static_cast<int>(Cz.rows());
    if (A.cols() != lay.n || B.rows() != lay.n || C.cols() != lay.n || Cz.cols() != lay.n) {
        throw DimensionError("simulate: plant matrices have inconsistent shapes");
    }
    if (ob.A.rows() != ob.A.cols() || ob.B.rows() != ob.A.rows() || ob.C.cols() != ob.A.rows() ||
        ob.Cz.cols() != ob.A.rows() || ob.L.rows() != ob.A.rows() || ob.L.cols() != lay.r || ob.B.cols() != lay.m ||
        ob.C.rows() != lay.r || ob.Cz.rows() != lay.q) {
        throw DimensionError("simulate: observer does not match the plant's input/output widths");
    }
    const bool gr = sc.kind == EstimatorKind::grmers;
    lay.n1        = ob.pre.size();
    lay.n2        = ob.post.size();
    lay.no        = static_cast<int>(ob.A.rows());
    lay.nin       = gr ? sc.w_in.size() : 0;
    lay.not_      = gr ? sc.w_ot.size() : 0;
    if (lay.n1 != 0 && lay.n1 != lay.m) throw DimensionError("simulate: observer pre-compensator width differs from m");
    if (lay.n2 != 0 && lay.n2 != lay.r) throw DimensionError("simulate: observer post-compensator width differs from r");
    if (gr && (lay.nin != lay.m || lay.not_ != lay.r)) throw DimensionError("simulate: GR compensators have wrong widths");
    lay.x     = 0;
    lay.w1    = lay.x + lay.n;
    lay.w2    = lay.w1 + lay.n1;
    lay.obs   = lay.w2 + lay.n2;
    lay.in    = lay.obs + lay.no;
    lay.ot    = lay.in + lay.nin;
    lay.total = lay.ot + lay.not_;
    const int N  = lay.total;
    const int nw = lay.m + lay.r;

    auto state = [&](int off, int k) {
        Affine a{Matrix::Zero(k, N), Matrix::Zero(k, nw)};
        a.X.middleCols(off, k).setIdentity();
        return a;
    };
    Affine ref{Matrix::Zero(lay.m, N), Matrix::Zero(lay.m, nw)};
    ref.W.leftCols(lay.m).setIdentity();
    Affine noise{Matrix::Zero(lay.r, N), Matrix::Zero(lay.r, nw)};
    noise.W.rightCols(lay.r).setIdentity();

    const Affine x     = state(lay.x, lay.n);
    const Affine xo    = state(lay.obs, lay.no);
    const Affine y     = C * x + noise;
    const Affine z_hat = ob.Cz * xo;

    Affine x_hat;
    Matrix stackC(lay.r + lay.q, lay.n);
    stackC << C, Cz;
    if (lay.r + lay.q == lay.n && Eigen::FullPivLU<Matrix>(stackC).isInvertible()) {
        const Matrix P = stackC.inverse();
        x_hat          = P.leftCols(lay.r) * y + P.rightCols(lay.q) * z_hat;
    } else {
        if (lay.no != lay.n1 + lay.n2 + lay.n && lay.no != lay.n) {
            throw DimensionError("simulate: cannot recover plant states from the observer");
        }
        x_hat = state(lay.obs + (lay.no == lay.n ? 0 : lay.n2), lay.n);
    }

    Affine fb = x_hat;
    if (gr) fb = stack({state(lay.ot, lay.not_), x_hat, state(lay.in, lay.nin)}, N, nw);
    if (sc.K.rows() != lay.m || sc.K.cols() != fb.X.rows()) {
        throw DimensionError("simulate: feedback gain is " + std::to_string(sc.K.rows()) + "x" +
                             std::to_string(sc.K.cols()) + ", expected " + std::to_string(lay.m) + "x" +
                             std::to_string(fb.X.rows()));
    }
    const Affine u_c = ref - sc.K * fb;

    Affine u_p = u_c;
    Affine d_in{Matrix(0, N), Matrix(0, nw)};
    if (gr) {
        const auto Win = realize_bank(sc.w_in);
        const auto xin = state(lay.in, lay.nin);
        u_p            = Win.C() * xin + Win.D() * u_c;
        d_in           = Win.A() * xin + Win.B() * u_c;
    }
    Affine d_ot{Matrix(0, N), Matrix(0, nw)};
    if (gr) {
        const auto Wot = realize_bank(sc.w_ot);
        d_ot           = Wot.A() * state(lay.ot, lay.not_) + Wot.B() * y;
    }

    Affine u_chk = u_p;
    Affine d_w1{Matrix(0, N), Matrix(0, nw)};
    if (lay.n1 > 0) {
        const auto Wi = invert_bank(ob.pre);
        const auto w1 = state(lay.w1, lay.n1);
        u_chk         = Wi.C() * w1 + Wi.D() * u_p;
        d_w1          = Wi.A() * w1 + Wi.B() * u_p;
    }
    Affine y_chk = y;
    Affine d_w2{Matrix(0, N), Matrix(0, nw)};
    if (lay.n2 > 0) {
        const auto Wo = realize_bank(ob.post);
        const auto w2 = state(lay.w2, lay.n2);
        y_chk         = Wo.C() * w2 + Wo.D() * y;
        d_w2          = Wo.A() * w2 + Wo.B() * y;
    }

    const Affine d_x   = A * x + B * u_p;
    const Affine d_obs = ob.A * xo + ob.B * u_chk + ob.L * (y_chk - ob.C * xo);
    const Affine dyn   = stack({d_x, d_w1, d_w2, d_obs, d_in, d_ot}, N, nw);

    Interconnection ic;
    ic.lay   = lay;
    ic.M     = dyn.X;
    ic.E     = dyn.W;
    ic.z     = Cz * x;
    ic.z_hat = z_hat;
    ic.u     = u_p;
    ic.y     = y;
    ic.nw    = nw;
    return ic;
}

}  // namespace

Matrix design_state_feedback(const Matrix& A, const Matrix& B, const FeedbackOptions& opts) {
    require_square(A, "design_state_feedback(A)");
    require_finite(A, "design_state_feedback(A)");
    require_finite(B, "design_state_feedback(B)");
    if (B.rows() != A.rows()) throw DimensionError("design_state_feedback: B has wrong row count");
    const int n = static_cast<int>(A.rows()), m = static_cast<int>(B.cols());
    if (n == 0) return Matrix::Zero(m, 0);
    if (!is_stabilizable(A, B)) throw SynthesisError("design_state_feedback: (A, B) is not stabilizable");

    const Matrix    Lambda = real_block_diagonal(placement_targets(A, opts), n);
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int attempt = 0; attempt < 20; ++attempt) {
        Matrix G(m, n);
        for (int i = 0; i < m; ++i) {
            for (int k = 0; k < n; ++k) G(i, k) = g(rng);
        }
        Matrix X;
        try {
            X = solve_sylvester(A, -Lambda, B * G);
        } catch (const Error&) {
            continue;
        }
        Eigen::JacobiSVD<Matrix> svd(X);
        const auto&              s = svd.singularValues();
        if (!(s(n - 1) > 1e-10 * s(0))) continue;
        const Matrix K = X.transpose().fullPivLu().solve(G.transpose()).transpose();
        if (K.allFinite() && is_hurwitz(A - B * K)) return K;
    }
    // Placement needs a controllable pair; fall back to a unit-weight LQR gain.
    try {
        const Matrix K = lqr_gain(A, B);
        if (is_hurwitz(A - B * K)) return K;
    } catch (const Error&) {
    }
    throw SynthesisError("design_state_feedback: pole placement failed");
}

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::mers: return "MERS";
        case EstimatorKind::grmers: return "GRMERS";
        case EstimatorKind::hinf_filter: return "HinfFilter";
    }
    return "?";
}

double Doublet::value(double t) const {
    if (t >= start && t < start + width) return amplitude;
    if (t >= start + width && t < start + 2.0 * width) return -amplitude;
    return 0.0;
}

ObserverDesign mers_observer(const MersResult& mers) {
    if (!mers.feasible) throw ValidationError("mers_observer: MERS synthesis did not succeed");
    const PlantSet& ps = mers.augmented;
    return ObserverDesign{ps.A(mers.j), ps.B(), ps.C(), ps.Cz(), mers.L, mers.pre, mers.post};
}

ObserverDesign plain_observer(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& Cz, const Matrix& L) {
    return ObserverDesign{A, B, C, Cz, L, CompensatorBank{{}, BankRole::estimator_pre},
                          CompensatorBank{{}, BankRole::estimator_post}};
}

void SimulationScenario::validate(int outputs) const {
    if (!(step > 0.0) || !std::isfinite(step)) throw ValidationError("scenario: step must be positive");
    if (!(duration >= step) || !std::isfinite(duration)) throw ValidationError("scenario: duration must cover at least one step");
    if (input.channel < 0) throw ValidationError("scenario: negative input channel");
    for (int c : noise.enabled ? noise.channels : std::vector<int>{}) {
        if (c < 0 || c >= outputs) {
            throw ValidationError("scenario: noise channel " + std::to_string(c) + " is not a measured output");
        }
    }
    if (noise.enabled && !(noise.rms >= 0.0)) throw ValidationError("scenario: noise rms must be non-negative");
}

ClosedLoop closed_loop(const SimulationScenario& sc, const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& Cz) {
    auto ic = build(sc, A, B, C, Cz);
    return ClosedLoop{ic.M, ic.E, ic.lay.total};
}

SimulationTrace simulate(const SimulationScenario& sc, const Matrix& A, const Matrix& B, const Matrix& C,
                         const Matrix& Cz) {
    sc.validate(static_cast<int>(C.rows()));
    const auto ic  = build(sc, A, B, C, Cz);
    const auto& L  = ic.lay;
    if (sc.input.channel >= L.m) throw ValidationError("scenario: input channel exceeds the plant's input count");
    const int N  = L.total;
    const int nw = ic.nw;

    SimulationTrace tr;
    const Spectrum  spec = eigenvalues(ic.M);
    double          slow = std::numeric_limits<double>::infinity();
    double          rho  = 0.0;
    for (const auto& l : spec) {
        if (!(l.real() < 0.0)) throw DomainError("simulate: closed loop is not Hurwitz");
        slow = std::min(slow, -l.real());
        rho  = std::max(rho, std::abs(l));
    }
    // RK4 is stable for |lambda| h up to about 2.78; split the step when the loop is stiffer.
    const long sub = std::max(1L, static_cast<long>(std::ceil(rho * sc.step / 2.0)));
    if (sub > 100000) throw NumericError("simulate: closed loop too stiff for the requested step");
    tr.slowest_time_constant = N == 0 ? 0.0 : 1.0 / slow;
    tr.horizon_adequate      = sc.duration >= 10.0 * tr.slowest_time_constant;
    tr.substeps              = sub;

    Vector xi = Vector::Zero(N);
    if (sc.x0.size() > 0) {
        if (sc.x0.size() != L.n) throw DimensionError("simulate: x0 has wrong length");
        xi.segment(L.x, L.n) = sc.x0;
    }
    if (sc.xhat0.size() > 0) {
        if (sc.xhat0.size() != L.no) throw DimensionError("simulate: xhat0 has wrong length");
        xi.segment(L.obs, L.no) = sc.xhat0;
    }

    const auto steps   = static_cast<long>(std::llround(sc.duration / sc.step));
    const long samples = steps + 1;
    tr.time.resize(samples);
    tr.x.resize(samples, L.n);
    tr.z.resize(samples, L.q);
    tr.z_hat.resize(samples, L.q);
    tr.e_z.resize(samples, L.q);
    tr.u.resize(samples, L.m);
    tr.y.resize(samples, L.r);
    tr.v.resize(samples, L.r);

    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const RowMajor M  = ic.M;
    const auto&    kt = kernels::active();

    std::mt19937_64                  rng(sc.noise.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector                           w = Vector::Zero(nw);
    Vector                           Ew(N), k1(N), k2(N), k3(N), k4(N), tmp(N);
    const double                     h  = sc.step;
    const double                     hs = h / static_cast<double>(sub);

    auto draw_inputs = [&](long k) {
        const double t = k * h;
        w.setZero();
        w(sc.input.channel) = sc.input.value(t + 0.5 * h);
        if (sc.noise.enabled) {
            for (int c : sc.noise.channels) w(L.m + c) = sc.noise.rms * gauss(rng);
        }
    };
    auto record = [&](long k) {
        tr.time(k)       = k * h;
        tr.x.row(k)      = xi.segment(L.x, L.n).transpose();
        tr.z.row(k)      = (ic.z.X * xi + ic.z.W * w).transpose();
        tr.z_hat.row(k)  = (ic.z_hat.X * xi + ic.z_hat.W * w).transpose();
        tr.u.row(k)      = (ic.u.X * xi + ic.u.W * w).transpose();
        tr.y.row(k)      = (ic.y.X * xi + ic.y.W * w).transpose();
        tr.v.row(k)      = w.tail(L.r).transpose();
    };
    auto deriv = [&](const Vector& s, Vector& out) {
        kt.gemv(M.data(), N, N, s.data(), out.data());
        kt.axpy(N, 1.0, Ew.data(), out.data());
    };

    long last = steps;
    for (long k = 0; k < steps; ++k) {
        draw_inputs(k);
        record(k);
        Ew = ic.E * w;
        for (long s = 0; s < sub; ++s) {
            deriv(xi, k1);
            tmp = xi;
            kt.axpy(N, 0.5 * hs, k1.data(), tmp.data());
            deriv(tmp, k2);
            tmp = xi;
            kt.axpy(N, 0.5 * hs, k2.data(), tmp.data());
            deriv(tmp, k3);
            tmp = xi;
            kt.axpy(N, hs, k3.data(), tmp.data());
            deriv(tmp, k4);
            kt.axpy(N, hs / 6.0, k1.data(), xi.data());
            kt.axpy(N, hs / 3.0, k2.data(), xi.data());
            kt.axpy(N, hs / 3.0, k3.data(), xi.data());
            kt.axpy(N, hs / 6.0, k4.data(), xi.data());
        }
        if (!xi.allFinite() || xi.norm() > 1e9) {
            tr.diverged = true;
            last        = k + 1;
            break;
        }
    }
    draw_inputs(last);
    record(last);
    if (last < steps) {
        const long n = last + 1;
        tr.time.conservativeResize(n);
        for (Matrix* m : {&tr.x, &tr.z, &tr.z_hat, &tr.e_z, &tr.u, &tr.y, &tr.v}) m->conservativeResize(n, Eigen::NoChange);
    }
    tr.e_z = tr.z - tr.z_hat;
    return tr;
}

NrmseReport nrmse(const Matrix& truth, const Matrix& estimate) {
    if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols()) {
        throw DimensionError("nrmse: truth and estimate differ in shape");
    }
    if (truth.rows() == 0) throw ValidationError("nrmse: empty trace");
    NrmseReport rep;
    rep.channels.resize(truth.cols());
    double      acc = 0.0;
    const auto& kt  = kernels::active();
    for (Eigen::Index c = 0; c < truth.cols(); ++c) {
        const double range = truth.col(c).maxCoeff() - truth.col(c).minCoeff();
        if (!(range > 0.0)) {
            rep.channels(c) = kNaN;
            rep.defined.push_back(false);
            rep.warnings.push_back("channel " + std::to_string(c) + " is constant; NRMSE undefined");
            continue;
        }
        const double ss = kt.sum_sq_diff(static_cast<std::size_t>(truth.rows()), truth.col(c).data(), estimate.col(c).data());
        const double v  = std::sqrt(ss / static_cast<double>(truth.rows())) / range;
        rep.channels(c) = v;
        rep.defined.push_back(true);
        acc += v * v;
    }
    rep.norm2 = std::sqrt(acc);
    return rep;
}

NrmseReport nrmse(const SimulationTrace& trace) { return nrmse(trace.z, trace.z_hat); }

double empirical_rms_gain(const SimulationTrace& trace) {
    const double e = trace.e_z.squaredNorm();
    const double d = trace.x.squaredNorm() + trace.v.squaredNorm();
    if (!(d > 0.0)) throw ValidationError("empirical_rms_gain: zero disturbance energy");
    return std::sqrt(e / d);
}

void write_trace_csv(const SimulationTrace& tr, std::ostream& out) {
    out.precision(17);
    out << "t";
    for (Eigen::Index k = 0; k < tr.x.cols(); ++k) out << ",x" << k + 1;
    for (Eigen::Index k = 0; k < tr.z.cols(); ++k) out << ",z" << k + 1;
    for (Eigen::Index k = 0; k < tr.z_hat.cols(); ++k) out << ",zhat" << k + 1;
    for (Eigen::Index k = 0; k < tr.e_z.cols(); ++k) out << ",ez" << k + 1;
    out << '\n';
    for (Eigen::Index i = 0; i < tr.time.size(); ++i) {
        out << tr.time(i);
        for (const Matrix* m : {&tr.x, &tr.z, &tr.z_hat, &tr.e_z}) {
            for (Eigen::Index k = 0; k < m->cols(); ++k) out << ',' << (*m)(i, k);
        }
        out << '\n';
    }
}

std::vector<Matrix> perturb_family(const PlantSet& set, std::size_t j, const std::vector<double>& percent,
                                   std::uint64_t seed) {
    if (j >= set.size()) throw ValidationError("perturb_family: base index out of range");
    if (percent.empty()) throw ValidationError("perturb_family: no perturbation percentages");
    const double cap = sigma_max(Matrix(set.A(worst_plant_index(set, j)) - set.A(j)));
    std::mt19937_64                  rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Matrix>              out;
    const int                        n = set.states();
    for (std::size_t i = 0; i < set.size(); ++i) {
        Matrix D(n, n);
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) D(a, b) = g(rng);
        }
        const double p      = percent[i % percent.size()] / 100.0;
        const double target = std::min(p * sigma_max(set.A(i)), 0.99 * cap);
        const double s      = sigma_max(D);
        out.push_back(set.A(i) + (s > 0.0 ? target / s : 0.0) * D);
    }
    return out;
}

ComparisonTable compare_estimators(const PlantSet& set, const MersResult& mers, const GrcResult& grc,
                                   const std::vector<FilterDesign>& filters, const CompareOptions& opts) {
    if (filters.size() != set.size()) throw DimensionError("compare_estimators: need one H-infinity filter per plant");
    const std::size_t j = mers.j;
    ComparisonTable   table;
    table.base        = j;
    table.perturbed_A = perturb_family(set, j, opts.perturbation_percent, opts.seed ^ 0x9e3779b97f4a7c15ULL);

    // Each nominal plant gets its own stabilizing gain; perturbed runs reuse it.
    std::vector<Matrix> K1, K;
    for (std::size_t i = 0; i < set.size(); ++i) {
        K1.push_back(design_state_feedback(set.A(i), set.B(), opts.feedback));
        if (grc.feasible) {
            const auto aug = augment_plant(set.plant(i), grc.w_in, grc.w_ot);
            K.push_back(design_state_feedback(aug.A(), aug.B(), opts.feedback));
        }
    }

    SimulationScenario base;
    base.duration = opts.duration;
    base.step     = opts.step;
    base.input    = opts.input;
    base.noise    = opts.noise;

    SimulationScenario s_mers = base;
    s_mers.kind               = EstimatorKind::mers;
    s_mers.observer           = mers_observer(mers);

    SimulationScenario s_gr = s_mers;
    if (grc.feasible) {
        s_gr.kind = EstimatorKind::grmers;
        s_gr.w_in = grc.w_in;
        s_gr.w_ot = grc.w_ot;
    }

    auto score = [&](SimulationScenario sc, const Matrix& A_true, std::uint64_t seed, const std::string& name) {
        sc.noise.seed = seed;
        try {
            auto tr = simulate(sc, A_true, set.B(), set.C(), set.Cz());
            if (opts.keep_traces) table.traces.push_back({name, tr});
            if (tr.diverged) return kNaN;
            return nrmse(tr).norm2;
        } catch (const DomainError&) {
            return kNaN;
        }
    };
    auto fill = [&](std::vector<ComparisonRow>& rows, auto plant_A, std::uint64_t seed_base, const std::string& tag) {
        for (std::size_t i = 0; i < set.size(); ++i) {
            const Matrix       Ai   = plant_A(i);
            const std::uint64_t seed = seed_base + i;
            SimulationScenario s_h  = base;
            s_h.kind                = EstimatorKind::hinf_filter;
            s_h.observer            = plain_observer(set.A(i), set.B(), set.C(), set.Cz(), filters[i].L);
            s_h.K                   = K1[i];
            s_mers.K                = K1[i];
            s_gr.K                  = grc.feasible ? K[i] : K1[i];
            ComparisonRow row;
            row.label  = set.labels()[i];
            const std::string prefix = tag + "_" + row.label + "_";
            row.mers   = score(s_mers, Ai, seed, prefix + "mers");
            row.grmers = score(s_gr, Ai, seed, prefix + "grmers");
            row.hinf   = score(s_h, Ai, seed, prefix + "hinf");
            row.gr_vs_mers_percent = 100.0 * (1.0 - row.grmers / row.mers);
            row.gr_vs_hinf_percent = 100.0 * (1.0 - row.grmers / row.hinf);
            rows.push_back(row);
        }
    };
    fill(table.nominal, [&](std::size_t i) { return set.A(i); }, opts.seed * 1000, "nominal");
    fill(table.perturbed, [&](std::size_t i) { return table.perturbed_A[i]; }, opts.seed * 1000 + 500, "perturbed");
    return table;
}

}  // namespace simest
