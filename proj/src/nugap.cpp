#include "simest/nugap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace simest {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

Matrix inv_sqrt_spd(const Matrix& R) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(R);
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

CMatrix inv_sqrt_hpd(const CMatrix& R) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(R);
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix response_or_limit(const StateSpaceModel& P, double w) {
    return std::isinf(w) ? CMatrix(P.D().cast<Complex>()) : frequency_response(P, w);
}

void require_compatible(const StateSpaceModel& P1, const StateSpaceModel& P2) {
    if (P1.inputs() != P2.inputs() || P1.outputs() != P2.outputs()) {
        throw DimensionError("nu_gap: plants have different input/output widths");
    }
}

void reject_axis_poles(const StateSpaceModel& P, double tol) {
    for (const auto& l : poles(P)) {
        if (std::abs(l.real()) < tol) throw DomainError("nu_gap: plant has a pole on or near the imaginary axis");
    }
}

// I + P2~ P1 as a state-space model.
StateSpaceModel return_difference(const StateSpaceModel& P1, const StateSpaceModel& P2) {
    const auto G = series(conjugate(P2), P1);
    return StateSpaceModel(G.A(), G.B(), G.C(), G.D() + Matrix::Identity(G.outputs(), G.inputs()));
}

std::vector<double> frequency_grid(const StateSpaceModel& P1, const StateSpaceModel& P2, const NuGapOptions& o) {
    double lo = o.omega_lo, hi = o.omega_hi;
    if (o.widen_to_poles) {
        for (const auto* P : {&P1, &P2}) {
            for (const auto& l : poles(*P)) {
                const double r = std::abs(l);
                if (r == 0.0) continue;
                lo = std::min(lo, 0.1 * r);
                hi = std::max(hi, 10.0 * r);
            }
        }
    }
    const int           n = std::max(o.grid_points, 2);
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1));
    return g;
}

}  // namespace

std::vector<StateSpaceModel> members(const PlantSet& set) {
    std::vector<StateSpaceModel> out;
    for (std::size_t i = 0; i < set.size(); ++i) out.push_back(set.plant(i));
    return out;
}

CoprimeFactors normalized_rcf(const StateSpaceModel& P) {
    const int     n = P.states(), m = P.inputs(), p = P.outputs();
    const Matrix& A = P.A();
    const Matrix& B = P.B();
    const Matrix& C = P.C();
    const Matrix& D = P.D();
    const Matrix  R     = Matrix::Identity(m, m) + D.transpose() * D;
    const Matrix  Rinv  = R.ldlt().solve(Matrix::Identity(m, m));
    const Matrix  Rih   = inv_sqrt_spd(R);
    const Matrix  S     = Matrix::Identity(p, p) + D * D.transpose();
    Matrix        F     = Matrix::Zero(m, n);
    if (n > 0) {
        const Matrix Ar = A - B * Rinv * D.transpose() * C;
        const Matrix Q  = C.transpose() * S.ldlt().solve(C);
        Matrix       X;
        try {
            X = solve_care(Ar, B, Q, R);
        } catch (const Error& e) {
            throw SolvabilityError(std::string("normalized_rcf: ") + e.what());
        }
        F = -Rinv * (B.transpose() * X + D.transpose() * C);
    }
    const Matrix Af = A + B * F;
    const Matrix Bf = B * Rih;
    Matrix       Cg(m + p, n);
    Cg << F, C + D * F;
    Matrix Dg(m + p, m);
    Dg << Rih, D * Rih;
    CoprimeFactors out{StateSpaceModel(Af, Bf, F, Rih), StateSpaceModel(Af, Bf, C + D * F, D * Rih),
                       StateSpaceModel(Af, Bf, Cg, Dg), F};
    return out;
}

double normalization_error(const CoprimeFactors& f, const std::vector<double>& omegas) {
    double worst = 0.0;
    for (double w : omegas) {
        const CMatrix G = frequency_response(f.graph, w);
        worst = std::max(worst, (G.adjoint() * G - CMatrix::Identity(G.cols(), G.cols())).norm());
    }
    return worst;
}

double chordal_distance(const CMatrix& P1, const CMatrix& P2) {
    const auto p = P1.rows(), m = P1.cols();
    const CMatrix L = inv_sqrt_hpd(CMatrix::Identity(p, p) + P2 * P2.adjoint());
    const CMatrix R = inv_sqrt_hpd(CMatrix::Identity(m, m) + P1.adjoint() * P1);
    return std::min(1.0, sigma_max(CMatrix(L * (P2 - P1) * R)));
}

double chordal_distance(const StateSpaceModel& P1, const StateSpaceModel& P2, double omega) {
    return chordal_distance(response_or_limit(P1, omega), response_or_limit(P2, omega));
}

int unstable_pole_count(const StateSpaceModel& P) {
    int k = 0;
    for (const auto& l : poles(P)) k += l.real() > 0.0 ? 1 : 0;
    return k;
}

int gap_winding_number(const StateSpaceModel& P1, const StateSpaceModel& P2, const NuGapOptions& opts) {
    const auto   H  = return_difference(P1, P2);
    const Matrix Dh = H.D();
    Eigen::PartialPivLU<Matrix> lu(Dh);
    if (!(std::abs(lu.determinant()) > 1e-12)) throw DomainError("nu_gap: det(I + P2~ P1) vanishes at infinity");
    // Zeros of det H are the eigenvalues of A - B Dh^{-1} C; poles those of A.
    const Matrix Acl   = H.A() - H.B() * lu.solve(H.C());
    const double scale = std::max(1.0, Acl.norm());
    int          rhp   = 0;
    for (const auto& z : eigenvalues(Acl)) {
        if (std::abs(z.real()) <= opts.axis_zero_tol * scale) throw DomainError("nu_gap: det(I + P2~ P1) vanishes on the axis");
        rhp += z.real() > 0.0 ? 1 : 0;
    }
    for (const auto& l : eigenvalues(H.A())) rhp -= l.real() > 0.0 ? 1 : 0;
    return rhp;
}

int gap_winding_number_by_phase(const StateSpaceModel& P1, const StateSpaceModel& P2, const NuGapOptions& opts) {
    const auto H   = return_difference(P1, P2);
    auto       det = [&](double w) -> Complex {
        const CMatrix G = std::isinf(w) ? CMatrix(H.D().cast<Complex>()) : frequency_response(H, w);
        return G.determinant();
    };
    auto grid = frequency_grid(P1, P2, opts);
    grid.insert(grid.begin(), 0.0);
    grid.push_back(inf);
    // Accumulate arg changes, subdividing any interval whose phase step exceeds pi/8.
    double total = 0.0;
    auto   step  = [](Complex a, Complex b) { return std::arg(b / a); };
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        double a = grid[k], b = grid[k + 1];
        if (std::isinf(b)) {
            // Map the tail to a geometric sweep that ends effectively at infinity.
            b = a * 1e6;
        }
        std::vector<std::pair<double, double>> stack{{a, b}};
        while (!stack.empty()) {
            auto [x, y] = stack.back();
            stack.pop_back();
            const double d = step(det(x), det(y));
            if (std::abs(d) > std::numbers::pi / 8 && (y - x) > 1e-12 * std::max(1.0, y)) {
                const double mid = x == 0.0 ? y / 16 : std::sqrt(x * y);
                stack.emplace_back(mid, y);
                stack.emplace_back(x, mid);
                continue;
            }
            total += d;
        }
        if (std::isinf(grid[k + 1])) total += step(det(b), det(inf));
    }
    return static_cast<int>(std::lround(-total / std::numbers::pi));
}

GapResult nu_gap(const StateSpaceModel& P1, const StateSpaceModel& P2, const NuGapOptions& opts) {
    require_compatible(P1, P2);
    reject_axis_poles(P1, opts.axis_pole_tol);
    reject_axis_poles(P2, opts.axis_pole_tol);
    GapResult r;
    try {
        r.winding_number = gap_winding_number(P1, P2, opts);
    } catch (const DomainError&) {
        r.winding_condition_met = false;
    }
    if (r.winding_condition_met) {
        r.winding_condition_met = r.winding_number + unstable_pole_count(P1) - unstable_pole_count(P2) == 0;
    }
    if (!r.winding_condition_met) {
        r.value          = 1.0;
        r.peak_frequency = std::numeric_limits<double>::quiet_NaN();
        return r;
    }

    auto kappa = [&](double w) { return chordal_distance(P1, P2, w); };
    const auto grid = frequency_grid(P1, P2, opts);
    std::vector<double> vals(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) vals[k] = kappa(grid[k]);
    r.value          = kappa(0.0);
    r.peak_frequency = 0.0;
    if (const double v = kappa(inf); v > r.value) {
        r.value          = v;
        r.peak_frequency = inf;
    }
    std::vector<std::size_t> order(grid.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (vals[k] > r.value) {
            r.value          = vals[k];
            r.peak_frequency = grid[k];
        }
    }
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int t = 0; t < opts.refine_peaks && t < static_cast<int>(order.size()); ++t) {
        const std::size_t k = order[static_cast<std::size_t>(t)];
        double            a = k == 0 ? 0.0 : grid[k - 1];
        double            b = k + 1 == grid.size() ? 10.0 * grid[k] : grid[k + 1];
        double x1 = b - g * (b - a), x2 = a + g * (b - a);
        double f1 = kappa(x1), f2 = kappa(x2);
        for (int it = 0; it < 60 && (b - a) > 1e-12 * b; ++it) {
            if (f1 > f2) {
                b  = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = kappa(x1);
            } else {
                a  = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = kappa(x2);
            }
        }
        if (f1 > r.value) {
            r.value          = f1;
            r.peak_frequency = x1;
        }
        if (f2 > r.value) {
            r.value          = f2;
            r.peak_frequency = x2;
        }
    }
    r.value = std::clamp(r.value, 0.0, 1.0);
    return r;
}

double max_gap(const std::vector<StateSpaceModel>& plants, std::size_t j, const NuGapOptions& opts) {
    if (j >= plants.size()) throw DimensionError("max_gap: index out of range");
    double best = 0.0;
    for (std::size_t i = 0; i < plants.size(); ++i) {
        if (i == j) continue;
        best = std::max(best, nu_gap(plants[j], plants[i], opts).value);
    }
    return best;
}

double max_gap(const PlantSet& set, std::size_t j, const NuGapOptions& opts) { return max_gap(members(set), j, opts); }

Matrix gap_table(const std::vector<StateSpaceModel>& plants, const NuGapOptions& opts) {
    const auto N = static_cast<Eigen::Index>(plants.size());
    Matrix     T = Matrix::Zero(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index k = i + 1; k < N; ++k) {
            T(i, k) = T(k, i) = nu_gap(plants[static_cast<std::size_t>(i)], plants[static_cast<std::size_t>(k)], opts).value;
        }
    }
    return T;
}

}  // namespace simest
