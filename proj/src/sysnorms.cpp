#include "simest/sysnorms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace simest {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void require_stable(const StateSpaceModel& G, const char* who) {
    if (!is_hurwitz(G.A())) throw DomainError(std::string(who) + ": system is not stable");
}

double gain_at(const StateSpaceModel& G, double w) { return sigma_max(frequency_response(G, w)); }

// Hamiltonian whose imaginary eigenvalues j w mark the frequencies where gamma is a
// singular value of G(j w). Requires gamma > sigma_max(D).
Matrix hamiltonian(const StateSpaceModel& G, double gamma) {
    const Matrix& A = G.A();
    const Matrix& B = G.B();
    const Matrix& C = G.C();
    const Matrix& D = G.D();
    const auto    m = D.cols(), p = D.rows(), n = A.rows();
    const Matrix  R    = D.transpose() * D - gamma * gamma * Matrix::Identity(m, m);
    const Matrix  S    = D * D.transpose() - gamma * gamma * Matrix::Identity(p, p);
    const Matrix  Rinv = R.ldlt().solve(Matrix::Identity(m, m));
    const Matrix  Sinv = S.ldlt().solve(Matrix::Identity(p, p));
    const Matrix  Af   = A - B * Rinv * D.transpose() * C;
    Matrix        H(2 * n, 2 * n);
    H << Af, -gamma * B * Rinv * B.transpose(), gamma * C.transpose() * Sinv * C, -Af.transpose();
    return H;
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(std::max(n, 0)));
    if (n == 1) out[0] = lo;
    for (int k = 0; k < n && n > 1; ++k) out[static_cast<std::size_t>(k)] = lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1));
    return out;
}

bool is_level_crossing(const StateSpaceModel& G, double omega, double gamma, double rel) {
    const Vector s = Eigen::JacobiSVD<CMatrix>(frequency_response(G, omega)).singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (std::abs(s(i) - gamma) <= rel * gamma) return true;
    }
    return false;
}

std::vector<double> level_crossings(const StateSpaceModel& G, double gamma, const HinfOptions& opts) {
    const Matrix H     = hamiltonian(G, gamma);
    const double scale = std::max(H.norm(), 1e-300);
    std::vector<double> out;
    for (const auto& l : eigenvalues(H)) {
        if (l.imag() < 0.0) continue;
        if (std::abs(l.real()) >= opts.axis_tol * scale) continue;
        out.push_back(l.imag());
    }
    std::sort(out.begin(), out.end());
    return out;
}

NormResult grid_norm(const StateSpaceModel& G, const std::vector<double>& grid) {
    require_stable(G, "grid_norm");
    NormResult r;
    r.method = NormMethod::grid;
    for (double w : grid) {
        const double g = gain_at(G, w);
        if (g > r.value) {
            r.value          = g;
            r.peak_frequency = w;
        }
    }
    r.lower_bound = r.value;
    return r;
}

NormResult hinf_norm(const StateSpaceModel& G, const HinfOptions& opts) {
    require_stable(G, "hinf_norm");
    NormResult r;
    r.method          = NormMethod::bisection;
    const double dnorm = sigma_max(G.D());
    if (G.states() == 0 || G.B().norm() == 0.0 || G.C().norm() == 0.0) {
        r.value = r.lower_bound = dnorm;
        r.peak_frequency        = G.states() == 0 ? 0.0 : inf;
        return r;
    }

    // Cheap pre-pass: DC, the natural frequencies of A and a coarse log grid.
    double lo = dnorm, peak = inf;
    auto   probe = [&](double w) {
        const double g = gain_at(G, w);
        if (g > lo) {
            lo   = g;
            peak = w;
        }
    };
    probe(0.0);
    for (const auto& l : eigenvalues(G.A())) probe(std::abs(l));
    for (double w : log_grid(1e-3, 1e3, 41)) probe(w);
    if (!(lo > 0.0)) {
        r.value = r.lower_bound = 0.0;
        return r;
    }

    double hi    = 10.0 * lo;
    int    grows = 0;
    while (true) {
        auto xs = level_crossings(G, hi, opts);
        bool genuine = false;
        for (double w : xs) genuine |= is_level_crossing(G, w, hi);
        if (!genuine) break;
        for (double w : xs) probe(w);
        hi *= 10.0;
        if (++grows > 20) throw NumericError("hinf_norm: could not bracket the norm from above");
    }

    for (int it = 0; it < opts.max_iterations && hi - lo > opts.rel_tol * lo; ++it) {
        const double gamma = 0.5 * (lo + hi);
        auto         xs    = level_crossings(G, gamma, opts);
        xs.erase(std::remove_if(xs.begin(), xs.end(), [&](double w) { return !is_level_crossing(G, w, gamma); }),
                 xs.end());
        if (xs.empty()) {
            hi = gamma;
            continue;
        }
        // gamma is attained; midpoints between consecutive crossings usually beat it.
        lo = std::max(lo, gamma);
        if (peak == inf || gain_at(G, peak) < gamma) peak = xs.front();
        xs.insert(xs.begin(), 0.0);
        for (std::size_t k = 0; k + 1 < xs.size(); ++k) probe(0.5 * (xs[k] + xs[k + 1]));
        for (std::size_t k = 1; k < xs.size(); ++k) probe(xs[k]);
    }
    if (hi - lo > opts.rel_tol * lo) throw NumericError("hinf_norm: bisection did not converge");
    r.value          = hi;
    r.lower_bound    = lo;
    r.peak_frequency = peak;
    return r;
}

double GainTable::column_max(std::size_t l) const { return values.col(static_cast<Eigen::Index>(l)).maxCoeff(); }

std::size_t GainTable::column_argmax(std::size_t l) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < static_cast<std::size_t>(values.rows()); ++i) {
        if (values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) >
            values(static_cast<Eigen::Index>(best), static_cast<Eigen::Index>(l))) {
            best = i;
        }
    }
    return best;
}

GainTable worst_case_gain_matrix(const PlantSet& set, const std::vector<Matrix>& gains, const HinfOptions& opts) {
    const std::size_t N = set.size();
    if (gains.size() != N) throw DimensionError("worst_case_gain_matrix: need one gain per plant");
    GainTable t;
    t.values = Matrix::Constant(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N), inf);
    t.column_feasible.assign(N, false);
    for (std::size_t l = 0; l < N; ++l) {
        if (!is_hurwitz(set.A(l) - gains[l] * set.C())) continue;
        t.column_feasible[l] = true;
        for (std::size_t i = 0; i < N; ++i) {
            const auto es = build_error_system(set.A(i), set.A(l), set.C(), set.Cz(), gains[l]);
            t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = hinf_norm(es.model, opts).value;
        }
    }
    return t;
}

}  // namespace simest
