#include "doctest.h"
#include "simest/nugap.hpp"
#include "simest/sysnorms.hpp"
#include "support/oracles.hpp"

using namespace simest;

namespace {

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }

StateSpaceModel gain(double k) { return StateSpaceModel::static_gain(m1(k)); }

StateSpaceModel first_order(double k, double pole) { return StateSpaceModel(m1(pole), m1(1.0), m1(k), m1(0.0)); }

// Scalar chordal distance on the Riemann sphere.
double chordal(Complex a, Complex b) {
    return std::abs(a - b) / std::sqrt((1 + std::norm(a)) * (1 + std::norm(b)));
}

StateSpaceModel random_siso(std::mt19937_64& rng, int n) {
    return StateSpaceModel(oracle::random_hurwitz(rng, n, 0.05), oracle::random_matrix(rng, n, 1),
                           oracle::random_matrix(rng, 1, n), 0.2 * oracle::random_matrix(rng, 1, 1));
}

StateSpaceModel random_plant(std::mt19937_64& rng, int n, int m, int p) {
    return StateSpaceModel(oracle::random_matrix(rng, n, n), oracle::random_matrix(rng, n, m),
                           oracle::random_matrix(rng, p, n), Matrix::Zero(p, m));
}

}  // namespace

TEST_CASE("normalized coprime factors of a stable lag") {
    const auto P = first_order(1.0, -1.0);
    const auto f = normalized_rcf(P);
    CHECK(is_hurwitz(f.M.A()));
    const double m0 = frequency_response(f.M, 0.0)(0, 0).real(), n0 = frequency_response(f.N, 0.0)(0, 0).real();
    CHECK(m0 * m0 + n0 * n0 == doctest::Approx(1.0).epsilon(1e-12));
    for (double w : log_grid(1e-2, 1e2, 10)) {
        const Complex ratio = frequency_response(f.N, w)(0, 0) / frequency_response(f.M, w)(0, 0);
        CHECK(std::abs(ratio - frequency_response(P, w)(0, 0)) < 1e-12);
    }
}

TEST_CASE("coprime factors of an unstable plant absorb the pole in M") {
    const auto f = normalized_rcf(first_order(1.0, 1.0));
    CHECK(is_hurwitz(f.M.A()));
    CHECK(std::abs(evaluate(f.M, Complex(1.0, 0.0))(0, 0)) < 1e-12);
    CHECK(normalization_error(f, log_grid(1e-2, 1e2, 20)) < 1e-12);
}

TEST_CASE("normalization on random MIMO plants") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const auto P = random_plant(rng, 4, 2, 2);
        const auto f = normalized_rcf(P);
        CHECK(is_hurwitz(f.graph.A()));
        CHECK(normalization_error(f, log_grid(1e-3, 1e3, 50)) < 1e-8);
        const double  w     = 0.9;
        const CMatrix recon = frequency_response(f.N, w) * frequency_response(f.M, w).inverse();
        CHECK((recon - frequency_response(P, w)).norm() < 1e-9 * (1 + recon.norm()));
    }
}

TEST_CASE("scalar constants") {
    CHECK(nu_gap(gain(1.0), gain(1.0)).value == 0.0);
    CHECK(nu_gap(gain(1.0), gain(3.0)).value == doctest::Approx(2.0 / std::sqrt(20.0)).epsilon(1e-12));
    CHECK(std::abs(nu_gap(gain(1.0), gain(3.0)).value - 0.4472) < 1e-4);
    const auto anti = nu_gap(gain(2.0), gain(-0.5));
    CHECK(anti.value == doctest::Approx(1.0).epsilon(1e-6));
    const std::vector<StateSpaceModel> three{gain(1.0), gain(2.0), gain(3.0)};
    CHECK(max_gap(three, 1) == doctest::Approx(std::max(chordal(2.0, 1.0), chordal(2.0, 3.0))).epsilon(1e-12));
    CHECK(max_gap({gain(4.0), gain(4.0)}, 0) == 0.0);
}

TEST_CASE("first-order plants match the scalar chordal formula") {
    const auto P1 = first_order(2.0, -1.0), P2 = first_order(1.0, -3.0);
    double     ref = 0.0;
    for (double w : log_grid(1e-4, 1e4, 200001)) {
        ref = std::max(ref, chordal(2.0 / Complex(1.0, w), 1.0 / Complex(3.0, w)));
    }
    const auto r = nu_gap(P1, P2);
    CHECK(r.winding_condition_met);
    CHECK(r.value == doctest::Approx(ref).epsilon(1e-7));
}

TEST_CASE("winding condition") {
    // Mirrored poles close to the origin: graphs are close, condition holds with wno = -1.
    const auto Pu = first_order(1.0, 0.1), Ps = first_order(1.0, -0.1);
    CHECK(gap_winding_number(Pu, Ps) == -1);
    CHECK(gap_winding_number_by_phase(Pu, Ps) == -1);
    const auto close = nu_gap(Pu, Ps);
    CHECK(close.winding_condition_met);
    CHECK(close.value < 0.3);
    CHECK(close.value == doctest::Approx(nu_gap(Ps, Pu).value).epsilon(1e-10));

    // Small-gain unstable vs. stable: a zero controller separates them, so the gap is 1.
    const auto far = nu_gap(first_order(0.1, 1.0), first_order(0.1, -1.0));
    CHECK_FALSE(far.winding_condition_met);
    CHECK(far.value == 1.0);

    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const auto P1 = random_plant(rng, 3, 1, 1), P2 = random_plant(rng, 2, 1, 1);
        int        by_eig = 0;
        try {
            by_eig = gap_winding_number(P1, P2);
        } catch (const DomainError&) {
            continue;
        }
        CHECK(by_eig == gap_winding_number_by_phase(P1, P2));
    }
}

TEST_CASE("axis poles are rejected") {
    const auto integrator = first_order(1.0, 0.0);
    CHECK_THROWS_AS(nu_gap(integrator, gain(1.0)), DomainError);
    CHECK_THROWS_AS(nu_gap(gain(1.0), StateSpaceModel::static_gain(Matrix::Ones(1, 2))), DimensionError);
}

TEST_CASE("metric properties on random plants") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 15; ++trial) {
        const auto P1 = random_plant(rng, 3, 2, 2), P2 = random_plant(rng, 3, 2, 2);
        const auto a = nu_gap(P1, P2), b = nu_gap(P2, P1);
        CHECK(std::abs(a.value - b.value) < 1e-8);
        CHECK(a.value >= 0.0);
        CHECK(a.value <= 1.0);
        CHECK(nu_gap(P1, P1).value < 1e-8);
        const Matrix T = oracle::random_matrix(rng, 3, 3) + 3.0 * Matrix::Identity(3, 3);
        CHECK(std::abs(nu_gap(similarity(P1, T), P2).value - a.value) < 1e-8);
    }
    for (int trial = 0; trial < 20; ++trial) {
        const auto P1 = random_siso(rng, 2), P2 = random_siso(rng, 3), P3 = random_siso(rng, 2);
        const double d13 = nu_gap(P1, P3).value, d12 = nu_gap(P1, P2).value, d23 = nu_gap(P2, P3).value;
        CHECK(d13 <= d12 + d23 + 1e-6);
    }
}
