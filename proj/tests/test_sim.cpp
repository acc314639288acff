#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "simest/kernels.hpp"
#include "simest/sim.hpp"
#include "support/oracles.hpp"

using namespace simest;

namespace {

Matrix M1(double v) { return Matrix::Constant(1, 1, v); }

SimulationScenario quiet(const ObserverDesign& ob, const Matrix& K) {
    SimulationScenario sc;
    sc.kind          = EstimatorKind::mers;
    sc.observer      = ob;
    sc.K             = K;
    sc.noise.enabled = false;
    sc.input.amplitude = 0.0;
    sc.input.channel   = 0;
    return sc;
}

// Random 3-state plant with two measurements and one estimated state, [C; Cz] = I.
struct Family {
    std::vector<Matrix> A;
    Matrix              B, C, Cz;
};

Family small_family(std::uint64_t seed, int members, double spread) {
    std::mt19937_64 rng(seed);
    Family          f;
    const Matrix    A0 = oracle::random_matrix(rng, 3, 3) + Matrix::Identity(3, 3) * 0.3;
    for (int i = 0; i < members; ++i) f.A.push_back(A0 + oracle::random_matrix(rng, 3, 3, spread));
    f.B  = oracle::random_matrix(rng, 3, 2);
    f.C  = Matrix::Identity(3, 3).topRows(2);
    f.Cz = Matrix::Identity(3, 3).bottomRows(1);
    return f;
}

// Compensator poles kept in [1, 10] so short horizons cover the slowest mode.
void fast_spaces(MersOptions& mo, int m, int r) {
    mo.pre  = default_space(BankRole::estimator_pre, m);
    mo.post = default_space(BankRole::estimator_post, r);
    for (auto& s : mo.pre.sections) s.a0 = {1.0, 10.0};
    for (auto& s : mo.post.sections) s.a0 = {1.0, 10.0};
}

}  // namespace

TEST_CASE("state feedback by reflected and scaled poles") {
    SUBCASE("scalar unstable plant lands at -2") {
        const Matrix K = design_state_feedback(M1(1.0), M1(1.0));
        CHECK(K(0, 0) == doctest::Approx(3.0));
    }
    SUBCASE("double integrator") {
        Matrix A(2, 2), B(2, 1);
        A << 0, 1, 0, 0;
        B << 0, 1;
        const Matrix K = design_state_feedback(A, B);
        CHECK(is_hurwitz(A - B * K));
    }
    SUBCASE("complex poles get damping at least 0.4") {
        Matrix A(2, 2), B(2, 1);
        A << 0.1, 5, -5, 0.1;
        B << 0, 1;
        const Matrix K = design_state_feedback(A, B);
        for (const auto& l : eigenvalues(A - B * K)) {
            CHECK(l.real() < 0.0);
            CHECK(-l.real() / std::abs(l) >= 0.4 - 1e-6);
        }
    }
    SUBCASE("19-state augmented random plant") {
        std::mt19937_64 rng(4);
        const Matrix    A = oracle::random_matrix(rng, 11, 11);
        const Matrix    B = oracle::random_matrix(rng, 11, 3);
        CompensatorBank in{{Section{0.5, 1.0, 1.0}, Section{0.0, 2.0, 3.0}, Section{1.0, 1.0, 0.5}}, BankRole::gap_pre};
        CompensatorBank ot = identity_bank(5, BankRole::gap_post);
        for (auto& s : ot.sections) s = Section{0.0, 4.0, 4.0};
        const auto aug = augment_plant(StateSpaceModel(A, B, Matrix::Identity(11, 11).topRows(5), Matrix::Zero(5, 3)), in, ot);
        REQUIRE(aug.states() == 19);
        const Matrix K = design_state_feedback(aug.A(), aug.B());
        CHECK(is_hurwitz(aug.A() - aug.B() * K));
    }
    SUBCASE("unstabilizable pair") {
        Matrix A(2, 2), B(2, 1);
        A << 1, 0, 0, 2;
        B << 1, 0;
        CHECK_THROWS_AS(design_state_feedback(A, B), SynthesisError);
    }
}

TEST_CASE("doublet shape") {
    Doublet d;
    CHECK(d.value(0.5) == 0.0);
    CHECK(d.value(1.5) == doctest::Approx(0.1));
    CHECK(d.value(2.5) == doctest::Approx(-0.1));
    CHECK(d.value(3.5) == 0.0);
}

TEST_CASE("scalar closed loop follows the closed-form solution") {
    // x' = x + u, u = -3 x_hat, x_hat' = x_hat + u + 3 (x - x_hat): e = e0 exp(-2t), x = exp(-2t)(x0 + 3 e0 t).
    auto sc     = quiet(plain_observer(M1(1.0), M1(1.0), M1(1.0), M1(1.0), M1(3.0)), M1(3.0));
    sc.duration = 3.0;
    sc.x0       = Vector::Constant(1, 1.0);
    sc.xhat0    = Vector::Constant(1, 0.5);
    const auto tr = simulate(sc, M1(1.0), M1(1.0), M1(1.0), M1(1.0));
    for (long k : {0L, 100L, 1000L, 3000L}) {
        const double t = tr.time(k);
        const double e = 0.5 * std::exp(-2 * t);
        const double x = std::exp(-2 * t) * (1.0 + 3 * 0.5 * t);
        CHECK(tr.x(k, 0) == doctest::Approx(x).epsilon(1e-10));
        CHECK(tr.e_z(k, 0) == doctest::Approx(e).epsilon(1e-10));
    }
    CHECK_FALSE(tr.diverged);
}

TEST_CASE("matched plant without noise: estimation error decays") {
    const auto   f  = small_family(2, 1, 0.0);
    const Matrix L  = design_state_feedback(f.A[0].transpose(), f.C.transpose()).transpose();
    const Matrix K  = design_state_feedback(f.A[0], f.B);
    auto         sc = quiet(plain_observer(f.A[0], f.B, f.C, f.Cz, L), K);
    sc.x0           = Vector::Ones(3);
    sc.input.amplitude = 0.1;
    const auto   tr = simulate(sc, f.A[0], f.B, f.C, f.Cz);
    const double e0 = std::abs(tr.e_z(0, 0));
    REQUIRE(e0 > 0.0);
    CHECK(std::abs(tr.e_z(tr.e_z.rows() - 1, 0)) < 1e-6 * e0);
    CHECK(tr.horizon_adequate);

    SUBCASE("noise keeps the error bounded but nonzero") {
        sc.noise.enabled  = true;
        sc.noise.channels = {0, 1};
        sc.noise.rms      = 0.01;
        const auto tn     = simulate(sc, f.A[0], f.B, f.C, f.Cz);
        const auto tail   = tn.e_z.bottomRows(5000);
        CHECK(tail.cwiseAbs().maxCoeff() > 1e-6);
        CHECK(tail.cwiseAbs().maxCoeff() < 1.0);
        // Sample RMS of the injected noise tracks the requested value.
        const double rms = std::sqrt(tn.v.col(0).squaredNorm() / tn.v.rows());
        CHECK(rms == doctest::Approx(0.01).epsilon(0.03));
        CHECK(tn.v.col(1).squaredNorm() > 0.0);
    }
}

TEST_CASE("unstable closed loop is rejected before integration") {
    auto sc = quiet(plain_observer(M1(1.0), M1(1.0), M1(1.0), M1(1.0), M1(3.0)), M1(0.0));
    CHECK_THROWS_AS(simulate(sc, M1(1.0), M1(1.0), M1(1.0), M1(1.0)), DomainError);
    sc.K            = M1(3.0);
    sc.noise.channels = {4};
    sc.noise.enabled  = true;
    CHECK_THROWS_AS(simulate(sc, M1(1.0), M1(1.0), M1(1.0), M1(1.0)), ValidationError);
}

TEST_CASE("fixed seed gives bit-identical traces") {
    const auto   f  = small_family(3, 2, 0.2);
    const Matrix L  = design_state_feedback(f.A[0].transpose(), f.C.transpose()).transpose();
    const Matrix K  = design_state_feedback(f.A[0], f.B);
    SimulationScenario sc;
    sc.observer       = plain_observer(f.A[0], f.B, f.C, f.Cz, L);
    sc.K              = K;
    sc.noise.channels = {0, 1};
    sc.duration       = 5.0;
    const auto a = simulate(sc, f.A[1], f.B, f.C, f.Cz);
    const auto b = simulate(sc, f.A[1], f.B, f.C, f.Cz);
    CHECK(a.e_z == b.e_z);
    CHECK(a.x == b.x);
    sc.noise.seed = 2;
    const auto c  = simulate(sc, f.A[1], f.B, f.C, f.Cz);
    CHECK_FALSE(a.e_z == c.e_z);
}

TEST_CASE("halving the step barely moves the NRMSE") {
    const auto   f  = small_family(5, 2, 0.1);
    const Matrix L  = design_state_feedback(f.A[0].transpose(), f.C.transpose()).transpose();
    const Matrix K  = design_state_feedback(f.A[1], f.B);
    SimulationScenario sc;
    sc.observer      = plain_observer(f.A[0], f.B, f.C, f.Cz, L);
    sc.K             = K;
    sc.noise.enabled = false;
    sc.x0            = Vector::Ones(3);
    const double a   = nrmse(simulate(sc, f.A[0], f.B, f.C, f.Cz)).norm2;
    sc.step /= 2;
    const double b   = nrmse(simulate(sc, f.A[0], f.B, f.C, f.Cz)).norm2;
    REQUIRE(a > 0.0);
    CHECK(std::abs(a - b) / a < 5e-3);
}

TEST_CASE("empirical RMS gain stays under the certified gamma") {
    const auto f     = small_family(8, 2, 0.15);
    const double gamma = 2.0;
    const auto prob  = make_observer_problem(f.A[0], f.A[1], f.C, f.Cz, gamma);
    const auto out   = solve_observer_lmi(prob);
    REQUIRE(out.feasible);
    SimulationScenario sc;
    sc.observer       = plain_observer(f.A[0], f.B, f.C, f.Cz, out.certificate.L);
    sc.K              = design_state_feedback(f.A[0], f.B);
    sc.noise.channels = {0, 1};
    sc.noise.rms      = 0.05;
    const auto tr     = simulate(sc, f.A[1], f.B, f.C, f.Cz);
    CHECK(empirical_rms_gain(tr) <= 1.1 * gamma);
}

TEST_CASE("NRMSE") {
    Matrix x(101, 2);
    for (int k = 0; k <= 100; ++k) {
        x(k, 0) = k / 100.0;
        x(k, 1) = 3.0;
    }
    const auto same = nrmse(x, x);
    CHECK(same.channels(0) == 0.0);
    CHECK_FALSE(same.defined[1]);
    CHECK(std::isnan(same.channels(1)));
    CHECK(same.warnings.size() == 1);
    Matrix xh = x;
    xh.col(0).array() -= 0.1;
    const auto off = nrmse(x, xh);
    CHECK(off.channels(0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(off.norm2 == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(nrmse(x, Matrix(3, 2)), DimensionError);
}

TEST_CASE("SIMD and scalar kernels integrate to the same trace") {
    if (!kernels::avx2_available()) return;
    const auto   f  = small_family(9, 2, 0.1);
    const Matrix L  = design_state_feedback(f.A[0].transpose(), f.C.transpose()).transpose();
    SimulationScenario sc;
    sc.observer       = plain_observer(f.A[0], f.B, f.C, f.Cz, L);
    sc.K              = design_state_feedback(f.A[0], f.B);
    sc.noise.channels = {0};
    sc.duration       = 5.0;
    const auto prev   = kernels::active_isa();
    kernels::set_active_isa(kernels::Isa::scalar);
    const auto a = simulate(sc, f.A[1], f.B, f.C, f.Cz);
    kernels::set_active_isa(kernels::Isa::avx2);
    const auto b = simulate(sc, f.A[1], f.B, f.C, f.Cz);
    kernels::set_active_isa(prev);
    CHECK((a.e_z - b.e_z).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + a.e_z.cwiseAbs().maxCoeff()));
    CHECK(nrmse(a).norm2 == doctest::Approx(nrmse(b).norm2).epsilon(1e-9));
}

TEST_CASE("MERS and GRMERS wiring with compensators") {
    // Matched plant, no noise: the compensated observer still converges.
    const auto f = small_family(12, 2, 0.0);
    PlantSet   set(f.A, f.B, f.C, f.Cz);
    MersOptions mo;
    mo.gamma                = 5.0;
    mo.ga.population_size   = 4;
    mo.ga.max_generations   = 1;
    fast_spaces(mo, 2, 2);
    const auto mers = merse_algorithm(set, mo);
    REQUIRE(mers.feasible);
    auto sc     = quiet(mers_observer(mers), design_state_feedback(f.A[0], f.B));
    sc.x0       = Vector::Ones(3);
    sc.input.amplitude = 0.1;
    sc.duration   = 1.0;
    sc.duration   = 12.0 * simulate(sc, f.A[0], f.B, f.C, f.Cz).slowest_time_constant;
    const auto tr = simulate(sc, f.A[0], f.B, f.C, f.Cz);
    REQUIRE(tr.horizon_adequate);
    CHECK(tr.e_z.row(tr.e_z.rows() - 1).norm() < 1e-6 * tr.e_z.row(0).norm());

    CompensatorBank in{{Section{0.5, 1.0, 2.0}, Section{0.0, 3.0, 1.5}}, BankRole::gap_pre};
    CompensatorBank ot{{Section{0.0, 2.0, 2.5}, Section{0.0, 1.0, 0.7}}, BankRole::gap_post};
    SimulationScenario gr = sc;
    gr.kind               = EstimatorKind::grmers;
    gr.w_in               = in;
    gr.w_ot               = ot;
    const auto aug        = augment_plant(set.plant(0), in, ot);
    gr.K                  = design_state_feedback(aug.A(), aug.B());
    gr.duration           = 1.0;
    gr.duration           = 12.0 * simulate(gr, f.A[0], f.B, f.C, f.Cz).slowest_time_constant;
    const auto tg         = simulate(gr, f.A[0], f.B, f.C, f.Cz);
    CHECK(tg.e_z.row(tg.e_z.rows() - 1).norm() < 1e-6 * tg.e_z.row(0).norm());
    // Feedback gain must cover the compensator states.
    gr.K = sc.K;
    CHECK_THROWS_AS(simulate(gr, f.A[0], f.B, f.C, f.Cz), DimensionError);
}

TEST_CASE("perturbations respect the worst-plant cap") {
    const auto f = small_family(21, 3, 0.3);
    PlantSet   set(f.A, f.B, f.C, f.Cz);
    const auto P   = perturb_family(set, 0, {50.0, 80.0, 60.0}, 4);
    const double cap = sigma_max(Matrix(set.A(worst_plant_index(set, 0)) - set.A(0)));
    for (std::size_t i = 0; i < 3; ++i) {
        const double s = sigma_max(Matrix(P[i] - set.A(i)));
        CHECK(s < cap);
        CHECK(s <= 0.8 * sigma_max(set.A(i)) + 1e-12);
    }
    CHECK(perturb_family(set, 0, {50.0, 80.0, 60.0}, 4)[1] == P[1]);
}

TEST_CASE("comparison on identical plants: GRMERS falls back to MERS") {
    const auto f = small_family(30, 1, 0.0);
    PlantSet   set({f.A[0], f.A[0]}, f.B, f.C, f.Cz);
    MersOptions mo;
    mo.gamma              = 5.0;
    mo.ga.population_size = 4;
    mo.ga.max_generations = 1;
    fast_spaces(mo, 2, 2);
    const auto mers = merse_algorithm(set, mo);
    REQUIRE(mers.feasible);
    GrcOptions go;
    go.ga.population_size = 4;
    go.ga.max_generations = 1;
    const auto grc = grc_algorithm(set, mers.j, go);
    CHECK_FALSE(grc.feasible);
    std::vector<FilterDesign> filters;
    for (std::size_t i = 0; i < 2; ++i) filters.push_back(synth_hinf_filter(set.A(i), set.C(), set.Cz()));
    CompareOptions co;
    co.duration       = 5.0;
    co.noise.channels = {0, 1};
    const auto table = compare_estimators(set, mers, grc, filters, co);
    REQUIRE(table.nominal.size() == 2);
    for (const auto& row : table.nominal) {
        CHECK(row.mers == row.grmers);
        CHECK(std::isfinite(row.hinf));
    }
}

TEST_CASE("trace CSV has a named header and one row per sample") {
    auto sc     = quiet(plain_observer(M1(-1.0), M1(1.0), M1(1.0), M1(1.0), M1(1.0)), M1(0.0));
    sc.duration = 0.01;
    const auto tr = simulate(sc, M1(-1.0), M1(1.0), M1(1.0), M1(1.0));
    std::ostringstream os;
    write_trace_csv(tr, os);
    const std::string s = os.str();
    CHECK(s.rfind("t,x1,z1,zhat1,ez1\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == tr.time.size() + 1);
}
