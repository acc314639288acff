#include "simest/statespace.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace simest {

namespace {

std::string shape(const Matrix& M) {
    return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

}  // namespace

StateSpaceModel::StateSpaceModel(Matrix A, Matrix B, Matrix C, Matrix D)
    : a_(std::move(A)), b_(std::move(B)), c_(std::move(C)), d_(std::move(D)) {
    require_square(a_, "StateSpaceModel(A)");
    const auto n = a_.rows();
    if (b_.rows() != n) throw DimensionError("StateSpaceModel: B is " + shape(b_) + ", A is " + shape(a_));
    if (c_.cols() != n) throw DimensionError("StateSpaceModel: C is " + shape(c_) + ", A is " + shape(a_));
    if (d_.rows() != c_.rows() || d_.cols() != b_.cols()) {
        throw DimensionError("StateSpaceModel: D is " + shape(d_) + ", expected " + std::to_string(c_.rows()) +
                             "x" + std::to_string(b_.cols()));
    }
    require_finite(a_, "StateSpaceModel(A)");
    require_finite(b_, "StateSpaceModel(B)");
    require_finite(c_, "StateSpaceModel(C)");
    require_finite(d_, "StateSpaceModel(D)");
}

StateSpaceModel StateSpaceModel::static_gain(const Matrix& D) {
    return StateSpaceModel(Matrix(0, 0), Matrix(0, D.cols()), Matrix(D.rows(), 0), D);
}

CMatrix evaluate(const StateSpaceModel& G, Complex s) {
    const int n = G.states();
    CMatrix   out = G.D().cast<Complex>();
    if (n == 0) return out;
    CMatrix M = -G.A().cast<Complex>();
    M.diagonal().array() += s;
    Eigen::PartialPivLU<CMatrix> lu(M);
    const double rc = lu.rcond();
    if (!(rc > 1e3 * std::numeric_limits<double>::epsilon())) {
        throw DomainError("frequency response evaluated at a pole");
    }
    out.noalias() += G.C().cast<Complex>() * lu.solve(G.B().cast<Complex>());
    return out;
}

CMatrix frequency_response(const StateSpaceModel& G, double omega) { return evaluate(G, Complex(0.0, omega)); }

Spectrum poles(const StateSpaceModel& G) { return eigenvalues(G.A()); }

Spectrum channel_zeros(const StateSpaceModel& G, int output, int input) {
    const int n = G.states();
    if (output < 0 || output >= G.outputs() || input < 0 || input >= G.inputs()) {
        throw DimensionError("channel_zeros: channel index out of range");
    }
    if (n == 0) return {};
    Matrix P = Matrix::Zero(n + 1, n + 1);
    Matrix E = Matrix::Zero(n + 1, n + 1);
    P.topLeftCorner(n, n)    = G.A();
    P.topRightCorner(n, 1)   = G.B().col(input);
    P.bottomLeftCorner(1, n) = -G.C().row(output);
    P(n, n)                  = -G.D()(output, input);
    E.topLeftCorner(n, n).setIdentity();
    // Zeros: generalized eigenvalues of (P, E) with finite value.
    Eigen::GeneralizedEigenSolver<Matrix> ges(P, E, false);
    Spectrum    out;
    const auto  alphas = ges.alphas();
    const auto  betas  = ges.betas();
    const double scale = std::max(P.norm(), 1.0);
    for (Eigen::Index k = 0; k < alphas.size(); ++k) {
        if (std::abs(betas(k)) <= 1e-10 * scale) continue;
        const Complex z = alphas(k) / betas(k);
        if (std::abs(z) > 1e10 * scale) continue;
        out.push_back(z);
    }
    return out;
}

StateSpaceModel series(const StateSpaceModel& G1, const StateSpaceModel& G2) {
    if (G2.outputs() != G1.inputs()) {
        throw DimensionError("series: G2 has " + std::to_string(G2.outputs()) + " outputs but G1 takes " +
                             std::to_string(G1.inputs()) + " inputs");
    }
    const int n1 = G1.states(), n2 = G2.states();
    Matrix    A  = Matrix::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1)      = G1.A();
    A.topRightCorner(n1, n2)     = G1.B() * G2.C();
    A.bottomRightCorner(n2, n2)  = G2.A();
    Matrix B(n1 + n2, G2.inputs());
    B << G1.B() * G2.D(), G2.B();
    Matrix C(G1.outputs(), n1 + n2);
    C << G1.C(), G1.D() * G2.C();
    return StateSpaceModel(std::move(A), std::move(B), std::move(C), G1.D() * G2.D());
}

StateSpaceModel parallel(const StateSpaceModel& G1, const StateSpaceModel& G2) {
    if (G1.inputs() != G2.inputs() || G1.outputs() != G2.outputs()) {
        throw DimensionError("parallel: models have different input/output widths");
    }
    const int n1 = G1.states(), n2 = G2.states();
    Matrix    A  = Matrix::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1)     = G1.A();
    A.bottomRightCorner(n2, n2) = G2.A();
    Matrix B(n1 + n2, G1.inputs());
    B << G1.B(), G2.B();
    Matrix C(G1.outputs(), n1 + n2);
    C << G1.C(), G2.C();
    return StateSpaceModel(std::move(A), std::move(B), std::move(C), G1.D() + G2.D());
}

StateSpaceModel scaled(const StateSpaceModel& G, double alpha) {
    return StateSpaceModel(G.A(), G.B(), alpha * G.C(), alpha * G.D());
}

StateSpaceModel similarity(const StateSpaceModel& G, const Matrix& T) {
    if (T.rows() != G.states() || T.cols() != G.states()) throw DimensionError("similarity: T has wrong size");
    Eigen::PartialPivLU<Matrix> lu(T);
    if (!(lu.rcond() > 1e-14)) throw ValidationError("similarity: T is singular");
    const Matrix Ti = lu.inverse();
    return StateSpaceModel(T * G.A() * Ti, T * G.B(), G.C() * Ti, G.D());
}

StateSpaceModel conjugate(const StateSpaceModel& G) {
    return StateSpaceModel(-G.A().transpose(), G.C().transpose(), -G.B().transpose(), G.D().transpose());
}

PlantSet::PlantSet(std::vector<Matrix> system_matrices, Matrix B, Matrix C, Matrix Cz,
                   std::vector<std::string> labels)
    : a_(std::move(system_matrices)), b_(std::move(B)), c_(std::move(C)), cz_(std::move(Cz)),
      labels_(std::move(labels)) {
    if (a_.empty()) throw ValidationError("PlantSet: at least one plant is required");
    const auto n = b_.rows();
    require_finite(b_, "PlantSet(B)");
    require_finite(c_, "PlantSet(C)");
    require_finite(cz_, "PlantSet(C_z)");
    if (c_.cols() != n) throw DimensionError("PlantSet: C is " + shape(c_) + " but B has " + std::to_string(n) + " rows");
    if (cz_.cols() != n) throw DimensionError("PlantSet: C_z is " + shape(cz_) + " but B has " + std::to_string(n) + " rows");
    if (cz_.rows() > n) throw DimensionError("PlantSet: C_z has more rows than there are states");
    if (labels_.empty()) {
        for (std::size_t i = 0; i < a_.size(); ++i) labels_.push_back("P" + std::to_string(i + 1));
    }
    if (labels_.size() != a_.size()) throw ValidationError("PlantSet: label count differs from plant count");
    for (std::size_t i = 0; i < a_.size(); ++i) {
        const std::string who = "plant " + std::to_string(i + 1);
        if (a_[i].rows() != n || a_[i].cols() != n) {
            throw DimensionError("PlantSet: A of " + who + " is " + shape(a_[i]) + ", expected " +
                                 std::to_string(n) + "x" + std::to_string(n));
        }
        require_finite(a_[i], "PlantSet(A of " + who + ")");
        if (!is_stabilizable(a_[i], b_)) throw ValidationError("PlantSet: (A, B) of " + who + " is not stabilizable");
        if (!is_detectable(a_[i], c_)) throw ValidationError("PlantSet: (A, C) of " + who + " is not detectable");
    }
}

StateSpaceModel PlantSet::plant(std::size_t i) const {
    return StateSpaceModel(a_.at(i), b_, c_, Matrix::Zero(c_.rows(), b_.cols()));
}

bool PlantSet::complementary_outputs() const {
    if (c_.rows() + cz_.rows() != states()) return false;
    Matrix S(states(), states());
    S << c_, cz_;
    return Eigen::FullPivLU<Matrix>(S).isInvertible();
}

namespace {

// Smallest singular value of [lambda I - A; C] (or its dual) at every closed-RHP eigenvalue.
bool pbh_full_rank(const Matrix& A, const Matrix& M, bool rows) {
    const int n = static_cast<int>(A.rows());
    if (n == 0) return true;
    const double scale = std::max({A.norm(), M.norm(), 1.0});
    for (const auto& l : eigenvalues(A)) {
        if (l.real() < 0.0) continue;
        CMatrix P;
        if (rows) {
            P.resize(n + M.rows(), n);
            CMatrix top = -A.cast<Complex>();
            top.diagonal().array() += l;
            P << top, M.cast<Complex>();
        } else {
            P.resize(n, n + M.cols());
            CMatrix left = -A.cast<Complex>();
            left.diagonal().array() += l;
            P << left, M.cast<Complex>();
        }
        Eigen::JacobiSVD<CMatrix> svd(P);
        const auto& s = svd.singularValues();
        if (s(s.size() - 1) <= 1e-10 * scale) return false;
    }
    return true;
}

}  // namespace

bool is_stabilizable(const Matrix& A, const Matrix& B) { return pbh_full_rank(A, B, false); }
bool is_detectable(const Matrix& A, const Matrix& C) { return pbh_full_rank(A, C, true); }

void validate_bank(const CompensatorBank& bank) {
    for (std::size_t k = 0; k < bank.sections.size(); ++k) {
        const Section& s   = bank.sections[k];
        const auto     who = "section " + std::to_string(k + 1);
        if (!std::isfinite(s.b1) || !std::isfinite(s.b0) || !std::isfinite(s.a0)) {
            throw ValidationError(who + ": non-finite coefficient");
        }
        if (!(s.a0 > 0.0)) throw ValidationError(who + ": a0 must be positive (pole in the left half-plane)");
        switch (bank.role) {
            case BankRole::estimator_pre:
                if (!(s.b1 > 0.0)) throw ValidationError(who + ": b1 must be positive for an invertible compensator");
                if (!(s.b0 / s.b1 > 0.0)) throw ValidationError(who + ": b0/b1 must be positive for a stable inverse");
                break;
            case BankRole::gap_post:
                if (s.b1 != 0.0) throw ValidationError(who + ": b1 must be zero (strictly proper compensator)");
                break;
            case BankRole::estimator_post:
            case BankRole::gap_pre:
                break;
        }
    }
}

CompensatorBank identity_bank(int k, BankRole role, double a0) {
    CompensatorBank bank;
    bank.role = role;
    bank.sections.assign(static_cast<std::size_t>(k), Section{1.0, a0, a0});
    return bank;
}

StateSpaceModel realize_bank(const CompensatorBank& bank) {
    validate_bank(bank);
    const int k = bank.size();
    Matrix    A = Matrix::Zero(k, k), B = Matrix::Identity(k, k), C = Matrix::Zero(k, k), D = Matrix::Zero(k, k);
    for (int i = 0; i < k; ++i) {
        const Section& s = bank.sections[static_cast<std::size_t>(i)];
        A(i, i)          = -s.a0;
        C(i, i)          = s.b0 - s.b1 * s.a0;
        D(i, i)          = s.b1;
    }
    return StateSpaceModel(A, B, C, D);
}

CompensatorBank inverted(const CompensatorBank& bank) {
    CompensatorBank out;
    out.role = bank.role;
    for (std::size_t k = 0; k < bank.sections.size(); ++k) {
        const Section& s = bank.sections[k];
        if (s.b1 == 0.0) {
            throw ValidationError("section " + std::to_string(k + 1) + ": b1 = 0, inverse is not proper");
        }
        if (!(s.b0 / s.b1 > 0.0)) {
            throw ValidationError("section " + std::to_string(k + 1) + ": inverse has an unstable pole");
        }
        out.sections.push_back(Section{1.0 / s.b1, s.a0 / s.b1, s.b0 / s.b1});
    }
    return out;
}

StateSpaceModel invert_bank(const CompensatorBank& bank) {
    CompensatorBank inv = inverted(bank);
    // The inverse of a bank is admissible as a plain stable filter whatever its slot.
    inv.role = BankRole::estimator_post;
    return realize_bank(inv);
}

ErrorSystem build_error_system(const Matrix& A_i, const Matrix& A_l, const Matrix& C, const Matrix& Cz,
                               const Matrix& L) {
    const auto n = A_l.rows();
    if (A_i.rows() != n || A_i.cols() != n || A_l.cols() != n) throw DimensionError("build_error_system: A sizes differ");
    if (C.cols() != n || Cz.cols() != n) throw DimensionError("build_error_system: C or C_z width differs from n");
    if (L.rows() != n || L.cols() != C.rows()) {
        throw DimensionError("build_error_system: L is " + shape(L) + ", expected " + std::to_string(n) + "x" +
                             std::to_string(C.rows()));
    }
    const auto r = C.rows();
    Matrix     B(n, n + r);
    B << A_i - A_l, -L;
    ErrorSystem out{StateSpaceModel(A_l - L * C, std::move(B), Cz, Matrix::Zero(Cz.rows(), n + r)),
                    static_cast<int>(n), static_cast<int>(r)};
    return out;
}

ErrorSystem build_error_system(const StateSpaceModel& plant_i, const StateSpaceModel& estimator_base,
                               const Matrix& Cz, const Matrix& L) {
    return build_error_system(plant_i.A(), estimator_base.A(), estimator_base.C(), Cz, L);
}

StateSpaceModel augment_plant(const StateSpaceModel& plant, const CompensatorBank& pre,
                              const CompensatorBank& post) {
    if (pre.size() != plant.inputs()) {
        throw DimensionError("augment_plant: pre-compensator has " + std::to_string(pre.size()) +
                             " sections, plant has " + std::to_string(plant.inputs()) + " inputs");
    }
    if (post.size() != plant.outputs()) {
        throw DimensionError("augment_plant: post-compensator has " + std::to_string(post.size()) +
                             " sections, plant has " + std::to_string(plant.outputs()) + " outputs");
    }
    return series(realize_bank(post), series(plant, realize_bank(pre)));
}

PlantSet augment_set(const PlantSet& set, const CompensatorBank& pre, const CompensatorBank& post) {
    std::vector<Matrix> As;
    Matrix              B, C;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto aug = augment_plant(set.plant(i), pre, post);
        As.push_back(aug.A());
        if (i == 0) {
            B = aug.B();
            C = aug.C();
        }
    }
    const int post_states = post.size(), pre_states = pre.size();
    Matrix    Cz          = Matrix::Zero(set.estimated(), post_states + set.states() + pre_states);
    Cz.middleCols(post_states, set.states()) = set.Cz();
    return PlantSet(std::move(As), std::move(B), std::move(C), std::move(Cz), set.labels());
}

}  // namespace simest
