#pragma once

#include <optional>
#include <string>
#include <vector>

#include "simest/numerics.hpp"

namespace simest {

/// Continuous-time LTI system  x' = A x + B u,  y = C x + D u.
/// Immutable once constructed; zero-state (static gain) models are allowed.
class StateSpaceModel {
   public:
    StateSpaceModel() = default;
    StateSpaceModel(Matrix A, Matrix B, Matrix C, Matrix D);

    static StateSpaceModel static_gain(const Matrix& D);

    const Matrix& A() const { return a_; }
    const Matrix& B() const { return b_; }
    const Matrix& C() const { return c_; }
    const Matrix& D() const { return d_; }

    int states() const { return static_cast<int>(a_.rows()); }
    int inputs() const { return static_cast<int>(b_.cols()); }
    int outputs() const { return static_cast<int>(c_.rows()); }

   private:
    Matrix a_ = Matrix(0, 0), b_ = Matrix(0, 0), c_ = Matrix(0, 0), d_ = Matrix(0, 0);
};

/// G(s) = C (sI - A)^{-1} B + D at an arbitrary complex point.
CMatrix evaluate(const StateSpaceModel& G, Complex s);

/// G(j omega). Throws DomainError when j omega is (numerically) a pole.
CMatrix frequency_response(const StateSpaceModel& G, double omega);

/// Poles of the realization (eigenvalues of A).
Spectrum poles(const StateSpaceModel& G);

/// Finite transmission zeros of the SISO channel (output, input).
Spectrum channel_zeros(const StateSpaceModel& G, int output, int input);

/// Composition G1 o G2 (G2 drives G1). State ordering [x1 | x2].
StateSpaceModel series(const StateSpaceModel& G1, const StateSpaceModel& G2);

/// G1 + G2 on shared inputs and outputs.
StateSpaceModel parallel(const StateSpaceModel& G1, const StateSpaceModel& G2);

StateSpaceModel scaled(const StateSpaceModel& G, double alpha);

/// Realization change x -> T x.
StateSpaceModel similarity(const StateSpaceModel& G, const Matrix& T);

/// Para-hermitian conjugate G~(s) = G(-s)^T.
StateSpaceModel conjugate(const StateSpaceModel& G);

/// Finite set of plants sharing B, C and the estimated-output map C_z.
class PlantSet {
   public:
    PlantSet() = default;
    PlantSet(std::vector<Matrix> system_matrices, Matrix B, Matrix C, Matrix Cz,
             std::vector<std::string> labels = {});

    std::size_t size() const { return a_.size(); }
    const Matrix& A(std::size_t i) const { return a_.at(i); }
    const std::vector<Matrix>& system_matrices() const { return a_; }
    const Matrix& B() const { return b_; }
    const Matrix& C() const { return c_; }
    const Matrix& Cz() const { return cz_; }
    const std::vector<std::string>& labels() const { return labels_; }

    int states() const { return static_cast<int>(b_.rows()); }
    int inputs() const { return static_cast<int>(b_.cols()); }
    int outputs() const { return static_cast<int>(c_.rows()); }
    int estimated() const { return static_cast<int>(cz_.rows()); }

    /// Plant i as (A_i, B, C, 0).
    StateSpaceModel plant(std::size_t i) const;

    /// True when [C; C_z] is a square invertible map (measured + estimated = full state).
    bool complementary_outputs() const;

   private:
    std::vector<Matrix>      a_;
    Matrix                   b_, c_, cz_;
    std::vector<std::string> labels_;
};

/// PBH rank tests on the closed right half-plane.
bool is_stabilizable(const Matrix& A, const Matrix& B);
bool is_detectable(const Matrix& A, const Matrix& C);

/// One first-order section (b1 s + b0) / (s + a0).
struct Section {
    double b1 = 0.0;
    double b0 = 1.0;
    double a0 = 1.0;
};

/// Which compensator slot a bank fills; each slot carries its own admissibility rules.
enum class BankRole {
    estimator_pre,   // stable and stably invertible
    estimator_post,  // stable
    gap_pre,         // stable
    gap_post,        // stable and strictly proper
};

struct CompensatorBank {
    std::vector<Section> sections;
    BankRole             role = BankRole::estimator_post;

    int size() const { return static_cast<int>(sections.size()); }
};

/// Throws ValidationError naming the first section that violates the role's rules.
void validate_bank(const CompensatorBank& bank);

/// k sections that are each the identity map (1, a0, a0); used as neutral placeholders.
CompensatorBank identity_bank(int k, BankRole role, double a0 = 1.0);

/// Diagonal realization, one state per section.
StateSpaceModel realize_bank(const CompensatorBank& bank);

/// Section-wise inverse (s + a0) / (b1 s + b0), still a first-order bank.
CompensatorBank inverted(const CompensatorBank& bank);

/// Realization of diag((s + a0) / (b1 s + b0)). Requires b1 != 0 and b0/b1 > 0.
StateSpaceModel invert_bank(const CompensatorBank& bank);

/// Estimation-error dynamics of estimator l (built on A_l with gain L) tracking plant i.
/// Input d = [x_i; v] with widths (n, r); output e_z.
struct ErrorSystem {
    StateSpaceModel model;
    int             state_width = 0;
    int             noise_width = 0;
};

ErrorSystem build_error_system(const Matrix& A_i, const Matrix& A_l, const Matrix& C, const Matrix& Cz,
                               const Matrix& L);
ErrorSystem build_error_system(const StateSpaceModel& plant_i, const StateSpaceModel& estimator_base,
                               const Matrix& Cz, const Matrix& L);

/// post o plant o pre with states ordered [post | plant | pre].
StateSpaceModel augment_plant(const StateSpaceModel& plant, const CompensatorBank& pre,
                              const CompensatorBank& post);

/// Applies augment_plant to every member; C_z becomes [0 | C_z | 0].
PlantSet augment_set(const PlantSet& set, const CompensatorBank& pre, const CompensatorBank& post);

}  // namespace simest
