#pragma once

#include <string>
#include <vector>

#include "simest/ga.hpp"
#include "simest/lmi.hpp"
#include "simest/nugap.hpp"
#include "simest/statespace.hpp"
#include "simest/sysnorms.hpp"

namespace simest {

/// argmax_i sigma_max(A_i - A_l), smallest index on ties.
std::size_t worst_plant_index(const PlantSet& set, std::size_t l);

struct MersSelection {
    bool                     feasible = false;  // min column norm < gamma
    std::size_t              j        = 0;
    std::vector<std::size_t> worst;             // k(l)
    std::vector<double>      column_norms;      // ||e_{P_k(l), P_l}||_inf
    GainTable                table;
};

/// Picks the estimator whose worst-plant error norm is smallest among the given gains.
MersSelection select_mers(const PlantSet& set, const std::vector<Matrix>& gains, double gamma,
                          const HinfOptions& opts = {});

/// Search range of one compensator coefficient. A free coefficient is searched on a
/// log10 scale over [lo, hi] (both positive); lo == hi pins it to that value.
struct CoefficientRange {
    double lo = 1.0;
    double hi = 1.0;

    bool free() const { return lo < hi; }
    static CoefficientRange pinned(double v) { return {v, v}; }
};

struct SectionSpace {
    CoefficientRange b1;
    CoefficientRange b0;
    CoefficientRange a0;
};

struct BankSpace {
    BankRole                  role = BankRole::estimator_post;
    std::vector<SectionSpace> sections;

    int gene_count() const;
};

/// Default search box for k sections in the given role:
/// a0 in [1e-1, 1e2], b0 in [1e-4, 1e4], b1 in [1e-4, 1e4] (pinned to 0 for gap_post).
BankSpace default_space(BankRole role, int k);

/// Maps log10 genes [offset, offset + space.gene_count()) onto a bank.
CompensatorBank decode_bank(const BankSpace& space, const Chromosome& genes, std::size_t offset = 0);

struct TheoremDiagnostic {
    std::size_t l = 0;
    std::size_t i = 0;  // plant whose error exceeds the worst plant's
    double      norm_i = 0.0;
    double      norm_k = 0.0;
};

struct MersOptions {
    double      gamma = 1.0;
    GaConfig    ga;      // bounds are filled in from the spaces
    BankSpace   pre;     // empty: default_space(estimator_pre, m)
    BankSpace   post;    // empty: default_space(estimator_post, r)
    CoefficientRange inverse_pole_band{1e-2, 1e2};  // admissible b0/b1 of W~_ei sections
    LmiOptions  lmi;
    HinfOptions hinf;
};

struct MersResult {
    bool                     feasible = false;  // J < gamma
    std::size_t              j        = 0;
    Matrix                   L;                 // gain of estimator j on the augmented set
    CompensatorBank          pre;               // W~_ei
    CompensatorBank          post;              // W~_eo
    PlantSet                 augmented;
    std::vector<std::size_t> worst;             // k(l) on the augmented set
    std::vector<double>      column_norms;      // per-candidate worst-plant norm; >= gamma when infeasible
    std::vector<bool>        column_feasible;
    std::vector<Matrix>      gains;             // L_l (empty matrix for infeasible columns)
    double                   J = 0.0;
    std::vector<double>      trace;             // GA best fitness per generation
    std::size_t              evaluations = 0;
    std::vector<TheoremDiagnostic> theorem_violations;
};

/// Per-candidate evaluation shared by the GA fitness and the final report.
struct MersEvaluation {
    PlantSet                 augmented;
    std::vector<std::size_t> worst;
    std::vector<double>      column_norms;
    std::vector<bool>        column_feasible;
    std::vector<Matrix>      gains;
    double                   J = 0.0;
    std::size_t              j = 0;
};

/// Augments the set, solves the N worst-plant observer LMIs at gamma and scores each
/// column by its achieved norm (gamma + LMI optimum when infeasible).
MersEvaluation evaluate_mers(const PlantSet& set, const CompensatorBank& pre, const CompensatorBank& post,
                             double gamma, const LmiOptions& lmi = {}, const HinfOptions& hinf = {});

/// GA over the MERS compensator coefficients; runs all generations, then accepts the best if J < gamma.
MersResult merse_algorithm(const PlantSet& set, const MersOptions& opts = {});

/// Columns of the augmented table where some plant's error exceeds the worst plant's (beyond tol).
std::vector<TheoremDiagnostic> theorem_diagnostics(const PlantSet& set, const std::vector<Matrix>& gains,
                                                   const std::vector<bool>& column_feasible, double tol = 1e-6,
                                                   const HinfOptions& hinf = {});

struct GrcOptions {
    GaConfig     ga;
    BankSpace    pre;   // empty: default_space(gap_pre, m)
    BankSpace    post;  // empty: default_space(gap_post, r)
    NuGapOptions gap;
    double       cancellation_tol = 1e-6;
};

struct GrcResult {
    bool                         feasible = false;  // J1 < baseline
    std::size_t                  j        = 0;
    CompensatorBank              w_in;
    CompensatorBank              w_ot;
    double                       J1       = 0.0;
    double                       baseline = 0.0;  // max gap of P_j over the uncompensated family
    std::vector<StateSpaceModel> augmented;
    std::vector<double>          trace;
    std::size_t                  evaluations = 0;
};

/// W_ot P_i W_in for every member.
std::vector<StateSpaceModel> augment_models(const std::vector<StateSpaceModel>& plants, const CompensatorBank& w_in,
                                            const CompensatorBank& w_ot);

/// Smallest distance between a compensator pole or zero and a plant pole or channel zero
/// it could cancel. Sections of w_in act on input channels, sections of w_ot on outputs.
double cancellation_distance(const std::vector<StateSpaceModel>& plants, const CompensatorBank& w_in,
                             const CompensatorBank& w_ot);

GrcResult grc_algorithm(const std::vector<StateSpaceModel>& plants, std::size_t j, const GrcOptions& opts = {});
GrcResult grc_algorithm(const PlantSet& set, std::size_t j, const GrcOptions& opts = {});

}  // namespace simest
