#pragma once

#include "simest/statespace.hpp"

namespace simest {

/// Bounded-real-lemma observer LMI for one estimator base A_l and one plant
/// difference dA = A_k - A_l:
///
///   [ QA + A'Q - YC - C'Y'   QB - YD   Cz' ]
///   [        *               -g I      0   ]  < 0,   Q > 0,
///   [        *                 *      -g I ]
///
/// with B = [dA 0], D = [0 I_r]. The gain is L = Q^{-1} Y.
struct ObserverLmiProblem {
    Matrix A;      // estimator base A_l (n x n)
    Matrix C;      // measurement map (r x n)
    Matrix Cz;     // estimated-output map (q x n)
    Matrix dA;     // A_k - A_l (n x n)
    double gamma = 1.0;

    int states() const { return static_cast<int>(A.rows()); }
    int measurements() const { return static_cast<int>(C.rows()); }
    int estimated() const { return static_cast<int>(Cz.rows()); }

    Matrix Bbreve() const;
    Matrix Dbreve() const;

    /// Throws DimensionError / ValidationError on malformed data or gamma <= 0.
    void validate() const;
};

ObserverLmiProblem make_observer_problem(const Matrix& A_l, const Matrix& A_k, const Matrix& C, const Matrix& Cz,
                                         double gamma);

/// Assembled LMI block for given (Q, Y).
Matrix observer_lmi_block(const ObserverLmiProblem& prob, const Matrix& Q, const Matrix& Y);

struct LmiCertificate {
    Matrix Q;
    Matrix Y;
    Matrix L;
    double gamma  = 0.0;
    double margin = 0.0;  // -lambda_max of the assembled block
};

struct LmiOptions {
    double epsilon_scale  = 1e-6;   // Q >= eps I with eps = epsilon_scale * max(||A||, 1)
    double q_bound        = 1e4;    // Q <= q_bound I keeps the feasible set compact
    double barrier_growth = 5.0;
    int    max_outer      = 200;
    int    max_newton     = 60;
    double gap_tol        = 1e-8;   // stop when the barrier duality gap is below this (absolute, in t)
    double stop_margin    = 1e-3;   // stop as soon as t < -stop_margin; 0 runs to gap_tol (drives Q to its bounds)
};

struct LmiOutcome {
    bool           feasible = false;
    double         best_t   = 0.0;  // smallest attained max eigenvalue of the block
    double         lower_t  = 0.0;  // certified lower bound on the optimum
    int            newton_steps = 0;
    int            outer_steps  = 0;
    LmiCertificate certificate;     // meaningful only when feasible
};

/// Minimizes t subject to F(Q, Y) <= t I, eps I <= Q <= q_bound I by a primal
/// log-det barrier method. Feasible iff the optimum is negative.
/// Throws NumericError if the Newton iteration breaks down.
LmiOutcome solve_observer_lmi(const ObserverLmiProblem& prob, const LmiOptions& opts = {});

struct CertificateCheck {
    bool        verified      = false;
    double      margin        = 0.0;
    double      min_eig_q     = 0.0;
    double      achieved_norm = 0.0;
    bool        closed_loop_stable = false;
    std::string diagnostics;
};

/// Rebuilds the block from (Q, Y), checks its eigenvalues and Q > 0, then
/// confirms ||e||_inf < gamma on the worst-plant error system built from L.
CertificateCheck verify_certificate(const LmiCertificate& cert, const ObserverLmiProblem& prob);

struct FilterDesign {
    Matrix L;
    double gamma         = 0.0;  // smallest feasible gamma found
    double achieved_norm = 0.0;  // ||e||_inf of the noise-to-error system with L
    LmiCertificate certificate;
};

struct FilterOptions {
    double gamma_floor = 1e-6;
    double gamma_cap   = 1e3;
    double rel_tol     = 1e-3;
    LmiOptions lmi{};
};

/// Noise-only H-infinity filter: bisection on gamma over the observer LMI with dA = 0.
/// Throws SynthesisError if no gamma below the cap is feasible.
FilterDesign synth_hinf_filter(const Matrix& A, const Matrix& C, const Matrix& Cz, const FilterOptions& opts = {});

}  // namespace simest
