#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "simest/lmi.hpp"
#include "simest/statespace.hpp"
#include "simest/synthesis.hpp"

namespace simest {

// ---- state feedback -------------------------------------------------------

struct FeedbackOptions {
    double        scale         = 2.0;  // target |lambda| multiplier after reflection
    double        min_damping   = 0.4;
    double        min_magnitude = 0.5;  // floor on |Re lambda| before scaling
    std::uint64_t seed          = 7;    // draws the free parameter of the Sylvester placement
};

/// Static gain K with eig(A - B K) = reflected and scaled eig(A). Throws SynthesisError
/// when (A, B) is not stabilizable or the placement fails.
Matrix design_state_feedback(const Matrix& A, const Matrix& B, const FeedbackOptions& opts = {});

// ---- scenarios ------------------------------------------------------------

enum class EstimatorKind { mers, grmers, hinf_filter };

std::string to_string(EstimatorKind kind);

/// amplitude on [start, start + width), -amplitude on the next width seconds.
struct Doublet {
    double amplitude = 0.1;
    int    channel   = 1;  // thrust command
    double start     = 1.0;
    double width     = 1.0;

    double value(double t) const;
};

/// Zero-mean Gaussian measurement noise, drawn once per integration step. The
/// per-sample standard deviation equals `rms`; `spectral_density` is carried as metadata.
struct NoiseSpec {
    std::vector<int> channels{0, 2, 3};       // p, q, r rate-gyro outputs of the NAV measurement vector
    double           rms              = 0.06 * 3.14159265358979323846 / 180.0;  // rad/s
    double           spectral_density = 0.005;                                   // (deg/s)/sqrt(Hz)
    std::uint64_t    seed             = 1;
    bool             enabled          = true;
};

/// Luenberger observer x' = A x + B u + L (y - C x), estimate z = Cz x, optionally wrapped
/// in the MERS compensators: the observer then sees W_pre^{-1} u and W_post y.
struct ObserverDesign {
    Matrix          A, B, C, Cz, L;
    CompensatorBank pre;   // empty: no input compensation
    CompensatorBank post;  // empty: no output compensation
};

ObserverDesign mers_observer(const MersResult& mers);
ObserverDesign plain_observer(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& Cz, const Matrix& L);

struct SimulationScenario {
    EstimatorKind   kind = EstimatorKind::mers;
    ObserverDesign  observer;
    CompensatorBank w_in;  // GRMERS only
    CompensatorBank w_ot;  // GRMERS only
    Matrix          K;     // acts on x_hat, or on [x_ot | x_hat | x_in] for GRMERS
    double          duration = 20.0;
    double          step     = 1e-3;
    Doublet         input;
    NoiseSpec       noise;
    Vector          x0;       // plant initial state; empty = 0
    Vector          xhat0;    // observer initial state; empty = 0

    /// Throws ValidationError on a bad step/horizon or noise channels outside the measurement.
    void validate(int outputs) const;
};

struct SimulationTrace {
    Vector time;
    Matrix x;      // samples x n
    Matrix z;      // true estimated outputs
    Matrix z_hat;
    Matrix e_z;
    Matrix u;      // plant input
    Matrix y;      // measurement including noise
    Matrix v;      // noise
    bool   diverged          = false;
    bool   horizon_adequate  = true;  // duration >= 10 x slowest closed-loop time constant
    double slowest_time_constant = 0.0;
    long   substeps = 1;  // RK4 steps per recorded step (raised for stiff loops)
};

/// Fixed-step RK4 of plant (A_true, B, C, Cz), observer, compensators and feedback.
/// Exogenous inputs are held over each step; the step is subdivided when the closed
/// loop's spectral radius would put RK4 outside its stability region. Throws DomainError if the closed loop
/// is not Hurwitz. Integration stops with `diverged` set once |state| > 1e9.
SimulationTrace simulate(const SimulationScenario& scenario, const Matrix& A_true, const Matrix& B, const Matrix& C,
                         const Matrix& Cz);

/// Closed-loop system matrix used by simulate (state, then exogenous [reference; noise] map).
struct ClosedLoop {
    Matrix M;
    Matrix E;
    int    state_dim = 0;
};
ClosedLoop closed_loop(const SimulationScenario& scenario, const Matrix& A_true, const Matrix& B, const Matrix& C,
                       const Matrix& Cz);

// ---- metrics --------------------------------------------------------------

struct NrmseReport {
    Vector            channels;   // NaN for undefined channels
    std::vector<bool> defined;
    double            norm2 = 0.0;  // over defined channels
    std::vector<std::string> warnings;
};

/// Per channel sqrt(mean((z - z_hat)^2)) / (max z - min z).
NrmseReport nrmse(const Matrix& truth, const Matrix& estimate);
NrmseReport nrmse(const SimulationTrace& trace);

/// ||e_z||_2 / ||[x; v]||_2 over the run (rectangle rule).
double empirical_rms_gain(const SimulationTrace& trace);

void write_trace_csv(const SimulationTrace& trace, std::ostream& out);

// ---- comparison -----------------------------------------------------------

/// Random dA_i with sigma_max(dA_i) = percent_i/100 * sigma_max(A_i), capped strictly below
/// the worst-plant mismatch of estimator base j.
std::vector<Matrix> perturb_family(const PlantSet& set, std::size_t j, const std::vector<double>& percent,
                                   std::uint64_t seed);

struct ComparisonRow {
    std::string label;
    double      mers   = 0.0;  // ||z^e||_2; NaN when the run diverged or was rejected
    double      grmers = 0.0;
    double      hinf   = 0.0;
    double      gr_vs_mers_percent = 0.0;  // 100 (1 - grmers / mers)
    double      gr_vs_hinf_percent = 0.0;  // 100 (1 - grmers / hinf)
};

struct LabeledTrace {
    std::string     name;  // <nominal|perturbed>_<plant label>_<estimator>
    SimulationTrace trace;
};

struct ComparisonTable {
    std::size_t                base = 0;
    std::vector<ComparisonRow> nominal;
    std::vector<ComparisonRow> perturbed;
    std::vector<Matrix>        perturbed_A;
    std::vector<LabeledTrace>  traces;  // filled only with CompareOptions::keep_traces
};

struct CompareOptions {
    double              duration = 20.0;
    double              step     = 1e-3;
    Doublet             input;
    NoiseSpec           noise;
    std::vector<double> perturbation_percent{8.5, 13.0, 10.0, 5.0};
    std::uint64_t       seed = 1;
    FeedbackOptions     feedback;
    bool                keep_traces = false;
};

/// Runs MERS, GRMERS (GR compensators used only when grc.feasible) and each plant's own
/// H-infinity filter on every nominal and perturbed plant with shared noise seeds.
/// Plant i is stabilized by a gain designed on its nominal model (augmented with the GR
/// compensators for GRMERS); the perturbed run of plant i reuses that gain.
ComparisonTable compare_estimators(const PlantSet& set, const MersResult& mers, const GrcResult& grc,
                                   const std::vector<FilterDesign>& filters, const CompareOptions& opts = {});

}  // namespace simest
