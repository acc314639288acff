#pragma once

#include <vector>

#include "simest/statespace.hpp"

namespace simest {

enum class NormMethod { bisection, grid };

struct NormResult {
    double     value          = 0.0;
    double     peak_frequency = 0.0;  // rad/s; +inf when the peak is at infinite frequency
    NormMethod method         = NormMethod::bisection;
    double     lower_bound    = 0.0;  // attained sigma_max; value - lower_bound <= rel_tol * lower_bound
};

struct HinfOptions {
    double rel_tol       = 1e-6;
    double axis_tol      = 1e-8;  // |Re lambda| < axis_tol * ||H|| counts as imaginary
    int    max_iterations = 200;
};

/// H-infinity norm by bisection on the Hamiltonian imaginary-axis test. The reported
/// value is the certified upper end of the final bracket.
/// Throws DomainError for non-Hurwitz A and NumericError if no upper bracket is found.
NormResult hinf_norm(const StateSpaceModel& G, const HinfOptions& opts = {});

/// max over the grid of sigma_max(G(j omega)). Throws DomainError for non-Hurwitz A.
NormResult grid_norm(const StateSpaceModel& G, const std::vector<double>& grid);

/// n log-spaced points in [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

/// True when some singular value of G(j omega) is within rel of gamma.
bool is_level_crossing(const StateSpaceModel& G, double omega, double gamma, double rel = 1e-6);

/// Frequencies where sigma_max(G(j w)) = gamma, from the Hamiltonian spectrum.
std::vector<double> level_crossings(const StateSpaceModel& G, double gamma, const HinfOptions& opts = {});

/// N x N table, entry (i, l) = ||e_{P_i, P_l}||_inf with gain L_l. Columns whose
/// closed-loop error matrix A_l - L_l C is not Hurwitz are filled with +inf.
struct GainTable {
    Matrix            values;
    std::vector<bool> column_feasible;

    /// Largest entry of column l (Eq.-16-style worst case).
    double column_max(std::size_t l) const;
    std::size_t column_argmax(std::size_t l) const;
};

GainTable worst_case_gain_matrix(const PlantSet& set, const std::vector<Matrix>& gains, const HinfOptions& opts = {});

}  // namespace simest
