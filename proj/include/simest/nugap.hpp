#pragma once

#include <vector>

#include "simest/statespace.hpp"

namespace simest {

/// Normalized right coprime factors P = N M^{-1} sharing the state of `graph`.
/// `graph` realizes [M; N] with inputs m and outputs m + p.
struct CoprimeFactors {
    StateSpaceModel M;
    StateSpaceModel N;
    StateSpaceModel graph;
    Matrix          F;  // state feedback that produced the factors
};

CoprimeFactors normalized_rcf(const StateSpaceModel& P);

/// Largest deviation of M~M + N~N from I over the given frequencies.
double normalization_error(const CoprimeFactors& f, const std::vector<double>& omegas);

struct NuGapOptions {
    int    grid_points     = 512;
    double omega_lo        = 1e-3;
    double omega_hi        = 1e3;
    bool   widen_to_poles  = true;   // extend the grid to cover the plants' natural frequencies
    int    refine_peaks    = 3;      // golden-section refinement around this many best samples
    double axis_pole_tol   = 1e-7;   // poles this close to the imaginary axis are rejected
    double axis_zero_tol   = 1e-9;   // relative test for det(I + P2~ P1) vanishing on the axis
};

struct GapResult {
    double value                 = 0.0;
    bool   winding_condition_met = true;
    double peak_frequency        = 0.0;
    int    winding_number        = 0;  // wno det(I + P2~ P1)
};

/// Pointwise chordal distance between P1(j w) and P2(j w). Use +inf for w = infinity.
double chordal_distance(const StateSpaceModel& P1, const StateSpaceModel& P2, double omega);
double chordal_distance(const CMatrix& P1, const CMatrix& P2);

/// Number of open right half-plane poles of the realization.
int unstable_pole_count(const StateSpaceModel& P);

/// Winding number of det(I + P2~ P1) about the origin along the imaginary axis,
/// counted as (RHP zeros) - (RHP poles). Throws DomainError if the determinant
/// vanishes on the axis or at infinity.
int gap_winding_number(const StateSpaceModel& P1, const StateSpaceModel& P2, const NuGapOptions& opts = {});

/// Same quantity from the unwrapped phase of det(I + P2~(j w) P1(j w)) along an adaptive grid.
int gap_winding_number_by_phase(const StateSpaceModel& P1, const StateSpaceModel& P2, const NuGapOptions& opts = {});

GapResult nu_gap(const StateSpaceModel& P1, const StateSpaceModel& P2, const NuGapOptions& opts = {});

/// max over i of nu_gap(P_j, P_i); the i = j term contributes zero.
double max_gap(const std::vector<StateSpaceModel>& plants, std::size_t j, const NuGapOptions& opts = {});
double max_gap(const PlantSet& set, std::size_t j, const NuGapOptions& opts = {});

/// Symmetric table of pairwise gaps.
Matrix gap_table(const std::vector<StateSpaceModel>& plants, const NuGapOptions& opts = {});

std::vector<StateSpaceModel> members(const PlantSet& set);

}  // namespace simest
