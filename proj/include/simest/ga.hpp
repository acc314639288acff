#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace simest {

using Chromosome = std::vector<double>;

/// Real-coded GA: tournament selection, blend (BLX-alpha) crossover, Gaussian
/// mutation and elitism. Minimizes the fitness.
struct GaConfig {
    int                 population_size   = 32;
    int                 max_generations   = 50;
    double              crossover_rate    = 0.9;
    double              mutation_rate     = 0.2;   // per gene
    int                 elite_count       = 2;
    std::uint64_t       rng_seed          = 1;
    std::vector<double> lower;
    std::vector<double> upper;
    int                 tournament_size   = 3;
    double              blend_alpha       = 0.5;
    double              mutation_sigma    = 0.05;  // fraction of the box width
    int                 max_rejections    = 200;   // per individual, when sampling valid candidates

    /// Throws ValidationError on an inconsistent configuration.
    void validate() const;
};

struct GaResult {
    Chromosome          best;
    double              best_fitness = 0.0;
    std::vector<double> trace;        // best fitness after each generation (index 0 = initial population)
    std::size_t         evaluations = 0;
};

using FitnessFn    = std::function<double(const Chromosome&)>;
using ConstraintFn = std::function<bool(const Chromosome&)>;

/// Deterministic for a fixed seed. NaN fitness values rank as +inf.
/// Throws SynthesisError if no valid initial candidate can be sampled.
GaResult ga_optimize(const FitnessFn& fitness, const ConstraintFn& valid, const GaConfig& config);

}  // namespace simest
