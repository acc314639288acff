#include "simest/ga.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "simest/errors.hpp"

namespace simest {

void GaConfig::validate() const {
    if (population_size < 4) throw ValidationError("GaConfig: population_size must be at least 4");
    if (max_generations < 0) throw ValidationError("GaConfig: max_generations must be non-negative");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw ValidationError("GaConfig: crossover_rate outside [0, 1]");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ValidationError("GaConfig: mutation_rate outside [0, 1]");
    if (elite_count < 0 || elite_count >= population_size) throw ValidationError("GaConfig: elite_count out of range");
    if (tournament_size < 1) throw ValidationError("GaConfig: tournament_size must be positive");
    if (lower.empty() || lower.size() != upper.size()) throw ValidationError("GaConfig: bounds missing or of different length");
    for (std::size_t k = 0; k < lower.size(); ++k) {
        if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || !(lower[k] < upper[k])) {
            throw ValidationError("GaConfig: gene " + std::to_string(k) + " needs finite bounds with lower < upper");
        }
    }
}

namespace {

struct Individual {
    Chromosome genes;
    double     fitness;
};

double rank_value(double f) { return std::isnan(f) ? std::numeric_limits<double>::infinity() : f; }

}  // namespace

GaResult ga_optimize(const FitnessFn& fitness, const ConstraintFn& valid, const GaConfig& cfg) {
    cfg.validate();
    const std::size_t dim = cfg.lower.size();
    std::mt19937_64   rng(cfg.rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double>       gauss(0.0, 1.0);
    GaResult                               res;

    auto clamp = [&](Chromosome& c) {
        for (std::size_t k = 0; k < dim; ++k) c[k] = std::clamp(c[k], cfg.lower[k], cfg.upper[k]);
    };
    auto evaluate = [&](const Chromosome& c) {
        ++res.evaluations;
        return rank_value(fitness(c));
    };
    auto sample = [&]() {
        Chromosome c(dim);
        for (std::size_t k = 0; k < dim; ++k) c[k] = cfg.lower[k] + unit(rng) * (cfg.upper[k] - cfg.lower[k]);
        return c;
    };

    std::vector<Individual> pop;
    int                     misses = 0;
    const int               budget = cfg.max_rejections * cfg.population_size;
    while (static_cast<int>(pop.size()) < cfg.population_size && misses < budget) {
        Chromosome c = sample();
        if (!valid(c)) {
            ++misses;
            continue;
        }
        pop.push_back({c, 0.0});
    }
    if (pop.empty()) throw SynthesisError("ga_optimize: no valid initial candidate found");
    // Fill any shortfall with copies so the population size stays fixed.
    for (std::size_t k = 0; static_cast<int>(pop.size()) < cfg.population_size; ++k) pop.push_back(pop[k]);
    for (auto& ind : pop) ind.fitness = evaluate(ind.genes);

    auto by_fitness = [](const Individual& a, const Individual& b) { return a.fitness < b.fitness; };
    std::stable_sort(pop.begin(), pop.end(), by_fitness);
    res.trace.push_back(pop.front().fitness);

    auto tournament = [&]() -> const Individual& {
        std::size_t best = static_cast<std::size_t>(unit(rng) * pop.size()) % pop.size();
        for (int t = 1; t < cfg.tournament_size; ++t) {
            const std::size_t c = static_cast<std::size_t>(unit(rng) * pop.size()) % pop.size();
            if (pop[c].fitness < pop[best].fitness || (pop[c].fitness == pop[best].fitness && c < best)) best = c;
        }
        return pop[best];
    };

    for (int gen = 0; gen < cfg.max_generations; ++gen) {
        std::vector<Individual> next(pop.begin(), pop.begin() + cfg.elite_count);
        while (static_cast<int>(next.size()) < cfg.population_size) {
            const Individual& pa = tournament();
            const Individual& pb = tournament();
            Chromosome        child;
            bool              ok = false;
            for (int attempt = 0; attempt < cfg.max_rejections && !ok; ++attempt) {
                child = pa.genes;
                if (unit(rng) < cfg.crossover_rate) {
                    for (std::size_t k = 0; k < dim; ++k) {
                        const double lo = std::min(pa.genes[k], pb.genes[k]);
                        const double hi = std::max(pa.genes[k], pb.genes[k]);
                        const double ext = cfg.blend_alpha * (hi - lo);
                        child[k]         = lo - ext + unit(rng) * (hi - lo + 2.0 * ext);
                    }
                }
                for (std::size_t k = 0; k < dim; ++k) {
                    if (unit(rng) < cfg.mutation_rate) child[k] += cfg.mutation_sigma * (cfg.upper[k] - cfg.lower[k]) * gauss(rng);
                }
                clamp(child);
                ok = valid(child);
            }
            if (!ok) {
                next.push_back(pa);
                continue;
            }
            next.push_back({child, evaluate(child)});
        }
        pop = std::move(next);
        std::stable_sort(pop.begin(), pop.end(), by_fitness);
        res.trace.push_back(pop.front().fitness);
    }
    res.best         = pop.front().genes;
    res.best_fitness = pop.front().fitness;
    return res;
}

}  // namespace simest
