#include "simest/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace simest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double decode_coefficient(const CoefficientRange& r, const Chromosome& genes, std::size_t& pos) {
    if (!r.free()) return r.lo;
    return std::pow(10.0, genes.at(pos++));
}

void append_bounds(const BankSpace& space, std::vector<double>& lower, std::vector<double>& upper) {
    for (const auto& s : space.sections) {
        for (const CoefficientRange* r : {&s.b1, &s.b0, &s.a0}) {
            if (!r->free()) continue;
            if (!(r->lo > 0.0)) throw ValidationError("compensator space: free coefficients need a positive lower bound");
            lower.push_back(std::log10(r->lo));
            upper.push_back(std::log10(r->hi));
        }
    }
}

void check_space(const BankSpace& space, int expected, const char* what) {
    if (static_cast<int>(space.sections.size()) != expected) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(expected) + " sections, got " +
                             std::to_string(space.sections.size()));
    }
}

// Poles and per-channel zeros of each plant, computed once per search.
struct PlantRoots {
    std::vector<Spectrum>                           poles;
    std::vector<std::vector<std::vector<Spectrum>>> zeros;  // [plant][output][input]
};

PlantRoots plant_roots(const std::vector<StateSpaceModel>& plants) {
    PlantRoots r;
    for (const auto& P : plants) {
        r.poles.push_back(poles(P));
        std::vector<std::vector<Spectrum>> z(static_cast<std::size_t>(P.outputs()));
        for (int o = 0; o < P.outputs(); ++o) {
            for (int i = 0; i < P.inputs(); ++i) z[static_cast<std::size_t>(o)].push_back(channel_zeros(P, o, i));
        }
        r.zeros.push_back(std::move(z));
    }
    return r;
}

double nearest(Complex x, const Spectrum& set) {
    double d = kInf;
    for (const auto& s : set) d = std::min(d, std::abs(x - s));
    return d;
}

double cancellation_distance(const PlantRoots& roots, const CompensatorBank& w_in, const CompensatorBank& w_ot) {
    double d = kInf;
    for (std::size_t p = 0; p < roots.poles.size(); ++p) {
        const auto& z = roots.zeros[p];
        for (std::size_t k = 0; k < w_in.sections.size(); ++k) {
            const Section& s    = w_in.sections[k];
            const Complex  pole(-s.a0, 0.0);
            d = std::min(d, nearest(pole, roots.poles[p]));
            for (const auto& row : z) d = std::min(d, nearest(pole, row.at(k)));
            if (s.b1 != 0.0) {
                const Complex zero(-s.b0 / s.b1, 0.0);
                d = std::min(d, nearest(zero, roots.poles[p]));
            }
        }
        for (std::size_t o = 0; o < w_ot.sections.size(); ++o) {
            const Section& s = w_ot.sections[o];
            const Complex  pole(-s.a0, 0.0);
            d = std::min(d, nearest(pole, roots.poles[p]));
            for (const auto& zk : z.at(o)) d = std::min(d, nearest(pole, zk));
            if (s.b1 != 0.0) {
                const Complex zero(-s.b0 / s.b1, 0.0);
                d = std::min(d, nearest(zero, roots.poles[p]));
            }
        }
    }
    return d;
}

// The inverse of an estimator_pre section has its pole at -b0/b1.
bool inverse_poles_in_band(const CompensatorBank& bank, const CoefficientRange& band) {
    for (const auto& s : bank.sections) {
        const double p = s.b0 / s.b1;
        if (p < band.lo * (1 - 1e-12) || p > band.hi * (1 + 1e-12)) return false;
    }
    return true;
}

}  // namespace

std::size_t worst_plant_index(const PlantSet& set, std::size_t l) {
    if (l >= set.size()) throw ValidationError("worst_plant_index: estimator index out of range");
    std::size_t k    = 0;
    double      best = -1.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const double s = sigma_max(Matrix(set.A(i) - set.A(l)));
        if (s > best) {
            best = s;
            k    = i;
        }
    }
    return k;
}

MersSelection select_mers(const PlantSet& set, const std::vector<Matrix>& gains, double gamma, const HinfOptions& opts) {
    if (gains.size() != set.size()) throw DimensionError("select_mers: need one gain per plant");
    if (!(gamma > 0.0)) throw ValidationError("select_mers: gamma must be positive");
    MersSelection sel;
    sel.table = worst_case_gain_matrix(set, gains, opts);
    double best = kInf;
    for (std::size_t l = 0; l < set.size(); ++l) {
        const std::size_t k = worst_plant_index(set, l);
        sel.worst.push_back(k);
        const double v = sel.table.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
        sel.column_norms.push_back(v);
        if (v < best) {
            best  = v;
            sel.j = l;
        }
    }
    sel.feasible = best < gamma;
    return sel;
}

int BankSpace::gene_count() const {
    int n = 0;
    for (const auto& s : sections) n += int(s.b1.free()) + int(s.b0.free()) + int(s.a0.free());
    return n;
}

BankSpace default_space(BankRole role, int k) {
    SectionSpace s;
    s.a0 = {1e-1, 1e2};
    s.b0 = {1e-4, 1e4};
    s.b1 = role == BankRole::gap_post ? CoefficientRange::pinned(0.0) : CoefficientRange{1e-4, 1e4};
    BankSpace space;
    space.role = role;
    space.sections.assign(static_cast<std::size_t>(k), s);
    return space;
}

CompensatorBank decode_bank(const BankSpace& space, const Chromosome& genes, std::size_t offset) {
    CompensatorBank bank;
    bank.role       = space.role;
    std::size_t pos = offset;
    for (const auto& s : space.sections) {
        Section sec;
        sec.b1 = decode_coefficient(s.b1, genes, pos);
        sec.b0 = decode_coefficient(s.b0, genes, pos);
        sec.a0 = decode_coefficient(s.a0, genes, pos);
        bank.sections.push_back(sec);
    }
    return bank;
}

MersEvaluation evaluate_mers(const PlantSet& set, const CompensatorBank& pre, const CompensatorBank& post, double gamma,
                             const LmiOptions& lmi, const HinfOptions& hinf) {
    if (!(gamma > 0.0)) throw ValidationError("evaluate_mers: gamma must be positive");
    MersEvaluation ev;
    ev.augmented       = augment_set(set, pre, post);
    const PlantSet& ps = ev.augmented;
    ev.J               = kInf;
    for (std::size_t l = 0; l < ps.size(); ++l) {
        const std::size_t k = worst_plant_index(ps, l);
        ev.worst.push_back(k);
        double norm = kInf;
        Matrix L;
        bool   ok = false;
        try {
            const auto prob = make_observer_problem(ps.A(l), ps.A(k), ps.C(), ps.Cz(), gamma);
            const auto out  = solve_observer_lmi(prob, lmi);
            if (out.feasible) {
                L          = out.certificate.L;
                const auto e = build_error_system(ps.A(k), ps.A(l), ps.C(), ps.Cz(), L);
                norm       = hinf_norm(e.model, hinf).value;
                ok         = norm < gamma;
            } else {
                norm = gamma + std::max(out.best_t, 0.0);
            }
        } catch (const Error&) {
            norm = kInf;
        }
        ev.column_norms.push_back(norm);
        ev.column_feasible.push_back(ok);
        ev.gains.push_back(ok ? L : Matrix());
        if (norm < ev.J) {
            ev.J = norm;
            ev.j = l;
        }
    }
    return ev;
}

std::vector<TheoremDiagnostic> theorem_diagnostics(const PlantSet& set, const std::vector<Matrix>& gains,
                                                   const std::vector<bool>& column_feasible, double tol,
                                                   const HinfOptions& hinf) {
    std::vector<TheoremDiagnostic> out;
    for (std::size_t l = 0; l < set.size(); ++l) {
        if (!column_feasible.at(l)) continue;
        const std::size_t   k = worst_plant_index(set, l);
        std::vector<double> col(set.size());
        for (std::size_t i = 0; i < set.size(); ++i) {
            const auto e = build_error_system(set.A(i), set.A(l), set.C(), set.Cz(), gains[l]);
            col[i]       = hinf_norm(e.model, hinf).value;
        }
        for (std::size_t i = 0; i < set.size(); ++i) {
            if (col[i] > col[k] * (1.0 + tol) + tol) out.push_back({l, i, col[i], col[k]});
        }
    }
    return out;
}

MersResult merse_algorithm(const PlantSet& set, const MersOptions& opts) {
    if (!(opts.gamma > 0.0)) throw ValidationError("merse_algorithm: gamma must be positive");
    BankSpace pre  = opts.pre.sections.empty() ? default_space(BankRole::estimator_pre, set.inputs()) : opts.pre;
    BankSpace post = opts.post.sections.empty() ? default_space(BankRole::estimator_post, set.outputs()) : opts.post;
    pre.role       = BankRole::estimator_pre;
    if (post.role != BankRole::estimator_post) post.role = BankRole::estimator_post;
    check_space(pre, set.inputs(), "merse_algorithm(pre)");
    check_space(post, set.outputs(), "merse_algorithm(post)");

    GaConfig ga = opts.ga;
    ga.lower.clear();
    ga.upper.clear();
    append_bounds(pre, ga.lower, ga.upper);
    append_bounds(post, ga.lower, ga.upper);
    const auto split = static_cast<std::size_t>(pre.gene_count());

    auto decode = [&](const Chromosome& c) {
        return std::make_pair(decode_bank(pre, c, 0), decode_bank(post, c, split));
    };
    auto valid = [&](const Chromosome& c) {
        try {
            auto [wi, wo] = decode(c);
            validate_bank(wi);
            validate_bank(wo);
            return inverse_poles_in_band(wi, opts.inverse_pole_band);
        } catch (const ValidationError&) {
            return false;
        }
    };
    auto fitness = [&](const Chromosome& c) {
        auto [wi, wo] = decode(c);
        return evaluate_mers(set, wi, wo, opts.gamma, opts.lmi, opts.hinf).J;
    };

    MersResult res;
    Chromosome best;
    if (ga.lower.empty()) {
        // Fully pinned compensators: a single evaluation.
        res.trace = {fitness(best)};
        res.evaluations = 1;
    } else {
        const auto run  = ga_optimize(fitness, valid, ga);
        best            = run.best;
        res.trace       = run.trace;
        res.evaluations = run.evaluations;
    }
    std::tie(res.pre, res.post) = decode(best);
    auto ev                     = evaluate_mers(set, res.pre, res.post, opts.gamma, opts.lmi, opts.hinf);
    res.augmented               = ev.augmented;
    res.worst                   = ev.worst;
    res.column_norms            = ev.column_norms;
    res.column_feasible         = ev.column_feasible;
    res.gains                   = ev.gains;
    res.J                       = ev.J;
    res.j                       = ev.j;
    res.feasible                = ev.J < opts.gamma && ev.column_feasible[ev.j];
    if (res.feasible) {
        res.L                  = ev.gains[ev.j];
        res.theorem_violations = theorem_diagnostics(ev.augmented, ev.gains, ev.column_feasible, 1e-6, opts.hinf);
    }
    return res;
}

std::vector<StateSpaceModel> augment_models(const std::vector<StateSpaceModel>& plants, const CompensatorBank& w_in,
                                            const CompensatorBank& w_ot) {
    std::vector<StateSpaceModel> out;
    out.reserve(plants.size());
    for (const auto& P : plants) out.push_back(augment_plant(P, w_in, w_ot));
    return out;
}

double cancellation_distance(const std::vector<StateSpaceModel>& plants, const CompensatorBank& w_in,
                             const CompensatorBank& w_ot) {
    return cancellation_distance(plant_roots(plants), w_in, w_ot);
}

GrcResult grc_algorithm(const std::vector<StateSpaceModel>& plants, std::size_t j, const GrcOptions& opts) {
    if (plants.empty()) throw ValidationError("grc_algorithm: empty plant family");
    if (j >= plants.size()) throw ValidationError("grc_algorithm: reference index out of range");
    const int m = plants.front().inputs(), r = plants.front().outputs();
    for (const auto& P : plants) {
        if (P.inputs() != m || P.outputs() != r) throw DimensionError("grc_algorithm: plants differ in input/output count");
    }
    BankSpace pre  = opts.pre.sections.empty() ? default_space(BankRole::gap_pre, m) : opts.pre;
    BankSpace post = opts.post.sections.empty() ? default_space(BankRole::gap_post, r) : opts.post;
    pre.role       = BankRole::gap_pre;
    post.role      = BankRole::gap_post;
    check_space(pre, m, "grc_algorithm(pre)");
    check_space(post, r, "grc_algorithm(post)");

    GaConfig ga = opts.ga;
    ga.lower.clear();
    ga.upper.clear();
    append_bounds(pre, ga.lower, ga.upper);
    append_bounds(post, ga.lower, ga.upper);
    if (ga.lower.empty()) throw ValidationError("grc_algorithm: no free compensator coefficients");
    const auto split = static_cast<std::size_t>(pre.gene_count());
    const auto roots = plant_roots(plants);

    auto decode = [&](const Chromosome& c) {
        return std::make_pair(decode_bank(pre, c, 0), decode_bank(post, c, split));
    };
    auto valid = [&](const Chromosome& c) {
        try {
            auto [wi, wo] = decode(c);
            validate_bank(wi);
            validate_bank(wo);
            return cancellation_distance(roots, wi, wo) > opts.cancellation_tol;
        } catch (const ValidationError&) {
            return false;
        }
    };
    auto fitness = [&](const Chromosome& c) {
        auto [wi, wo] = decode(c);
        try {
            return max_gap(augment_models(plants, wi, wo), j, opts.gap);
        } catch (const Error&) {
            return kInf;
        }
    };

    GrcResult res;
    res.j           = j;
    res.baseline    = max_gap(plants, j, opts.gap);
    const auto run  = ga_optimize(fitness, valid, ga);
    res.trace       = run.trace;
    res.evaluations = run.evaluations;
    std::tie(res.w_in, res.w_ot) = decode(run.best);
    res.augmented   = augment_models(plants, res.w_in, res.w_ot);
    res.J1          = run.best_fitness;
    res.feasible    = res.J1 < res.baseline;
    return res;
}

GrcResult grc_algorithm(const PlantSet& set, std::size_t j, const GrcOptions& opts) {
    return grc_algorithm(members(set), j, opts);
}

}  // namespace simest
