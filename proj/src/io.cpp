#include "simest/io.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace simest {

namespace {

// Copies obj[key] into out when present; unknown keys are caught separately.
template <typename T>
void take(const Json& obj, const char* key, T& out, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->get<T>();
    } catch (const Json::exception&) {
        throw ValidationError(where + ": field '" + key + "' has the wrong type");
    }
}

void reject_unknown(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!ok.count(it.key())) throw ValidationError(where + ": unknown field '" + it.key() + "'");
    }
}

const char* role_name(BankRole r) {
    switch (r) {
        case BankRole::estimator_pre: return "estimator_pre";
        case BankRole::estimator_post: return "estimator_post";
        case BankRole::gap_pre: return "gap_pre";
        case BankRole::gap_post: return "gap_post";
    }
    return "unknown";
}

Json one_based(const std::vector<std::size_t>& v) {
    Json a = Json::array();
    for (auto i : v) a.push_back(i + 1);
    return a;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(finite_or_null(x));
    return a;
}

Json ga_json(const GaConfig& g) {
    return {{"population_size", g.population_size}, {"max_generations", g.max_generations},
            {"crossover_rate", g.crossover_rate},   {"mutation_rate", g.mutation_rate},
            {"elite_count", g.elite_count},         {"tournament_size", g.tournament_size},
            {"blend_alpha", g.blend_alpha},         {"mutation_sigma", g.mutation_sigma},
            {"max_rejections", g.max_rejections}};
}

void ga_from(const Json& j, GaConfig& g, const std::string& where) {
    reject_unknown(j, {"population_size", "max_generations", "crossover_rate", "mutation_rate", "elite_count",
                       "tournament_size", "blend_alpha", "mutation_sigma", "max_rejections"},
                   where);
    take(j, "population_size", g.population_size, where);
    take(j, "max_generations", g.max_generations, where);
    take(j, "crossover_rate", g.crossover_rate, where);
    take(j, "mutation_rate", g.mutation_rate, where);
    take(j, "elite_count", g.elite_count, where);
    take(j, "tournament_size", g.tournament_size, where);
    take(j, "blend_alpha", g.blend_alpha, where);
    take(j, "mutation_sigma", g.mutation_sigma, where);
    take(j, "max_rejections", g.max_rejections, where);
}

}  // namespace

// ---- matrices and plant files ---------------------------------------------

Json matrix_json(const Matrix& M) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
    if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
    if (!j.is_array()) throw ValidationError(what + ": expected a matrix (array of rows)");
    if (j.empty()) return Matrix(0, 0);
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Matrix            M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) {
            throw DimensionError(what + ": row " + std::to_string(r + 1) + " is not " + std::to_string(cols) + " wide");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) throw ValidationError(what + ": non-numeric entry in row " + std::to_string(r + 1));
            M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
        }
    }
    return M;
}

PlantSetFile parse_plant_set(const Json& doc) {
    const std::string where = "plant file";
    reject_unknown(doc, {"schema_version", "plants", "B", "C", "Cz", "complementary", "description"}, where);
    if (!doc.contains("schema_version")) throw ValidationError(where + ": missing schema_version");
    if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != kPlantFileSchema) {
        throw ValidationError(where + ": unsupported schema_version (expected " + std::to_string(kPlantFileSchema) + ")");
    }
    if (!doc.contains("plants") || !doc["plants"].is_array()) throw ValidationError(where + ": missing plants array");
    const Json& plants = doc["plants"];
    if (plants.size() < 2) throw ValidationError(where + ": at least two plants are required");

    std::vector<Matrix>      A;
    std::vector<std::string> labels;
    std::vector<double>      pct;
    std::size_t              with_pct = 0;
    // Shared maps: the top-level value, else the first plant that carries one.
    struct Shared {
        const char* key;
        Matrix      value;
        int         owner = -1;  // 0 = top level, i + 1 = plant i
    };
    Shared shared[3] = {{"B", {}}, {"C", {}}, {"Cz", {}}};
    for (auto& s : shared) {
        if (doc.contains(s.key)) {
            s.value = matrix_from_json(doc[s.key], s.key);
            s.owner = 0;
        }
    }
    for (std::size_t i = 0; i < plants.size(); ++i) {
        const Json&       p   = plants[i];
        const std::string who = "plant " + std::to_string(i + 1);
        reject_unknown(p, {"label", "A", "B", "C", "Cz", "perturbation_percent"}, where + " (" + who + ")");
        if (!p.contains("A")) throw ValidationError(where + ": " + who + " has no A");
        A.push_back(matrix_from_json(p["A"], "A of " + who));
        std::string label = "P" + std::to_string(i + 1);
        take(p, "label", label, where + " (" + who + ")");
        labels.push_back(label);
        double v = 0.0;
        if (p.contains("perturbation_percent")) {
            take(p, "perturbation_percent", v, where + " (" + who + ")");
            if (!(v >= 0.0 && v < 100.0)) throw ValidationError(where + ": perturbation_percent of " + who + " outside [0, 100)");
            ++with_pct;
        }
        pct.push_back(v);
        for (auto& s : shared) {
            if (!p.contains(s.key)) continue;
            const Matrix M = matrix_from_json(p[s.key], std::string(s.key) + " of " + who);
            if (s.owner < 0) {
                s.value = M;
                s.owner = static_cast<int>(i) + 1;
            } else if (s.value.rows() != M.rows() || s.value.cols() != M.cols() || s.value != M) {
                const std::string other =
                    s.owner == 0 ? "the shared " + std::string(s.key) : "plants " + std::to_string(s.owner) + " and " + std::to_string(i + 1);
                if (s.owner == 0) {
                    throw ValidationError(where + ": " + s.key + " of " + who + " differs from " + other);
                }
                throw ValidationError(where + ": " + s.key + " differs between " + other);
            }
        }
    }
    if (with_pct != 0 && with_pct != plants.size()) {
        throw ValidationError(where + ": perturbation_percent must be given for every plant or none");
    }
    for (auto& s : shared) {
        if (s.owner < 0) throw ValidationError(where + ": missing " + std::string(s.key));
    }
    const auto n = shared[0].value.rows();
    if (shared[2].value.size() == 0) shared[2].value = Matrix(0, n);

    PlantSetFile out{PlantSet(std::move(A), shared[0].value, shared[1].value, shared[2].value, labels),
                     with_pct ? pct : std::vector<double>{}, false};
    take(doc, "complementary", out.complementary, where);
    if (out.complementary) {
        const int q = out.set.outputs(), r = out.set.estimated(), ns = out.set.states();
        if (q + r != ns) {
            throw ValidationError(where + ": measured (" + std::to_string(q) + ") plus estimated (" + std::to_string(r) +
                                  ") outputs must equal the state count " + std::to_string(ns));
        }
        if (!out.set.complementary_outputs()) throw ValidationError(where + ": [C; Cz] is singular");
    }
    return out;
}

PlantSetFile read_plant_set(std::istream& in) {
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ValidationError(std::string("plant file: parse error: ") + e.what());
    }
    return parse_plant_set(doc);
}

PlantSetFile load_plant_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("plant file: cannot open " + path.string());
    return read_plant_set(in);
}

Json plant_set_json(const PlantSetFile& file) {
    const PlantSet& s = file.set;
    Json            plants = Json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
        Json p = {{"label", s.labels()[i]}, {"A", matrix_json(s.A(i))}};
        if (!file.perturbation_percent.empty()) p["perturbation_percent"] = file.perturbation_percent.at(i);
        plants.push_back(std::move(p));
    }
    Json doc = {{"schema_version", kPlantFileSchema},
                {"plants", plants},
                {"B", matrix_json(s.B())},
                {"C", matrix_json(s.C())},
                {"Cz", matrix_json(s.Cz())}};
    if (file.complementary) doc["complementary"] = true;
    return doc;
}

void save_plant_set(const PlantSetFile& file, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << dump(plant_set_json(file)) << '\n';
}

// ---- run configuration ----------------------------------------------------

void RunConfig::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("config: gamma must be positive and finite");
    for (const auto* g : {&mers_ga, &grc_ga}) {
        GaConfig probe = *g;
        probe.lower    = {0.0};
        probe.upper    = {1.0};
        probe.validate();
    }
    if (!(hinf.rel_tol > 0.0)) throw ValidationError("config: hinf.rel_tol must be positive");
    if (gap.grid_points < 8) throw ValidationError("config: gap.grid_points must be at least 8");
    if (!(gap.omega_lo > 0.0 && gap.omega_lo < gap.omega_hi)) throw ValidationError("config: gap frequency range is empty");
    if (!(lmi.q_bound > 0.0) || !(lmi.epsilon_scale > 0.0)) throw ValidationError("config: lmi bounds must be positive");
    SimulationScenario sc;
    sc.duration = compare.duration;
    sc.step     = compare.step;
    sc.input    = compare.input;
    sc.noise    = compare.noise;
    sc.noise.enabled = false;  // channel range depends on the plant set
    sc.validate(0);
    for (double p : compare.perturbation_percent) {
        if (!(p >= 0.0 && p < 100.0)) throw ValidationError("config: perturbation_percent entries must lie in [0, 100)");
    }
}

Json config_json(const RunConfig& c) {
    const auto& s = c.compare;
    return {{"schema_version", kConfigSchema},
            {"gamma", c.gamma},
            {"seed", c.seed},
            {"output_dir", c.output_dir},
            {"mers_ga", ga_json(c.mers_ga)},
            {"grc_ga", ga_json(c.grc_ga)},
            {"hinf", {{"rel_tol", c.hinf.rel_tol}, {"axis_tol", c.hinf.axis_tol}, {"max_iterations", c.hinf.max_iterations}}},
            {"gap",
             {{"grid_points", c.gap.grid_points},
              {"omega_lo", c.gap.omega_lo},
              {"omega_hi", c.gap.omega_hi},
              {"widen_to_poles", c.gap.widen_to_poles},
              {"refine_peaks", c.gap.refine_peaks}}},
            {"lmi",
             {{"epsilon_scale", c.lmi.epsilon_scale},
              {"q_bound", c.lmi.q_bound},
              {"stop_margin", c.lmi.stop_margin},
              {"gap_tol", c.lmi.gap_tol}}},
            {"simulation",
             {{"duration", s.duration},
              {"step", s.step},
              {"input",
               {{"amplitude", s.input.amplitude},
                {"channel", s.input.channel},
                {"start", s.input.start},
                {"width", s.input.width}}},
              {"noise",
               {{"enabled", s.noise.enabled},
                {"channels", s.noise.channels},
                {"rms", s.noise.rms},
                {"spectral_density", s.noise.spectral_density}}},
              {"perturbation_percent", s.perturbation_percent},
              {"feedback",
               {{"scale", s.feedback.scale},
                {"min_damping", s.feedback.min_damping},
                {"min_magnitude", s.feedback.min_magnitude}}}}}};
}

RunConfig config_from_json(const Json& doc) {
    RunConfig c;
    const std::string w = "config";
    reject_unknown(doc, {"schema_version", "gamma", "seed", "output_dir", "mers_ga", "grc_ga", "hinf", "gap", "lmi", "simulation"}, w);
    if (doc.contains("schema_version") && doc["schema_version"] != kConfigSchema) {
        throw ValidationError("config: unsupported schema_version");
    }
    take(doc, "gamma", c.gamma, w);
    take(doc, "seed", c.seed, w);
    take(doc, "output_dir", c.output_dir, w);
    if (doc.contains("mers_ga")) ga_from(doc["mers_ga"], c.mers_ga, "config.mers_ga");
    if (doc.contains("grc_ga")) ga_from(doc["grc_ga"], c.grc_ga, "config.grc_ga");
    if (doc.contains("hinf")) {
        const Json& h = doc["hinf"];
        reject_unknown(h, {"rel_tol", "axis_tol", "max_iterations"}, "config.hinf");
        take(h, "rel_tol", c.hinf.rel_tol, "config.hinf");
        take(h, "axis_tol", c.hinf.axis_tol, "config.hinf");
        take(h, "max_iterations", c.hinf.max_iterations, "config.hinf");
    }
    if (doc.contains("gap")) {
        const Json& g = doc["gap"];
        reject_unknown(g, {"grid_points", "omega_lo", "omega_hi", "widen_to_poles", "refine_peaks"}, "config.gap");
        take(g, "grid_points", c.gap.grid_points, "config.gap");
        take(g, "omega_lo", c.gap.omega_lo, "config.gap");
        take(g, "omega_hi", c.gap.omega_hi, "config.gap");
        take(g, "widen_to_poles", c.gap.widen_to_poles, "config.gap");
        take(g, "refine_peaks", c.gap.refine_peaks, "config.gap");
    }
    if (doc.contains("lmi")) {
        const Json& l = doc["lmi"];
        reject_unknown(l, {"epsilon_scale", "q_bound", "stop_margin", "gap_tol"}, "config.lmi");
        take(l, "epsilon_scale", c.lmi.epsilon_scale, "config.lmi");
        take(l, "q_bound", c.lmi.q_bound, "config.lmi");
        take(l, "stop_margin", c.lmi.stop_margin, "config.lmi");
        take(l, "gap_tol", c.lmi.gap_tol, "config.lmi");
    }
    if (doc.contains("simulation")) {
        const Json&       s  = doc["simulation"];
        const std::string ws = "config.simulation";
        auto&             co = c.compare;
        reject_unknown(s, {"duration", "step", "input", "noise", "perturbation_percent", "feedback"}, ws);
        take(s, "duration", co.duration, ws);
        take(s, "step", co.step, ws);
        take(s, "perturbation_percent", co.perturbation_percent, ws);
        if (s.contains("input")) {
            const Json& i = s["input"];
            reject_unknown(i, {"amplitude", "channel", "start", "width"}, ws + ".input");
            take(i, "amplitude", co.input.amplitude, ws);
            take(i, "channel", co.input.channel, ws);
            take(i, "start", co.input.start, ws);
            take(i, "width", co.input.width, ws);
        }
        if (s.contains("noise")) {
            const Json& n = s["noise"];
            reject_unknown(n, {"enabled", "channels", "rms", "spectral_density"}, ws + ".noise");
            take(n, "enabled", co.noise.enabled, ws);
            take(n, "channels", co.noise.channels, ws);
            take(n, "rms", co.noise.rms, ws);
            take(n, "spectral_density", co.noise.spectral_density, ws);
        }
        if (s.contains("feedback")) {
            const Json& f = s["feedback"];
            reject_unknown(f, {"scale", "min_damping", "min_magnitude"}, ws + ".feedback");
            take(f, "scale", co.feedback.scale, ws);
            take(f, "min_damping", co.feedback.min_damping, ws);
            take(f, "min_magnitude", co.feedback.min_magnitude, ws);
        }
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path.string());
    try {
        return config_from_json(Json::parse(in));
    } catch (const Json::parse_error& e) {
        throw ValidationError(std::string("config: parse error: ") + e.what());
    }
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

// ---- reports --------------------------------------------------------------

std::string dump(const Json& j) { return j.dump(2); }

Json bank_json(const CompensatorBank& bank) {
    Json sections = Json::array();
    for (const auto& s : bank.sections) sections.push_back({{"b1", s.b1}, {"b0", s.b0}, {"a0", s.a0}});
    return {{"role", role_name(bank.role)}, {"sections", sections}};
}

Json report_json(const NormResult& r) {
    return {{"hinf_norm", finite_or_null(r.value)},
            {"lower_bound", finite_or_null(r.lower_bound)},
            {"peak_frequency", std::isinf(r.peak_frequency) ? Json("inf") : finite_or_null(r.peak_frequency)},
            {"method", r.method == NormMethod::bisection ? "bisection" : "grid"}};
}

Json report_json(const GapResult& r) {
    return {{"nu_gap", r.value},
            {"winding_condition_met", r.winding_condition_met},
            {"winding_number", r.winding_number},
            {"peak_frequency", finite_or_null(r.peak_frequency)}};
}

Json report_json(const FilterDesign& f) {
    return {{"gamma", finite_or_null(f.gamma)}, {"achieved_norm", finite_or_null(f.achieved_norm)}, {"L", matrix_json(f.L)}};
}

Json report_json(const MersResult& r, const PlantSet& set, const HinfOptions& hinf) {
    Json doc = {{"feasible", r.feasible},
                {"J", finite_or_null(r.J)},
                {"j", r.j + 1},
                {"j_label", set.labels().at(r.j)},
                {"worst", one_based(r.worst)},
                {"column_norms", vector_json(r.column_norms)},
                {"column_feasible", r.column_feasible},
                {"pre", bank_json(r.pre)},
                {"post", bank_json(r.post)},
                {"ga", {{"trace", vector_json(r.trace)}, {"evaluations", r.evaluations}}}};
    Json viol = Json::array();
    for (const auto& v : r.theorem_violations) {
        viol.push_back({{"l", v.l + 1}, {"i", v.i + 1}, {"norm_i", v.norm_i}, {"norm_k", v.norm_k}});
    }
    doc["theorem_violations"] = viol;
    if (r.L.size() == 0 || r.augmented.size() == 0) {
        doc["L"] = nullptr;
        return doc;
    }
    doc["L"] = matrix_json(r.L);
    // Recomputed from scratch: estimator j against every augmented plant.
    const PlantSet& aug = r.augmented;
    Json            norms = Json::array();
    double          worst = 0.0;
    for (std::size_t i = 0; i < aug.size(); ++i) {
        try {
            const auto es = build_error_system(aug.A(i), aug.A(r.j), aug.C(), aug.Cz(), r.L);
            const double v = hinf_norm(es.model, hinf).value;
            norms.push_back(v);
            worst = std::max(worst, v);
        } catch (const Error&) {
            norms.push_back(nullptr);
            worst = std::numeric_limits<double>::infinity();
        }
    }
    doc["verification"] = {{"plant_norms", norms},
                           {"max_norm", finite_or_null(worst)},
                           {"below_gamma_everywhere", std::isfinite(worst) && r.feasible && worst < r.J * (1.0 + 1e-6) + 1e-12}};
    return doc;
}

Json report_json(const GrcResult& r, const NuGapOptions& gap) {
    Json doc = {{"feasible", r.feasible},
                {"j", r.j + 1},
                {"J1", r.J1},
                {"epsilon", r.baseline},
                {"w_in", bank_json(r.w_in)},
                {"w_ot", bank_json(r.w_ot)},
                {"ga", {{"trace", vector_json(r.trace)}, {"evaluations", r.evaluations}}}};
    if (!r.augmented.empty()) {
        Json gaps = Json::array();
        for (std::size_t i = 0; i < r.augmented.size(); ++i) {
            gaps.push_back(i == r.j ? 0.0 : nu_gap(r.augmented[r.j], r.augmented[i], gap).value);
        }
        doc["verification"] = {{"gaps_to_j", gaps}, {"max_gap", max_gap(r.augmented, r.j, gap)}};
    }
    return doc;
}

Json report_json(const ComparisonTable& t) {
    auto rows = [](const std::vector<ComparisonRow>& rs) {
        Json a = Json::array();
        for (const auto& r : rs) {
            a.push_back({{"label", r.label},
                         {"mers", finite_or_null(r.mers)},
                         {"grmers", finite_or_null(r.grmers)},
                         {"hinf", finite_or_null(r.hinf)},
                         {"gr_vs_mers_percent", finite_or_null(r.gr_vs_mers_percent)},
                         {"gr_vs_hinf_percent", finite_or_null(r.gr_vs_hinf_percent)}});
        }
        return a;
    };
    Json pa = Json::array();
    for (const auto& A : t.perturbed_A) pa.push_back(matrix_json(A));
    return {{"base", t.base + 1}, {"nominal", rows(t.nominal)}, {"perturbed", rows(t.perturbed)}, {"perturbed_A", pa}};
}

}  // namespace simest
