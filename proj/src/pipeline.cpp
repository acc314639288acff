#include "simest/pipeline.hpp"

#include <fstream>
#include <sstream>

namespace simest {

namespace {

constexpr std::uint64_t kMersStream    = 1;
constexpr std::uint64_t kGrcStream     = 2;
constexpr std::uint64_t kCompareStream = 3;

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string trace_csv(const SimulationTrace& tr) {
    std::ostringstream os;
    write_trace_csv(tr, os);
    return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

}  // namespace

Json ArtifactBundle::summary() const {
    Json w = Json::array();
    for (const auto& s : warnings) w.push_back(s);
    Json names = Json::array();
    for (const auto& t : traces) names.push_back(t.name);
    return {{"status", status},   {"failed_stage", failed_stage}, {"message", message},
            {"config", config},   {"mers", mers},                 {"grc", grc},
            {"filters", filters}, {"comparison", comparison},     {"traces", names},
            {"warnings", w}};
}

std::uint64_t ArtifactBundle::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    Json s          = summary();
    s["config"].erase("output_dir");  // where results go does not change them
    h = fnv1a(h, s.dump());
    for (const auto& t : traces) h = fnv1a(fnv1a(h, t.name), trace_csv(t.trace));
    return h;
}

Json trace_json(const SimulationTrace& tr) {
    Json time = Json::array();
    for (Eigen::Index i = 0; i < tr.time.size(); ++i) time.push_back(tr.time(i));
    return {{"time", time},
            {"x", matrix_json(tr.x)},
            {"z", matrix_json(tr.z)},
            {"z_hat", matrix_json(tr.z_hat)},
            {"e_z", matrix_json(tr.e_z)},
            {"diverged", tr.diverged},
            {"horizon_adequate", tr.horizon_adequate},
            {"slowest_time_constant", tr.slowest_time_constant},
            {"substeps", tr.substeps}};
}

ArtifactBundle run_pipeline(const RunConfig& cfg, const PlantSetFile& plants) {
    cfg.validate();
    const PlantSet& set = plants.set;
    ArtifactBundle  b;

    MersOptions mo;
    mo.gamma           = cfg.gamma;
    mo.ga              = cfg.mers_ga;
    mo.ga.rng_seed     = derive_seed(cfg.seed, kMersStream);
    mo.lmi             = cfg.lmi;
    mo.hinf            = cfg.hinf;
    GrcOptions go;
    go.ga              = cfg.grc_ga;
    go.ga.rng_seed     = derive_seed(cfg.seed, kGrcStream);
    go.gap             = cfg.gap;
    CompareOptions co  = cfg.compare;
    co.seed            = derive_seed(cfg.seed, kCompareStream);
    co.keep_traces     = true;
    if (!plants.perturbation_percent.empty()) co.perturbation_percent = plants.perturbation_percent;
    std::vector<int> channels;
    for (int c : co.noise.channels) {
        if (c < set.outputs()) {
            channels.push_back(c);
        } else {
            b.warnings.push_back("noise channel " + std::to_string(c) + " dropped: the plants have " +
                                 std::to_string(set.outputs()) + " measured outputs");
        }
    }
    co.noise.channels = channels;
    if (co.input.channel >= set.inputs()) {
        b.warnings.push_back("input channel " + std::to_string(co.input.channel) + " moved to 0: the plants have " +
                             std::to_string(set.inputs()) + " inputs");
        co.input.channel = 0;
    }

    b.config                       = config_json(cfg);
    b.config["derived_seeds"]      = {{"mers_ga", mo.ga.rng_seed}, {"grc_ga", go.ga.rng_seed}, {"compare", co.seed}};
    b.config["perturbation_used"]  = co.perturbation_percent;

    auto fail = [&](const char* stage, const Error& e) {
        b.failed_stage = stage;
        b.message      = e.what();
        b.status       = exit_code_for(e) == 3 ? "no_feasible" : exit_code_for(e) == 2 ? "invalid" : "numeric_failure";
        return b;
    };

    MersResult mers;
    try {
        mers   = merse_algorithm(set, mo);
        b.mers = report_json(mers, set, cfg.hinf);
    } catch (const Error& e) {
        return fail("mers", e);
    }
    if (!mers.feasible) {
        b.status       = "no_feasible";
        b.failed_stage = "mers";
        b.message      = "no estimator reaches J < gamma";
        return b;
    }

    GrcResult grc;
    try {
        grc   = grc_algorithm(set, mers.j, go);
        b.grc = report_json(grc, cfg.gap);
    } catch (const SynthesisError& e) {
        // GRMERS falls back to the MERS wiring; the stage still reports no-feasible.
        grc.feasible = false;
        grc.j        = mers.j;
        b.grc        = {{"feasible", false}, {"j", mers.j + 1}, {"message", e.what()}};
    } catch (const Error& e) {
        return fail("grc", e);
    }
    if (!grc.feasible) b.warnings.push_back("GR compensation found nothing below the baseline gap; GRMERS equals MERS");

    std::vector<FilterDesign> filters;
    try {
        FilterOptions fo;
        fo.lmi    = cfg.lmi;
        b.filters = Json::array();
        for (std::size_t i = 0; i < set.size(); ++i) {
            filters.push_back(synth_hinf_filter(set.A(i), set.C(), set.Cz(), fo));
            Json f     = report_json(filters.back());
            f["label"] = set.labels()[i];
            b.filters.push_back(f);
        }
    } catch (const Error& e) {
        return fail("filters", e);
    }

    try {
        auto table   = compare_estimators(set, mers, grc, filters, co);
        b.comparison = report_json(table);
        b.traces     = std::move(table.traces);
        for (const auto& t : b.traces) {
            if (!t.trace.horizon_adequate) {
                b.warnings.push_back(t.name + ": horizon shorter than 10 slowest time constants (" +
                                     std::to_string(t.trace.slowest_time_constant) + " s)");
            }
        }
    } catch (const Error& e) {
        return fail("compare", e);
    }
    return b;
}

void write_bundle(const ArtifactBundle& b, const std::filesystem::path& dir, TraceFormat format) {
    std::filesystem::create_directories(dir / "traces");
    const Json cfg = b.config;
    auto       wrap = [&](const Json& report) { return dump({{"config", cfg}, {"seed", cfg["seed"]}, {"report", report}}) + "\n"; };
    if (!b.mers.is_null()) write_text(dir / "mers.json", wrap(b.mers));
    if (!b.grc.is_null()) write_text(dir / "grc.json", wrap(b.grc));
    if (!b.filters.is_null()) write_text(dir / "filters.json", wrap(b.filters));
    for (const auto& t : b.traces) {
        if (format == TraceFormat::csv) {
            write_text(dir / "traces" / (t.name + ".csv"), trace_csv(t.trace));
        } else {
            write_text(dir / "traces" / (t.name + ".json"), dump(trace_json(t.trace)) + "\n");
        }
    }
    if (!b.comparison.is_null()) {
        write_text(dir / "comparison.json", wrap(b.comparison));
        if (format == TraceFormat::csv) {
            std::ostringstream os;
            os.precision(17);
            os << "table,label,mers,grmers,hinf,gr_vs_mers_percent,gr_vs_hinf_percent\n";
            for (const char* part : {"nominal", "perturbed"}) {
                for (const auto& r : b.comparison[part]) {
                    os << part << ',' << r["label"].get<std::string>();
                    for (const char* k : {"mers", "grmers", "hinf", "gr_vs_mers_percent", "gr_vs_hinf_percent"}) {
                        os << ',';
                        if (!r[k].is_null()) os << r[k].get<double>();
                    }
                    os << '\n';
                }
            }
            write_text(dir / "comparison.csv", os.str());
        }
    }
    Json summary    = b.summary();
    summary["hash"] = b.hash();
    write_text(dir / "bundle.json", dump(summary) + "\n");
}

int exit_code_for(const Error& e) {
    if (dynamic_cast<const SynthesisError*>(&e)) return 3;
    if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
        dynamic_cast<const DomainError*>(&e)) {
        return 2;
    }
    return 4;
}

}  // namespace simest
