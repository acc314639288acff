// simest: command-line front end for plant-set validation, synthesis and simulation.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "simest/pipeline.hpp"

using namespace simest;

namespace {

struct Common {
    std::string                  plants;
    std::string                  config;
    std::optional<double>        gamma;
    std::optional<std::uint64_t> seed;
    std::optional<int>           generations;
    std::optional<int>           population;
    std::string                  out;
    std::string                  format = "json";
};

void add_common(CLI::App* cmd, Common& c, bool synthesis) {
    cmd->add_option("plants", c.plants, "Plant-set JSON file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out, "Write reports into this directory instead of stdout");
    cmd->add_option("--format", c.format, "Trace and table format")->check(CLI::IsMember({"json", "csv"}));
    if (!synthesis) return;
    cmd->add_option("--config", c.config, "Run configuration JSON")->check(CLI::ExistingFile);
    cmd->add_option("--gamma", c.gamma, "Error-norm threshold");
    cmd->add_option("--seed", c.seed, "Master seed");
    cmd->add_option("--generations", c.generations, "GA generations (both searches)");
    cmd->add_option("--population", c.population, "GA population (both searches)");
}

RunConfig make_config(const Common& c) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
    if (c.gamma) cfg.gamma = *c.gamma;
    if (c.seed) cfg.seed = *c.seed;
    if (c.generations) cfg.mers_ga.max_generations = cfg.grc_ga.max_generations = *c.generations;
    if (c.population) cfg.mers_ga.population_size = cfg.grc_ga.population_size = *c.population;
    if (!c.out.empty()) cfg.output_dir = c.out;
    cfg.validate();
    return cfg;
}

// Prints to stdout, or writes <out>/<name> when --out is set.
void emit(const Common& c, const std::string& name, const std::string& text) {
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    std::filesystem::create_directories(c.out);
    std::ofstream f(std::filesystem::path(c.out) / name);
    if (!f) throw ValidationError("cannot write into " + c.out);
    f << text;
    std::cerr << "wrote " << (std::filesystem::path(c.out) / name).string() << '\n';
}

Json with_config(const RunConfig& cfg, const Json& report) {
    return {{"config", config_json(cfg)}, {"seed", cfg.seed}, {"report", report}};
}

std::size_t plant_index(const PlantSet& set, int number) {
    if (number < 1 || static_cast<std::size_t>(number) > set.size()) {
        throw ValidationError("plant number " + std::to_string(number) + " outside 1.." + std::to_string(set.size()));
    }
    return static_cast<std::size_t>(number - 1);
}

int status_code(const std::string& status) {
    if (status == "ok") return 0;
    if (status == "no_feasible") return 3;
    if (status == "invalid") return 2;
    return 4;
}

int cmd_validate(const Common& c) {
    const auto     f   = load_plant_set(c.plants);
    const PlantSet& s  = f.set;
    Json           stable = Json::array();
    for (std::size_t i = 0; i < s.size(); ++i) stable.push_back(is_hurwitz(s.A(i)));
    const Json doc = {{"plants", s.size()},
                      {"labels", s.labels()},
                      {"states", s.states()},
                      {"inputs", s.inputs()},
                      {"measured", s.outputs()},
                      {"estimated", s.estimated()},
                      {"complementary", s.complementary_outputs()},
                      {"open_loop_stable", stable}};
    emit(c, "validate.json", dump(doc) + "\n");
    return 0;
}

MersOptions mers_options(const RunConfig& cfg) {
    MersOptions mo;
    mo.gamma       = cfg.gamma;
    mo.ga          = cfg.mers_ga;
    mo.ga.rng_seed = derive_seed(cfg.seed, 1);
    mo.lmi         = cfg.lmi;
    mo.hinf        = cfg.hinf;
    return mo;
}

int cmd_synth_mers(const Common& c) {
    const auto cfg  = make_config(c);
    const auto f    = load_plant_set(c.plants);
    const auto mers = merse_algorithm(f.set, mers_options(cfg));
    emit(c, "mers.json", dump(with_config(cfg, report_json(mers, f.set, cfg.hinf))) + "\n");
    return mers.feasible ? 0 : 3;
}

int cmd_synth_grc(const Common& c, int base) {
    const auto  cfg = make_config(c);
    const auto  f   = load_plant_set(c.plants);
    std::size_t j   = 0;
    if (base > 0) {
        j = plant_index(f.set, base);
    } else {
        const auto mers = merse_algorithm(f.set, mers_options(cfg));
        if (!mers.feasible) throw SynthesisError("synth-grc: no MERS base plant (J >= gamma); pass --base");
        j = mers.j;
    }
    GrcOptions go;
    go.ga          = cfg.grc_ga;
    go.ga.rng_seed = derive_seed(cfg.seed, 2);
    go.gap         = cfg.gap;
    const auto grc = grc_algorithm(f.set, j, go);
    emit(c, "grc.json", dump(with_config(cfg, report_json(grc, cfg.gap))) + "\n");
    return grc.feasible ? 0 : 3;
}

int cmd_pipeline(const Common& c, bool traces_only) {
    const auto cfg    = make_config(c);
    const auto f      = load_plant_set(c.plants);
    const auto bundle = run_pipeline(cfg, f);
    const auto fmt    = c.format == "csv" ? TraceFormat::csv : TraceFormat::json;
    if (!c.out.empty()) {
        write_bundle(bundle, c.out, fmt);
        std::cerr << "wrote bundle to " << c.out << " (hash " << bundle.hash() << ")\n";
    } else if (traces_only) {
        Json runs = Json::array();
        for (const auto& t : bundle.traces) {
            const auto r = nrmse(t.trace);
            runs.push_back({{"name", t.name}, {"nrmse", r.norm2}, {"diverged", t.trace.diverged}});
        }
        std::cout << dump({{"status", bundle.status}, {"message", bundle.message}, {"runs", runs}}) << '\n';
    } else {
        Json s    = bundle.summary();
        s["hash"] = bundle.hash();
        std::cout << dump(s) << '\n';
    }
    if (bundle.status != "ok") std::cerr << bundle.failed_stage << ": " << bundle.message << '\n';
    return status_code(bundle.status);
}

int cmd_nugap(const Common& c, const std::vector<int>& pair) {
    const auto f = load_plant_set(c.plants);
    const auto i = plant_index(f.set, pair.at(0));
    const auto k = plant_index(f.set, pair.at(1));
    const auto r = nu_gap(f.set.plant(i), f.set.plant(k));
    if (c.format == "csv") {
        emit(c, "nugap.csv",
             "nu_gap,winding_condition_met,winding_number\n" + dump(r.value) + "," +
                 (r.winding_condition_met ? "true" : "false") + "," + std::to_string(r.winding_number) + "\n");
    } else {
        emit(c, "nugap.json", dump(report_json(r)) + "\n");
    }
    return 0;
}

int cmd_hinfnorm(const Common& c, int plant) {
    const auto f = load_plant_set(c.plants);
    const auto r = hinf_norm(f.set.plant(plant_index(f.set, plant)));
    if (c.format == "csv") {
        emit(c, "hinfnorm.csv", "hinf_norm,lower_bound\n" + dump(r.value) + "," + dump(r.lower_bound) + "\n");
    } else {
        emit(c, "hinfnorm.json", dump(report_json(r)) + "\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simultaneous estimator synthesis for finite plant families"};
    app.require_subcommand(1);
    Common common;

    auto* validate = app.add_subcommand("validate", "Check a plant-set file and print its dimensions");
    add_common(validate, common, false);
    auto* mers = app.add_subcommand("synth-mers", "Run the MERS estimator search");
    add_common(mers, common, true);
    auto* grc  = app.add_subcommand("synth-grc", "Run the gap-reducing compensator search");
    add_common(grc, common, true);
    int base = 0;
    grc->add_option("--base", base, "Reference plant number (default: MERS selection)");
    auto* sim = app.add_subcommand("simulate", "Synthesize and simulate every estimator on every plant");
    add_common(sim, common, true);
    auto* cmp = app.add_subcommand("compare", "Full pipeline with nominal and perturbed comparison tables");
    add_common(cmp, common, true);
    auto*            gap = app.add_subcommand("nugap", "nu-gap between two plants of the set");
    std::vector<int> pair;
    add_common(gap, common, false);
    gap->add_option("--pair", pair, "Two plant numbers (from 1)")->required()->expected(2);
    auto* hn    = app.add_subcommand("hinfnorm", "H-infinity norm of one plant");
    int   plant = 1;
    add_common(hn, common, false);
    hn->add_option("--plant", plant, "Plant number (from 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*validate) return cmd_validate(common);
        if (*mers) return cmd_synth_mers(common);
        if (*grc) return cmd_synth_grc(common, base);
        if (*sim) return cmd_pipeline(common, true);
        if (*cmp) return cmd_pipeline(common, false);
        if (*gap) return cmd_nugap(common, pair);
        if (*hn) return cmd_hinfnorm(common, plant);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 2;
}
