#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "simest/pipeline.hpp"
#include "support/oracles.hpp"

using namespace simest;

namespace {

Json scalar_doc() {
    return Json::parse(R"({
        "schema_version": 1,
        "plants": [{"label": "a", "A": [[-1.0]]}, {"label": "b", "A": [[-2.0]]}],
        "B": [[1.0]], "C": [[1.0]], "Cz": [[1.0]]
    })");
}

std::string error_of(const Json& doc) {
    try {
        parse_plant_set(doc);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

// n = 11 states, 3 inputs, 5 measured and 6 estimated states, as in the aircraft model layout.
PlantSetFile nav_shaped(std::uint64_t seed, int members) {
    std::mt19937_64 rng(seed);
    const int       n = 11;
    Matrix          A0 = oracle::random_matrix(rng, n, n, 0.4) - 1.5 * Matrix::Identity(n, n);
    std::vector<Matrix> A;
    for (int i = 0; i < members; ++i) A.push_back(A0 + oracle::random_matrix(rng, n, n, 0.05));
    const Matrix   B  = oracle::random_matrix(rng, n, 3);
    const Matrix   I  = Matrix::Identity(n, n);
    const int      meas[5] = {2, 3, 7, 8, 9};
    const int      est[6]  = {0, 1, 4, 5, 6, 10};
    Matrix         C(5, n), Cz(6, n);
    for (int k = 0; k < 5; ++k) C.row(k) = I.row(meas[k]);
    for (int k = 0; k < 6; ++k) Cz.row(k) = I.row(est[k]);
    return {PlantSet(A, B, C, Cz), {}, true};
}

RunConfig quick_config(std::uint64_t seed) {
    RunConfig cfg;
    cfg.seed                      = seed;
    cfg.mers_ga.population_size   = 6;
    cfg.mers_ga.max_generations   = 2;
    cfg.grc_ga.population_size    = 6;
    cfg.grc_ga.max_generations    = 2;
    cfg.gap.grid_points           = 128;
    cfg.compare.duration          = 3.0;
    cfg.compare.step              = 2e-3;
    return cfg;
}

}  // namespace

TEST_CASE("plant files load and report the violated invariant") {
    SUBCASE("two scalar plants") {
        const auto f = parse_plant_set(scalar_doc());
        CHECK(f.set.size() == 2);
        CHECK(f.set.labels()[1] == "b");
        CHECK(f.perturbation_percent.empty());
    }
    SUBCASE("B differs between plants") {
        Json d              = scalar_doc();
        d.erase("B");
        d["plants"][0]["B"] = Json::parse("[[1.0]]");
        d["plants"][1]["B"] = Json::parse("[[2.0]]");
        CHECK(error_of(d) == "plant file: B differs between plants 1 and 2");
    }
    SUBCASE("per-plant C disagreeing with the shared C") {
        Json d              = scalar_doc();
        d["plants"][1]["C"] = Json::parse("[[3.0]]");
        CHECK(error_of(d) == "plant file: C of plant 2 differs from the shared C");
    }
    SUBCASE("C differs between plants 1 and 3") {
        std::ifstream in(std::string(SIMEST_TEST_DATA) + "/mismatched_c.json");
        REQUIRE(in);
        CHECK_THROWS_WITH_AS(read_plant_set(in), "plant file: C differs between plants 1 and 3", ValidationError);
    }
    SUBCASE("schema and shape problems") {
        Json d = scalar_doc();
        d["schema_version"] = 2;
        CHECK(error_of(d).find("schema_version") != std::string::npos);
        d = scalar_doc();
        d.erase("schema_version");
        CHECK(error_of(d).find("schema_version") != std::string::npos);
        d = scalar_doc();
        d["plants"].erase(1);
        CHECK(error_of(d).find("at least two plants") != std::string::npos);
        d = scalar_doc();
        d["extra"] = 1;
        CHECK(error_of(d).find("unknown field 'extra'") != std::string::npos);
        d = scalar_doc();
        d["plants"][1]["A"] = Json::parse("[[1.0, 0.0], [0.0]]");
        CHECK_THROWS_AS(parse_plant_set(d), DimensionError);
        d = scalar_doc();
        d["plants"][0]["perturbation_percent"] = 5.0;
        CHECK(error_of(d).find("every plant or none") != std::string::npos);
        std::istringstream broken("{\"schema_version\": 1, ");
        CHECK_THROWS_AS(read_plant_set(broken), ValidationError);
        CHECK_THROWS_AS(load_plant_set("/nonexistent/plants.json"), ValidationError);
    }
    SUBCASE("plant-level invariants are enforced on load") {
        Json d              = scalar_doc();
        d["plants"][1]["A"] = Json::parse("[[1.0]]");
        d["C"]              = Json::parse("[[0.0]]");
        CHECK(error_of(d).find("not detectable") != std::string::npos);
    }
}

TEST_CASE("aircraft-shaped plant files pass the dimension checks") {
    const auto f   = nav_shaped(3, 4);
    const Json doc = plant_set_json(f);
    const auto g   = parse_plant_set(doc);
    CHECK(g.set.states() == 11);
    CHECK(g.set.inputs() == 3);
    CHECK(g.set.outputs() == 5);
    CHECK(g.set.estimated() == 6);
    CHECK(g.complementary);
    CHECK(g.set.complementary_outputs());

    Json short_cz = doc;
    short_cz["Cz"].erase(5);
    CHECK(error_of(short_cz).find("must equal the state count 11") != std::string::npos);
    Json singular    = doc;
    singular["Cz"][0] = singular["C"][0];
    CHECK(error_of(singular) == "plant file: [C; Cz] is singular");
}

TEST_CASE("save then load reproduces the plant set exactly") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const int           n = 1 + trial % 5;
        std::vector<Matrix> A;
        std::vector<double> pct;
        for (int i = 0; i < 2 + trial % 3; ++i) {
            A.push_back(oracle::random_matrix(rng, n, n, 3.0) - 4.0 * Matrix::Identity(n, n));
            pct.push_back(1.0 + i);
        }
        const Matrix       B  = oracle::random_matrix(rng, n, 2);
        const Matrix       C  = oracle::random_matrix(rng, 1 + trial % 2, n);
        const Matrix       Cz = oracle::random_matrix(rng, 1, n);
        const PlantSetFile f{PlantSet(A, B, C, Cz), pct, false};
        std::stringstream  io;
        io << dump(plant_set_json(f));
        const auto g = read_plant_set(io);
        REQUIRE(g.set.size() == f.set.size());
        for (std::size_t i = 0; i < A.size(); ++i) CHECK((g.set.A(i) - A[i]).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK(g.set.B() == B);
        CHECK(g.set.C() == C);
        CHECK(g.set.Cz() == Cz);
        CHECK(g.set.labels() == f.set.labels());
        CHECK(g.perturbation_percent == pct);
    }
    const auto         path = std::filesystem::temp_directory_path() / "simest_roundtrip.json";
    const PlantSetFile f    = nav_shaped(8, 3);
    save_plant_set(f, path);
    const auto g = load_plant_set(path);
    CHECK(g.set.A(2) == f.set.A(2));
    std::filesystem::remove(path);
}

TEST_CASE("floats are emitted at round-trip precision") {
    const double v[] = {0.1 + 0.2, 1.0 / 3.0, 6.02214076e23, -4.9406564584124654e-324, 2.718281828459045};
    for (double x : v) CHECK(Json::parse(dump(Json(x))).get<double>() == x);
    CHECK(dump(Json(std::nan(""))) == "null");
}

TEST_CASE("run configuration") {
    RunConfig c;
    c.gamma                      = 0.75;
    c.seed                       = 99;
    c.mers_ga.max_generations    = 7;
    c.compare.noise.channels     = {1, 4};
    c.compare.perturbation_percent = {3.0};
    const RunConfig d = config_from_json(config_json(c));
    CHECK(config_json(d) == config_json(c));
    CHECK(d.mers_ga.max_generations == 7);

    Json bad   = config_json(c);
    bad["gamma"] = -1.0;
    CHECK_THROWS_WITH_AS(config_from_json(bad), "config: gamma must be positive and finite", ValidationError);
    bad = config_json(c);
    bad["mers_ga"]["population_size"] = 2;
    CHECK_THROWS_AS(config_from_json(bad), ValidationError);
    bad = config_json(c);
    bad["simulation"]["stepsize"] = 0.1;
    CHECK_THROWS_AS(config_from_json(bad), ValidationError);
    bad = config_json(c);
    bad["seed"] = "seven";
    CHECK_THROWS_AS(config_from_json(bad), ValidationError);
    CHECK_NOTHROW(config_from_json(Json::object()));
}

TEST_CASE("derived seeds") {
    CHECK(derive_seed(1, 1) == derive_seed(1, 1));
    CHECK(derive_seed(1, 1) != derive_seed(1, 2));
    CHECK(derive_seed(1, 1) != derive_seed(2, 1));
    CHECK(derive_seed(1ULL << 40, 1) != derive_seed(0, 1));
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(ValidationError("x")) == 2);
    CHECK(exit_code_for(DimensionError("x")) == 2);
    CHECK(exit_code_for(DomainError("x")) == 2);
    CHECK(exit_code_for(SynthesisError("x")) == 3);
    CHECK(exit_code_for(NumericError("x")) == 4);
    CHECK(exit_code_for(BoundaryError("x")) == 4);
}

TEST_CASE("pipeline on identical plants completes with no GR improvement") {
    std::ifstream in(std::string(SIMEST_TEST_DATA) + "/identical.json");
    REQUIRE(in);
    const auto f = read_plant_set(in);
    auto       cfg = quick_config(4);
    cfg.gamma      = 5.0;
    const auto b   = run_pipeline(cfg, f);
    CHECK(b.status == "ok");
    REQUIRE(b.grc.is_object());
    CHECK(b.grc["feasible"] == false);
    REQUIRE(b.comparison.is_object());
    for (const auto& row : b.comparison["nominal"]) CHECK(row["mers"] == row["grmers"]);
    CHECK(b.traces.size() == 12);
}

TEST_CASE("pipeline is reproducible from the master seed") {
    std::ifstream in(std::string(SIMEST_TEST_DATA) + "/scalar_family.json");
    REQUIRE(in);
    const auto f   = read_plant_set(in);
    const auto a   = run_pipeline(quick_config(21), f);
    const auto b   = run_pipeline(quick_config(21), f);
    const auto c   = run_pipeline(quick_config(22), f);
    CHECK(a.status == "ok");
    CHECK(a.hash() == b.hash());
    CHECK(a.summary() == b.summary());
    CHECK(a.hash() != c.hash());
    CHECK(a.config["seed"] == 21);
    CHECK(a.config["derived_seeds"]["mers_ga"] == derive_seed(21, 1));

    // Verification norms are recomputed and must not exceed the reported J.
    REQUIRE(a.mers["feasible"] == true);
    CHECK(a.mers["verification"]["max_norm"].get<double>() <= a.mers["J"].get<double>() * (1 + 1e-6));

    const auto dir = std::filesystem::temp_directory_path() / "simest_bundle_test";
    std::filesystem::remove_all(dir);
    write_bundle(a, dir, TraceFormat::csv);
    for (const char* name : {"mers.json", "grc.json", "filters.json", "comparison.json", "comparison.csv", "bundle.json"}) {
        CHECK(std::filesystem::exists(dir / name));
    }
    std::ifstream mers(dir / "mers.json");
    const Json    report = Json::parse(mers);
    CHECK(report["seed"] == 21);
    CHECK(report["config"]["gamma"] == 1.0);
    std::ifstream bundle(dir / "bundle.json");
    CHECK(Json::parse(bundle)["hash"] == a.hash());
    CHECK(std::filesystem::exists(dir / "traces" / "nominal_slow_mers.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("an infeasible MERS stage becomes a structured report") {
    std::ifstream in(std::string(SIMEST_TEST_DATA) + "/scalar_family.json");
    REQUIRE(in);
    const auto f   = read_plant_set(in);
    auto       cfg = quick_config(5);
    cfg.gamma      = 1e-9;
    ArtifactBundle b;
    CHECK_NOTHROW(b = run_pipeline(cfg, f));
    CHECK(b.status == "no_feasible");
    CHECK(b.failed_stage == "mers");
    CHECK(b.mers["feasible"] == false);
    CHECK(b.comparison.is_null());
}
