#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "simest/lmi.hpp"
#include "simest/nugap.hpp"
#include "simest/sim.hpp"
#include "simest/synthesis.hpp"
#include "simest/sysnorms.hpp"

namespace simest {

using Json = nlohmann::json;

inline constexpr int kPlantFileSchema = 1;
inline constexpr int kConfigSchema    = 1;

/// Contents of a plant-set file: the validated set plus optional per-plant perturbation sizes.
struct PlantSetFile {
    PlantSet            set;
    std::vector<double> perturbation_percent;  // empty or one entry per plant
    bool                complementary = false; // file asked for [C; C_z] to cover the state
};

/// Parses and validates. Files must hold at least two plants.
/// Per-plant "B", "C" or "Cz" entries are allowed but must agree with each other and the shared one.
PlantSetFile parse_plant_set(const Json& doc);
PlantSetFile read_plant_set(std::istream& in);
PlantSetFile load_plant_set(const std::filesystem::path& path);

Json plant_set_json(const PlantSetFile& file);
void save_plant_set(const PlantSetFile& file, const std::filesystem::path& path);

Json   matrix_json(const Matrix& M);  // row-major nested arrays
Matrix matrix_from_json(const Json& j, const std::string& what);

/// Everything a pipeline run needs besides the plant set.
struct RunConfig {
    double         gamma = 1.0;
    GaConfig       mers_ga;
    GaConfig       grc_ga;
    HinfOptions    hinf;
    NuGapOptions   gap;
    LmiOptions     lmi;
    CompareOptions compare;
    std::uint64_t  seed       = 1;
    std::string    output_dir = "simest-out";

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

Json      config_json(const RunConfig& cfg);
RunConfig config_from_json(const Json& doc);  // missing keys keep their defaults
RunConfig load_run_config(const std::filesystem::path& path);

/// Independent stream seed for one pipeline stage, derived from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Reports number plants from 1, like the default labels and the validation messages.
Json bank_json(const CompensatorBank& bank);
Json report_json(const NormResult& r);
Json report_json(const GapResult& r);
Json report_json(const FilterDesign& f);
Json report_json(const ComparisonTable& t);

/// MERS report with the synthesis norms and a recomputed per-plant norm table for estimator j.
Json report_json(const MersResult& r, const PlantSet& set, const HinfOptions& hinf = {});

/// GRC report with the search result and an independent max-gap recomputation.
Json report_json(const GrcResult& r, const NuGapOptions& gap = {});

/// Full-precision dump; NaN and infinities become null.
std::string dump(const Json& j);

}  // namespace simest
