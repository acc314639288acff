#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "simest/io.hpp"

namespace simest {

enum class TraceFormat { json, csv };

/// Stage outputs of one pipeline run, in emission order.
struct ArtifactBundle {
    Json                      config;       // effective configuration including derived seeds
    Json                      mers;         // null when the stage did not run
    Json                      grc;
    Json                      filters;
    Json                      comparison;
    std::vector<LabeledTrace> traces;
    std::vector<std::string>  warnings;
    std::string               status = "ok";  // ok | no_feasible | invalid | numeric_failure
    std::string               failed_stage;
    std::string               message;

    /// All reports in one document (traces excluded).
    Json summary() const;

    /// FNV-1a over the summary (minus the output directory) and every trace.
    std::uint64_t hash() const;
};

/// MERSE, then GRC on the MERS base plant, then per-plant H-infinity filters, then the
/// nominal and perturbed comparison. An infeasible MERS stage or a failing filter stage
/// ends the run with a structured status; an infeasible GRC stage falls back to MERS.
ArtifactBundle run_pipeline(const RunConfig& cfg, const PlantSetFile& plants);

/// Writes one file per report plus traces/ and bundle.json into dir.
void write_bundle(const ArtifactBundle& bundle, const std::filesystem::path& dir, TraceFormat format);

Json trace_json(const SimulationTrace& trace);

/// Process exit code for an error escaping a command: 2 validation, 3 no feasible design, 4 numeric.
int exit_code_for(const Error& e);

}  // namespace simest
