#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mamnet/data.hpp"
#include "mamnet/model.hpp"

namespace mamnet {

/// Everything a run needs, parsed from a flat key = value file plus CLI
/// overrides. Unknown keys are rejected. model.feature_dim is not a config
/// key; it is set from the data after feature selection.
struct RunConfig {
    ModelConfig model;
    PipelineOptions pipeline;
    SynthSpec synth;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 42;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<Variant> ablate_variants = {Variant::full, Variant::no_time,
                                            Variant::no_freq, Variant::no_both};
    double validation_fraction = 0.2;
    std::string label_column = "label";
    std::string data_path;
    std::string model_path;
    std::string out_path;
    std::string report_path;
    std::string grid;  // gridsearch spec, e.g. "state_dim = 4, 8 ; epochs = 5, 10"

    void validate() const;
};

/// Applies one key = value assignment. Throws ConfigError on an unknown key
/// or unparseable value.
void apply_config_kv(RunConfig& config, const std::string& key, const std::string& value);

/// Flat key = value UTF-8 text; '#' comments and blank lines are ignored;
/// absent keys keep their defaults. Errors name the key and line.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "config");

/// Canonical serialization: every key in a fixed order, one per line.
std::string serialize_config(const RunConfig& config);

/// FNV-1a 64 hash of the canonical serialization, as 16 hex digits. Embedded
/// in every output file for report-to-run traceability.
std::string config_hash(const RunConfig& config);

}  // namespace mamnet
