#pragma once

#include <string>
#include <vector>

#include "mamnet/config.hpp"
#include "mamnet/data.hpp"
#include "mamnet/model.hpp"

namespace mamnet {

/// Trained model plus everything needed to reproduce its predictions:
/// the effective run config (including the post-selection feature count),
/// parameter tensors, normalization stats, and selected feature columns.
struct Checkpoint {
    RunConfig config;
    std::size_t feature_dim = 0;  // model input width after selection
    ModelParams params;
    NormStats stats;
    std::vector<std::size_t> selected_features;
    std::vector<std::string> feature_names;

    ModelConfig model_config() const;
};

/// Text format: header "mamnet-checkpoint v1", a config block, preprocessing
/// blocks, then one block per parameter tensor with its shape and row-major
/// values at 17 significant digits (round-trip exact for 64-bit floats).
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);

/// Rejects wrong headers/versions and truncated tensor blocks with a
/// DataError naming the offender.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mamnet
