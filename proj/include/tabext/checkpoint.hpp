#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tabext/dataset.hpp"
#include "tabext/network.hpp"

namespace tabext {

inline constexpr std::string_view kCheckpointSchema = "tabext.checkpoint/1";

struct TrainingMetadata {
    int epochs_run = 0;
    int best_epoch = 0;
    double best_val_f1 = 0.0;
};

/// Everything inference needs: the network, the normalizer and vocabulary it
/// was trained with, and the feature schema those refer to.
struct ModelCheckpoint {
    Mlp model{std::vector<int>(kLayerCount, 1)};
    NormStats norm;
    PatternVocab vocab;
    std::string feature_schema{kFeatureSchema};
    NetworkConfig config;
    TrainingMetadata training;
};

nlohmann::json to_json(const ModelCheckpoint& checkpoint);

/// Throws SchemaMismatch for an unknown schema or an inconsistent dimension chain.
ModelCheckpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const ModelCheckpoint& checkpoint, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Throws SchemaMismatch unless the checkpoint was trained on `feature_schema`.
void require_feature_schema(const ModelCheckpoint& checkpoint, std::string_view feature_schema);

} // namespace tabext
