#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tabext/checkpoint.hpp"
#include "tabext/dataset.hpp"
#include "tabext/features.hpp"
#include "tabext/ingest.hpp"
#include "tabext/label_store.hpp"
#include "tabext/metrics.hpp"
#include "tabext/network.hpp"
#include "tabext/synthgen.hpp"

namespace tabext {

namespace fs = std::filesystem;

inline constexpr std::string_view kOverlaySchema = "tabext.overlay/1";

/// Parses every TSV in a corpus directory (sorted by name). Throws EmptyInput
/// when there is none.
std::vector<DocumentModel> load_corpus(const fs::path& dir);

/// Overwrites row labels with the store's effective labels where it has one.
void apply_labels(std::vector<FeatureRow>& rows, const LabelStore& labels);

/// Featurizes, encodes and normalizes one document with the checkpoint's
/// vocabulary and statistics, then scores every token.
std::vector<Prediction> score_document(const ModelCheckpoint& checkpoint, const DocumentModel& doc, double threshold,
    std::optional<int> tolerance = std::nullopt);

/// Per-token overlay: text, box, probability and label.
nlohmann::json prediction_overlay(const DocumentModel& doc, const std::vector<Prediction>& predictions, double threshold);

struct SynthOptions {
    std::size_t n = 0;
    LayoutSpec spec;
    std::uint64_t seed = 1;
    fs::path out_dir;
};

void run_synth(const SynthOptions& options);

enum class FeatureFormat { Jsonl, Csv };

struct FeaturizeOptions {
    fs::path corpus_dir;
    fs::path out;
    std::optional<int> tolerance;
    /// Defaults to <corpus_dir>/labels.jsonl when that file exists.
    std::optional<fs::path> labels;
    FeatureFormat format = FeatureFormat::Jsonl;
};

/// Returns the number of rows written.
std::size_t run_featurize(const FeaturizeOptions& options);

struct TrainOptions {
    fs::path features;
    std::optional<fs::path> labels;
    fs::path out_dir;
    SplitSpec split;
    NetworkConfig network;
    bool export_encoded = false;
};

struct TrainSummary {
    DocumentSplit split;
    std::optional<MetricsReport> test;
    std::optional<MetricsReport> validation;
    TrainingMetadata training;
    fs::path checkpoint_path;
};

/// Splits by document, fits vocabulary and normalizer on the training split,
/// trains, and writes checkpoint.json, history.csv, split.json, report.txt and
/// report.json into out_dir (plus encoded CSVs and dataset.json on request).
TrainSummary run_train(const TrainOptions& options);

struct PredictOptions {
    fs::path checkpoint;
    fs::path tsv;
    fs::path out;
    std::optional<double> threshold;
    std::optional<int> tolerance;
};

/// Returns the number of tokens scored.
std::size_t run_predict(const PredictOptions& options);

struct EvalOptions {
    fs::path checkpoint;
    fs::path features;
    std::optional<fs::path> labels;
    std::optional<double> threshold;
};

MetricsReport run_eval(const EvalOptions& options);

} // namespace tabext
