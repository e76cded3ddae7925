#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tabext/features.hpp"

namespace tabext {

/// Number of LineBlockRegex slots kept from the training split; one more slot
/// catches everything else.
inline constexpr std::size_t kPatternVocabSize = 64;

/// Numeric fields passed straight through, in vector order.
inline constexpr std::array<std::string_view, 24> kNumericColumns{
    "BlockNo", "BlockCharCount", "LineWordCount", "BlockWidth", "LineCharCount", "IsFirstInt",
    "BlockWordCount", "PageWidth", "PageHeight", "LeftAlignmentCount", "RightAlignmentCount",
    "Width", "Height", "CharCount", "Left", "Top", "LeftMargin", "TopMargin",
    "FirstQuarter", "SecondQuarter", "ThirdQuarter", "FourthQuarter", "LineNo", "PageNo",
};

inline constexpr std::size_t kEncodedDim = kNumericColumns.size() + kPatternSymbols.size() + kPatternVocabSize + 1;

/// Names of every encoded dimension, in vector order.
std::vector<std::string> encoded_dimension_names();

/// The most frequent LineBlockRegex strings of the training split.
class PatternVocab {
public:
    PatternVocab() = default;
    explicit PatternVocab(std::vector<std::string> patterns);

    /// Top kPatternVocabSize patterns by frequency; ties go to the
    /// lexicographically smaller pattern.
    static PatternVocab build(std::span<const FeatureRow> train, std::size_t size = kPatternVocabSize);

    /// Slot of a pattern, or nullopt when it falls into the out-of-vocabulary slot.
    std::optional<std::size_t> slot(std::string_view pattern) const;

    const std::vector<std::string>& patterns() const { return patterns_; }

    bool operator==(const PatternVocab&) const = default;

private:
    std::vector<std::string> patterns_;
};

struct EncodedExample {
    std::vector<double> features;
    int label = kUnlabeled;
    std::string doc_id;
    int token_index = 0;
};

/// Numeric fields pass through; TextPattern and LineBlockRegex become one-hot
/// blocks. RawText and the group ids are not part of the vector.
EncodedExample encode(const FeatureRow& row, const PatternVocab& vocab);
std::vector<EncodedExample> encode_all(std::span<const FeatureRow> rows, const PatternVocab& vocab);

/// Per-dimension training minimum and maximum.
struct NormStats {
    std::vector<double> min;
    std::vector<double> max;

    bool operator==(const NormStats&) const = default;
};

NormStats fit_normalizer(std::span<const EncodedExample> train);

/// Min-max scaling into [0, 1]; constant dimensions map to 0, values outside
/// the training range are clamped.
void apply_normalizer(std::vector<double>& x, const NormStats& stats);
std::vector<double> normalized(std::vector<double> x, const NormStats& stats);

struct SplitSpec {
    double train_fraction = 0.7;
    double test_fraction = 0.2;
    double validation_fraction = 0.1;
    std::uint64_t seed = 42;

    /// Throws Config unless all fractions are in [0, 1] and sum to 1.
    void validate() const;
};

struct DocumentSplit {
    std::vector<std::string> train;
    std::vector<std::string> test;
    std::vector<std::string> validation;
};

/// Shuffles the (sorted) document ids with the seed and cuts them into
/// round(test * n) test and round(validation * n) validation documents; the
/// remainder trains. Needs at least 10 distinct documents.
DocumentSplit split_documents(std::vector<std::string> doc_ids, const SplitSpec& spec);

inline constexpr std::size_t kMinSplitDocuments = 10;

nlohmann::json to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PatternVocab& vocab);
PatternVocab pattern_vocab_from_json(const nlohmann::json& j);

inline constexpr std::string_view kDatasetSchema = "tabext.dataset/1";

/// Header names every dimension; rows carry doc_id, token_index and label first.
void write_encoded_csv(std::ostream& out, std::span<const EncodedExample> examples);

/// Sidecar describing an encoded CSV: schema versions, vocabulary, normalizer.
nlohmann::json dataset_sidecar(const NormStats& stats, const PatternVocab& vocab);

} // namespace tabext
