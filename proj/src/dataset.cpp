#include "tabext/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "tabext/error.hpp"
#include "tabext/random.hpp"

namespace tabext {

std::vector<std::string> encoded_dimension_names()
{
    std::vector<std::string> names;
    names.reserve(kEncodedDim);
    for (auto column : kNumericColumns) {
        names.emplace_back(column);
    }
    for (char c : kPatternSymbols) {
        names.push_back(std::string("TextPattern=") + c);
    }
    for (std::size_t k = 0; k < kPatternVocabSize; ++k) {
        names.push_back("LineBlockRegex#" + std::to_string(k));
    }
    names.emplace_back("LineBlockRegex#oov");
    return names;
}

PatternVocab::PatternVocab(std::vector<std::string> patterns)
    : patterns_(std::move(patterns))
{
    if (patterns_.size() > kPatternVocabSize) {
        throw Error(ErrorKind::SchemaMismatch, "pattern vocabulary larger than " + std::to_string(kPatternVocabSize));
    }
}

PatternVocab PatternVocab::build(std::span<const FeatureRow> train, std::size_t size)
{
    std::map<std::string, std::size_t> counts;
    for (const auto& row : train) {
        ++counts[row.line_block_regex];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> patterns;
    for (std::size_t k = 0; k < ranked.size() && k < std::min(size, kPatternVocabSize); ++k) {
        patterns.push_back(ranked[k].first);
    }
    return PatternVocab(std::move(patterns));
}

std::optional<std::size_t> PatternVocab::slot(std::string_view pattern) const
{
    const auto it = std::find(patterns_.begin(), patterns_.end(), pattern);
    if (it == patterns_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - patterns_.begin());
}

EncodedExample encode(const FeatureRow& r, const PatternVocab& vocab)
{
    EncodedExample ex;
    ex.label = r.label;
    ex.doc_id = r.doc_id;
    ex.token_index = r.token_index;
    ex.features = {
        double(r.block_no), double(r.block_char_count), double(r.line_word_count), double(r.block_width),
        double(r.line_char_count), double(r.is_first_int), double(r.block_word_count), double(r.page_width),
        double(r.page_height), double(r.left_alignment_count), double(r.right_alignment_count), double(r.width),
        double(r.height), double(r.char_count), double(r.left), double(r.top), r.left_margin, r.top_margin,
        double(r.first_quarter), double(r.second_quarter), double(r.third_quarter), double(r.fourth_quarter),
        double(r.line_no), double(r.page_no),
    };
    ex.features.resize(kEncodedDim, 0.0);
    const std::size_t pattern_base = kNumericColumns.size();
    ex.features[pattern_base + static_cast<std::size_t>(pattern_index(r.text_pattern))] = 1.0;
    const std::size_t vocab_base = pattern_base + kPatternSymbols.size();
    const auto slot = vocab.slot(r.line_block_regex);
    ex.features[vocab_base + slot.value_or(kPatternVocabSize)] = 1.0;
    return ex;
}

std::vector<EncodedExample> encode_all(std::span<const FeatureRow> rows, const PatternVocab& vocab)
{
    std::vector<EncodedExample> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        out.push_back(encode(row, vocab));
    }
    return out;
}

NormStats fit_normalizer(std::span<const EncodedExample> train)
{
    if (train.empty()) {
        throw Error(ErrorKind::EmptyTrainingSet, "cannot fit a normalizer on an empty training set");
    }
    const std::size_t dim = train.front().features.size();
    NormStats stats{train.front().features, train.front().features};
    for (const auto& ex : train) {
        if (ex.features.size() != dim) {
            throw Error(ErrorKind::DimensionMismatch, "inconsistent feature dimension in training set");
        }
        for (std::size_t d = 0; d < dim; ++d) {
            stats.min[d] = std::min(stats.min[d], ex.features[d]);
            stats.max[d] = std::max(stats.max[d], ex.features[d]);
        }
    }
    return stats;
}

void apply_normalizer(std::vector<double>& x, const NormStats& stats)
{
    if (x.size() != stats.min.size()) {
        throw Error(ErrorKind::DimensionMismatch,
            "vector of length " + std::to_string(x.size()) + " against normalizer of " + std::to_string(stats.min.size()));
    }
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double range = stats.max[d] - stats.min[d];
        x[d] = range > 0.0 ? std::clamp((x[d] - stats.min[d]) / range, 0.0, 1.0) : 0.0;
    }
}

std::vector<double> normalized(std::vector<double> x, const NormStats& stats)
{
    apply_normalizer(x, stats);
    return x;
}

void SplitSpec::validate() const
{
    for (double f : {train_fraction, test_fraction, validation_fraction}) {
        if (!(f >= 0.0 && f <= 1.0)) {
            throw Error(ErrorKind::Config, "split fractions must lie in [0, 1]");
        }
    }
    if (std::abs(train_fraction + test_fraction + validation_fraction - 1.0) > 1e-9) {
        throw Error(ErrorKind::Config, "split fractions must sum to 1");
    }
}

DocumentSplit split_documents(std::vector<std::string> doc_ids, const SplitSpec& spec)
{
    spec.validate();
    std::sort(doc_ids.begin(), doc_ids.end());
    if (std::adjacent_find(doc_ids.begin(), doc_ids.end()) != doc_ids.end()) {
        throw Error(ErrorKind::Config, "duplicate document id in split input");
    }
    if (doc_ids.size() < kMinSplitDocuments) {
        throw Error(ErrorKind::TooFewDocuments,
            "need at least " + std::to_string(kMinSplitDocuments) + " documents, got " + std::to_string(doc_ids.size()));
    }
    Rng rng(spec.seed);
    rng.shuffle(doc_ids);

    const auto n = static_cast<double>(doc_ids.size());
    const auto n_test = static_cast<std::size_t>(std::lround(spec.test_fraction * n));
    const auto n_val = static_cast<std::size_t>(std::lround(spec.validation_fraction * n));
    const std::size_t n_train = doc_ids.size() - n_test - n_val;

    DocumentSplit out;
    auto it = doc_ids.begin();
    out.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
    it += static_cast<std::ptrdiff_t>(n_train);
    out.test.assign(it, it + static_cast<std::ptrdiff_t>(n_test));
    it += static_cast<std::ptrdiff_t>(n_test);
    out.validation.assign(it, doc_ids.end());
    return out;
}

nlohmann::json to_json(const NormStats& stats)
{
    return {{"min", stats.min}, {"max", stats.max}};
}

NormStats norm_stats_from_json(const nlohmann::json& j)
{
    NormStats stats{j.at("min").get<std::vector<double>>(), j.at("max").get<std::vector<double>>()};
    if (stats.min.size() != stats.max.size()) {
        throw Error(ErrorKind::SchemaMismatch, "normalizer min/max lengths differ");
    }
    return stats;
}

nlohmann::json to_json(const PatternVocab& vocab)
{
    return {{"size", kPatternVocabSize}, {"patterns", vocab.patterns()}};
}

PatternVocab pattern_vocab_from_json(const nlohmann::json& j)
{
    if (j.at("size").get<std::size_t>() != kPatternVocabSize) {
        throw Error(ErrorKind::SchemaMismatch, "pattern vocabulary size differs from this build");
    }
    return PatternVocab(j.at("patterns").get<std::vector<std::string>>());
}

void write_encoded_csv(std::ostream& out, std::span<const EncodedExample> examples)
{
    out << "doc_id,token_index,label";
    for (const auto& name : encoded_dimension_names()) {
        out << ',' << name;
    }
    out << '\n';
    for (const auto& ex : examples) {
        out << ex.doc_id << ',' << ex.token_index << ',' << ex.label;
        for (double v : ex.features) {
            out << ',' << nlohmann::json(v).dump();
        }
        out << '\n';
    }
}

nlohmann::json dataset_sidecar(const NormStats& stats, const PatternVocab& vocab)
{
    return {
        {"schema", kDatasetSchema},
        {"feature_schema", kFeatureSchema},
        {"dimension", kEncodedDim},
        {"dimension_names", encoded_dimension_names()},
        {"pattern_vocab", to_json(vocab)},
        {"normalizer", to_json(stats)},
    };
}

} // namespace tabext
