#include "tabext/pipeline.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tabext/error.hpp"

namespace tabext {

namespace {

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
}

std::vector<EncodedExample> prepare(std::span<const FeatureRow> rows, const PatternVocab& vocab, const NormStats& norm)
{
    auto examples = encode_all(rows, vocab);
    for (auto& ex : examples) {
        apply_normalizer(ex.features, norm);
    }
    return examples;
}

std::vector<int> labels_of(std::span<const EncodedExample> examples)
{
    std::vector<int> y;
    y.reserve(examples.size());
    for (const auto& ex : examples) {
        y.push_back(ex.label);
    }
    return y;
}

std::optional<MetricsReport> score(const Mlp& model, std::span<const EncodedExample> examples, double threshold)
{
    if (examples.empty()) {
        return std::nullopt;
    }
    const auto predictions = predict(model, examples, threshold);
    std::vector<int> predicted;
    predicted.reserve(predictions.size());
    for (const auto& p : predictions) {
        predicted.push_back(p.label);
    }
    return compute_metrics(predicted, labels_of(examples));
}

} // namespace

std::vector<DocumentModel> load_corpus(const fs::path& dir)
{
    const auto files = list_tsv_files(dir);
    if (files.empty()) {
        throw Error(ErrorKind::EmptyInput, "no documents in " + dir.string());
    }
    std::vector<DocumentModel> docs;
    docs.reserve(files.size());
    for (const auto& file : files) {
        docs.push_back(parse_tsv_file(file));
    }
    return docs;
}

void apply_labels(std::vector<FeatureRow>& rows, const LabelStore& labels)
{
    for (auto& row : rows) {
        if (const auto record = labels.effective({row.doc_id, row.token_index})) {
            row.label = record->label;
        }
    }
}

std::vector<Prediction> score_document(const ModelCheckpoint& checkpoint, const DocumentModel& doc, double threshold,
    std::optional<int> tolerance)
{
    require_feature_schema(checkpoint, kFeatureSchema);
    const auto rows = featurize_document(doc, tolerance);
    if (rows.empty()) {
        return {};
    }
    const auto examples = prepare(rows, checkpoint.vocab, checkpoint.norm);
    return predict(checkpoint.model, examples, threshold);
}

nlohmann::json prediction_overlay(const DocumentModel& doc, const std::vector<Prediction>& predictions, double threshold)
{
    const auto tokens = doc.tokens();
    if (tokens.size() != predictions.size()) {
        throw Error(ErrorKind::LengthMismatch, "prediction count differs from token count");
    }
    auto pages = nlohmann::json::array();
    for (const auto& page : doc.pages) {
        pages.push_back({{"page_num", page.page_num}, {"page_width", page.width}, {"page_height", page.height}});
    }
    auto out = nlohmann::json::array();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = *tokens[i];
        out.push_back({
            {"token_index", i},
            {"page_num", t.page_num},
            {"text", t.text},
            {"box", {{"left", t.left}, {"top", t.top}, {"width", t.width}, {"height", t.height}}},
            {"probability", predictions[i].probability},
            {"label", predictions[i].label},
        });
    }
    return {
        {"schema", kOverlaySchema},
        {"doc_id", doc.doc_id},
        {"threshold", threshold},
        {"pages", std::move(pages)},
        {"tokens", std::move(out)},
    };
}

void run_synth(const SynthOptions& options)
{
    if (options.out_dir.empty()) {
        throw Error(ErrorKind::Config, "an output directory is required");
    }
    generate_corpus(options.n, options.spec, options.seed, options.out_dir);
}

std::size_t run_featurize(const FeaturizeOptions& options)
{
    const auto docs = load_corpus(options.corpus_dir);
    std::vector<FeatureRow> rows;
    for (const auto& doc : docs) {
        auto doc_rows = featurize_document(doc, options.tolerance);
        rows.insert(rows.end(), std::make_move_iterator(doc_rows.begin()), std::make_move_iterator(doc_rows.end()));
    }
    auto labels_path = options.labels;
    if (!labels_path && fs::exists(options.corpus_dir / "labels.jsonl")) {
        labels_path = options.corpus_dir / "labels.jsonl";
    }
    if (labels_path) {
        const LabelStore store(*labels_path, LabelStoreMode::ReadOnly);
        apply_labels(rows, store);
    }

    std::ostringstream out;
    if (options.format == FeatureFormat::Csv) {
        write_features_csv(out, rows);
    } else {
        write_features_jsonl(out, rows);
    }
    if (options.out.has_parent_path()) {
        fs::create_directories(options.out.parent_path());
    }
    write_file(options.out, out.str());
    return rows.size();
}

TrainSummary run_train(const TrainOptions& options)
{
    options.split.validate();
    options.network.validate();
    if (options.network.input_dim != static_cast<int>(kEncodedDim)) {
        throw Error(ErrorKind::Config, "input_dim must equal the encoded dimension " + std::to_string(kEncodedDim));
    }
    auto rows = read_features_file(options.features);
    if (rows.empty()) {
        throw Error(ErrorKind::EmptyDataset, "feature file " + options.features.string() + " has no rows");
    }
    if (options.labels) {
        const LabelStore store(*options.labels, LabelStoreMode::ReadOnly);
        apply_labels(rows, store);
    }
    for (const auto& row : rows) {
        if (row.label != 0 && row.label != 1) {
            throw Error(ErrorKind::InvalidLabel, "token " + row.doc_id + "#" + std::to_string(row.token_index) + " has no label");
        }
    }

    std::set<std::string> doc_set;
    for (const auto& row : rows) {
        doc_set.insert(row.doc_id);
    }
    TrainSummary summary;
    summary.split = split_documents({doc_set.begin(), doc_set.end()}, options.split);

    std::map<std::string, int> partition;
    for (const auto& d : summary.split.train) partition[d] = 0;
    for (const auto& d : summary.split.test) partition[d] = 1;
    for (const auto& d : summary.split.validation) partition[d] = 2;
    std::vector<FeatureRow> parts[3];
    for (auto& row : rows) {
        parts[partition.at(row.doc_id)].push_back(std::move(row));
    }

    const auto vocab = PatternVocab::build(parts[0]);
    const auto train_raw = encode_all(parts[0], vocab);
    const auto norm = fit_normalizer(train_raw);
    const auto train_set = prepare(parts[0], vocab, norm);
    const auto test_set = prepare(parts[1], vocab, norm);
    const auto val_set = prepare(parts[2], vocab, norm);

    const auto result = train(train_set, val_set, options.network);

    ModelCheckpoint checkpoint;
    checkpoint.model = result.model;
    checkpoint.norm = norm;
    checkpoint.vocab = vocab;
    checkpoint.config = options.network;
    checkpoint.training = {result.epochs_run, result.best_epoch, result.best_val_f1};
    summary.training = checkpoint.training;

    const double threshold = options.network.threshold;
    summary.test = score(result.model, test_set, threshold);
    summary.validation = score(result.model, val_set, threshold);

    fs::create_directories(options.out_dir);
    summary.checkpoint_path = options.out_dir / "checkpoint.json";
    save_checkpoint(checkpoint, summary.checkpoint_path);

    std::ostringstream history;
    write_history_csv(history, result.history);
    write_file(options.out_dir / "history.csv", history.str());

    const nlohmann::json split_json{
        {"train", summary.split.train},
        {"test", summary.split.test},
        {"validation", summary.split.validation},
        {"seed", options.split.seed},
    };
    write_file(options.out_dir / "split.json", split_json.dump(2) + "\n");

    std::string text;
    nlohmann::json report_json{{"schema", kReportSchema}};
    if (summary.test) {
        text += render_report(*summary.test, "test split") + "\n";
        report_json["test"] = to_json(*summary.test);
    }
    if (summary.validation) {
        text += render_report(*summary.validation, "validation split") + "\n";
        report_json["validation"] = to_json(*summary.validation);
    }
    report_json["training"] = {{"epochs_run", result.epochs_run}, {"best_epoch", result.best_epoch},
        {"best_val_f1", result.best_val_f1}};
    write_file(options.out_dir / "report.txt", text);
    write_file(options.out_dir / "report.json", report_json.dump(2) + "\n");

    if (options.export_encoded) {
        const std::pair<const char*, const std::vector<EncodedExample>*> sets[] = {
            {"encoded_train.csv", &train_set}, {"encoded_test.csv", &test_set}, {"encoded_validation.csv", &val_set}};
        for (const auto& [name, set] : sets) {
            std::ostringstream csv;
            write_encoded_csv(csv, *set);
            write_file(options.out_dir / name, csv.str());
        }
        write_file(options.out_dir / "dataset.json", dataset_sidecar(norm, vocab).dump(2) + "\n");
    }
    return summary;
}

std::size_t run_predict(const PredictOptions& options)
{
    const auto checkpoint = load_checkpoint(options.checkpoint);
    require_feature_schema(checkpoint, kFeatureSchema);
    const auto doc = parse_tsv_file(options.tsv);
    const double threshold = options.threshold.value_or(checkpoint.config.threshold);
    const auto predictions = score_document(checkpoint, doc, threshold, options.tolerance);
    if (options.out.has_parent_path()) {
        fs::create_directories(options.out.parent_path());
    }
    write_file(options.out, prediction_overlay(doc, predictions, threshold).dump(2) + "\n");
    return predictions.size();
}

MetricsReport run_eval(const EvalOptions& options)
{
    const auto checkpoint = load_checkpoint(options.checkpoint);
    require_feature_schema(checkpoint, kFeatureSchema);
    auto rows = read_features_file(options.features);
    if (options.labels) {
        const LabelStore store(*options.labels, LabelStoreMode::ReadOnly);
        apply_labels(rows, store);
    }
    if (rows.empty()) {
        throw Error(ErrorKind::EmptyInput, "feature file " + options.features.string() + " has no rows");
    }
    for (const auto& row : rows) {
        if (row.label != 0 && row.label != 1) {
            throw Error(ErrorKind::InvalidLabel, "token " + row.doc_id + "#" + std::to_string(row.token_index) + " has no label");
        }
    }
    const auto examples = prepare(rows, checkpoint.vocab, checkpoint.norm);
    const double threshold = options.threshold.value_or(checkpoint.config.threshold);
    return *score(checkpoint.model, examples, threshold);
}

} // namespace tabext
