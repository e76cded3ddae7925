#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tabext/error.hpp"
#include "tabext/features.hpp"
#include "tabext/ingest.hpp"
#include "tabext/metrics.hpp"
#include "tabext/pipeline.hpp"
#include "tabext/synthgen.hpp"
#include "tabext/textpattern.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Structured results cross the boundary as JSON text; the Python package decodes them.

std::string features_of_tsv(const std::string& text, const std::string& doc_id, std::optional<int> tolerance)
{
    const auto doc = tabext::parse_tsv(text, doc_id);
    auto rows = json::array();
    for (const auto& row : tabext::featurize_document(doc, tolerance)) {
        rows.push_back(tabext::to_json(row));
    }
    return rows.dump();
}

std::string metrics_json(const std::vector<int>& predictions, const std::vector<int>& labels)
{
    return tabext::to_json(tabext::compute_metrics(predictions, labels)).dump();
}

std::string synth_invoice(const std::string& spec_json, const std::string& doc_id)
{
    const auto spec = spec_json.empty() ? tabext::LayoutSpec{} : tabext::layout_spec_from_json(json::parse(spec_json));
    const auto inv = tabext::generate_invoice(spec, doc_id);
    return json{{"doc_id", inv.doc_id}, {"tsv", inv.tsv}, {"labels", inv.labels}}.dump();
}

void synth_corpus(std::size_t n, const fs::path& out, std::uint64_t seed, const std::string& spec_json)
{
    tabext::SynthOptions o;
    o.n = n;
    o.seed = seed;
    o.out_dir = out;
    if (!spec_json.empty()) {
        o.spec = tabext::layout_spec_from_json(json::parse(spec_json));
    }
    tabext::run_synth(o);
}

std::size_t featurize(const fs::path& corpus, const fs::path& out, std::optional<fs::path> labels,
    const std::string& format, std::optional<int> tolerance)
{
    if (format != "jsonl" && format != "csv") {
        throw tabext::Error(tabext::ErrorKind::Config, "format must be jsonl or csv");
    }
    tabext::FeaturizeOptions o;
    o.corpus_dir = corpus;
    o.out = out;
    o.labels = std::move(labels);
    o.tolerance = tolerance;
    o.format = format == "csv" ? tabext::FeatureFormat::Csv : tabext::FeatureFormat::Jsonl;
    return tabext::run_featurize(o);
}

std::string train(const fs::path& features, const fs::path& out, std::optional<fs::path> labels,
    std::uint64_t seed, std::optional<int> max_epochs, std::optional<double> learning_rate,
    std::optional<int> batch_size, std::optional<int> patience, std::optional<std::vector<int>> hidden,
    bool export_encoded)
{
    tabext::TrainOptions o;
    o.features = features;
    o.out_dir = out;
    o.labels = std::move(labels);
    o.split.seed = seed;
    o.network.seed = seed;
    if (max_epochs) o.network.max_epochs = *max_epochs;
    if (learning_rate) o.network.learning_rate = *learning_rate;
    if (batch_size) o.network.batch_size = *batch_size;
    if (patience) o.network.early_stop_patience = *patience;
    if (hidden) o.network.hidden_dims = *hidden;
    o.export_encoded = export_encoded;
    const auto s = tabext::run_train(o);
    json j{
        {"checkpoint", s.checkpoint_path.string()},
        {"split", {{"train", s.split.train}, {"test", s.split.test}, {"validation", s.split.validation}}},
        {"epochs_run", s.training.epochs_run},
        {"best_epoch", s.training.best_epoch},
        {"best_val_f1", s.training.best_val_f1},
        {"test", s.test ? tabext::to_json(*s.test) : json(nullptr)},
        {"validation", s.validation ? tabext::to_json(*s.validation) : json(nullptr)},
    };
    return j.dump();
}

std::size_t predict(const fs::path& checkpoint, const fs::path& tsv, const fs::path& out,
    std::optional<double> threshold)
{
    tabext::PredictOptions o;
    o.checkpoint = checkpoint;
    o.tsv = tsv;
    o.out = out;
    o.threshold = threshold;
    return tabext::run_predict(o);
}

std::string evaluate(const fs::path& checkpoint, const fs::path& features, std::optional<fs::path> labels,
    std::optional<double> threshold)
{
    tabext::EvalOptions o;
    o.checkpoint = checkpoint;
    o.features = features;
    o.labels = std::move(labels);
    o.threshold = threshold;
    return tabext::to_json(tabext::run_eval(o)).dump();
}

} // namespace

PYBIND11_MODULE(_tabext, m)
{
    m.doc() = "Table-element extraction from OCR token output";

    static py::exception<tabext::Error> error(m, "TabextError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const tabext::Error& e) {
            py::object args = py::make_tuple(tabext::to_string(e.kind()), e.what());
            PyErr_SetObject(error.ptr(), args.ptr());
        }
    });

    m.attr("ENCODED_DIM") = tabext::kEncodedDim;
    m.attr("FEATURE_SCHEMA") = std::string(tabext::kFeatureSchema);

    m.def("classify_text_pattern",
        [](const std::string& text) { return std::string(1, tabext::symbol(tabext::classify_text_pattern(text))); },
        py::arg("text"));
    m.def("line_block_regex",
        [](const std::vector<std::string>& texts) { return tabext::line_block_regex(std::span<const std::string>(texts)); },
        py::arg("texts"));
    m.def("cluster_coordinates",
        [](const std::vector<int>& coords, int tolerance) {
            std::vector<std::pair<int, int>> out;
            for (const auto& g : tabext::cluster_coordinates(coords, tolerance)) {
                out.emplace_back(g.group_id, g.group_count);
            }
            return out;
        },
        py::arg("coords"), py::arg("tolerance"));
    m.def("default_alignment_tolerance", &tabext::default_alignment_tolerance, py::arg("page_width"));
    m.def("_parse_tsv",
        [](const std::string& text, const std::string& doc_id) { return tabext::to_json(tabext::parse_tsv(text, doc_id)).dump(); },
        py::arg("text"), py::arg("doc_id") = "");
    m.def("_featurize_tsv", &features_of_tsv, py::arg("text"), py::arg("doc_id") = "",
        py::arg("tolerance") = std::nullopt);
    m.def("_compute_metrics", &metrics_json, py::arg("predictions"), py::arg("labels"));
    m.def("render_report",
        [](const std::vector<int>& predictions, const std::vector<int>& labels, const std::string& title) {
            return tabext::render_report(tabext::compute_metrics(predictions, labels), title);
        },
        py::arg("predictions"), py::arg("labels"), py::arg("title") = "");
    m.def("_generate_invoice", &synth_invoice, py::arg("spec_json") = "", py::arg("doc_id") = "invoice");
    m.def("_synth", &synth_corpus, py::arg("n"), py::arg("out"), py::arg("seed") = 1, py::arg("spec_json") = "");
    m.def("featurize", &featurize, py::arg("corpus"), py::arg("out"), py::arg("labels") = std::nullopt,
        py::arg("format") = "jsonl", py::arg("tolerance") = std::nullopt);
    m.def("_train", &train, py::arg("features"), py::arg("out"), py::arg("labels") = std::nullopt, py::arg("seed") = 42,
        py::arg("max_epochs") = std::nullopt, py::arg("learning_rate") = std::nullopt,
        py::arg("batch_size") = std::nullopt, py::arg("patience") = std::nullopt, py::arg("hidden") = std::nullopt,
        py::arg("export_encoded") = false);
    m.def("predict", &predict, py::arg("checkpoint"), py::arg("tsv"), py::arg("out"),
        py::arg("threshold") = std::nullopt);
    m.def("_evaluate", &evaluate, py::arg("checkpoint"), py::arg("features"), py::arg("labels") = std::nullopt,
        py::arg("threshold") = std::nullopt);
}
