// tabext: synthetic corpora, feature extraction, training, prediction,
// evaluation and the review service behind one command.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 internal error. Errors are written to stderr as one JSON object.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tabext/error.hpp"
#include "tabext/pipeline.hpp"
#include "tabext/review_service.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

int report_error(std::string_view kind, const std::string& message, int code)
{
    std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << std::endl;
    return code;
}

json load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw tabext::Error(tabext::ErrorKind::Config, "cannot open config file " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw tabext::Error(tabext::ErrorKind::Config, "config file " + path + ": " + e.what());
    }
}

json section(const json& config, const char* name)
{
    if (config.is_object() && config.contains(name) && config[name].is_object()) {
        return config[name];
    }
    return json::object();
}

// Command-line flags win over config values, which win over defaults.
template <typename T>
void fill(const CLI::Option* opt, const json& sec, const char* key, T& target)
{
    if (opt->count() > 0 || !sec.contains(key)) {
        return;
    }
    try {
        target = sec.at(key).get<T>();
    } catch (const json::exception& e) {
        throw tabext::Error(tabext::ErrorKind::Config, std::string("config key '") + key + "': " + e.what());
    }
}

template <typename T>
std::optional<T> maybe(const CLI::Option* opt, const T& value)
{
    return opt->count() > 0 ? std::optional<T>(value) : std::nullopt;
}

template <typename T>
void fill_optional(const CLI::Option* opt, const json& sec, const char* key, const T& cli_value, std::optional<T>& target)
{
    if (opt->count() > 0) {
        target = cli_value;
    } else if (sec.contains(key) && !sec[key].is_null()) {
        try {
            target = sec[key].get<T>();
        } catch (const json::exception& e) {
            throw tabext::Error(tabext::ErrorKind::Config, std::string("config key '") + key + "': " + e.what());
        }
    }
}

void require(const fs::path& value, const char* flag)
{
    if (value.empty()) {
        throw tabext::Error(tabext::ErrorKind::Config, std::string(flag) + " is required");
    }
}

void require_exists(const fs::path& path, const char* flag)
{
    require(path, flag);
    if (!fs::exists(path)) {
        throw tabext::Error(tabext::ErrorKind::Io, std::string(flag) + " " + path.string() + " does not exist");
    }
}

int exit_code_for(tabext::ErrorKind kind)
{
    return kind == tabext::ErrorKind::Config ? kUsage : kData;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Table-element extraction from OCR token output"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (default: $TABEXT_CONFIG)");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled invoice corpus");
    std::size_t synth_n = 0;
    std::uint64_t synth_seed = 1;
    std::string synth_out;
    std::string synth_spec;
    int synth_jitter = 2;
    double synth_dropout = 0.02;
    auto* o_synth_n = synth->add_option("--n", synth_n, "Number of invoices");
    auto* o_synth_seed = synth->add_option("--seed", synth_seed, "Master seed");
    auto* o_synth_out = synth->add_option("--out", synth_out, "Output corpus directory");
    auto* o_synth_spec = synth->add_option("--spec", synth_spec, "JSON layout spec file");
    auto* o_synth_jitter = synth->add_option("--jitter", synth_jitter, "Coordinate jitter in px (0-2)");
    auto* o_synth_dropout = synth->add_option("--dropout", synth_dropout, "Token dropout probability (0-0.02)");

    // featurize
    auto* featurize = app.add_subcommand("featurize", "Compute per-token layout features for a corpus");
    std::string feat_corpus;
    std::string feat_out;
    std::string feat_labels;
    std::string feat_format = "jsonl";
    int feat_tolerance = 0;
    auto* o_feat_corpus = featurize->add_option("--corpus", feat_corpus, "Corpus directory of TSV files");
    auto* o_feat_out = featurize->add_option("--out", feat_out, "Output feature file");
    auto* o_feat_labels = featurize->add_option("--labels", feat_labels, "Label file (default: <corpus>/labels.jsonl)");
    auto* o_feat_format = featurize->add_option("--format", feat_format, "jsonl or csv")
                              ->check(CLI::IsMember({"jsonl", "csv"}));
    auto* o_feat_tol = featurize->add_option("--tolerance", feat_tolerance, "Alignment tolerance in px");

    // train
    auto* train = app.add_subcommand("train", "Train the classifier and report held-out metrics");
    tabext::TrainOptions topt;
    std::string train_features;
    std::string train_labels;
    std::string train_out;
    std::uint64_t train_seed = 0;
    auto* o_train_features = train->add_option("--features", train_features, "Feature JSONL file");
    auto* o_train_labels = train->add_option("--labels", train_labels, "Label file overriding feature labels");
    auto* o_train_out = train->add_option("--out", train_out, "Output directory");
    auto* o_train_seed = train->add_option("--seed", train_seed, "Seed for both split and network");
    auto* o_train_frac = train->add_option("--train-fraction", topt.split.train_fraction);
    auto* o_test_frac = train->add_option("--test-fraction", topt.split.test_fraction);
    auto* o_val_frac = train->add_option("--validation-fraction", topt.split.validation_fraction);
    auto* o_lr = train->add_option("--learning-rate", topt.network.learning_rate);
    auto* o_batch = train->add_option("--batch-size", topt.network.batch_size);
    auto* o_epochs = train->add_option("--max-epochs", topt.network.max_epochs);
    auto* o_patience = train->add_option("--patience", topt.network.early_stop_patience);
    auto* o_hidden = train->add_option("--hidden", topt.network.hidden_dims, "Six hidden layer widths")->expected(6);
    auto* o_train_threshold = train->add_option("--threshold", topt.network.threshold);
    auto* o_export = train->add_flag("--export-encoded", topt.export_encoded, "Also write encoded CSVs and dataset.json");

    // predict
    auto* predict = app.add_subcommand("predict", "Write a per-token prediction overlay for one TSV");
    std::string pred_checkpoint;
    std::string pred_tsv;
    std::string pred_out;
    double pred_threshold = 0.5;
    int pred_tolerance = 0;
    auto* o_pred_ckpt = predict->add_option("--checkpoint", pred_checkpoint);
    auto* o_pred_tsv = predict->add_option("--tsv", pred_tsv);
    auto* o_pred_out = predict->add_option("--out", pred_out);
    auto* o_pred_thr = predict->add_option("--threshold", pred_threshold);
    auto* o_pred_tol = predict->add_option("--tolerance", pred_tolerance);

    // eval
    auto* eval = app.add_subcommand("eval", "Score a checkpoint on a labelled feature file");
    std::string eval_checkpoint;
    std::string eval_features;
    std::string eval_labels;
    std::string eval_json;
    double eval_threshold = 0.5;
    auto* o_eval_ckpt = eval->add_option("--checkpoint", eval_checkpoint);
    auto* o_eval_features = eval->add_option("--features", eval_features);
    auto* o_eval_labels = eval->add_option("--labels", eval_labels);
    auto* o_eval_json = eval->add_option("--json", eval_json, "Also write the report as JSON");
    auto* o_eval_thr = eval->add_option("--threshold", eval_threshold);

    // serve
    auto* serve = app.add_subcommand("serve", "Run the review service");
    int serve_port = tabext::kDefaultReviewPort;
    std::string serve_host = "127.0.0.1";
    std::string serve_corpus;
    std::string serve_checkpoint;
    std::string serve_labels;
    std::string serve_static;
    std::string serve_export;
    double serve_threshold = 0.5;
    auto* o_port = serve->add_option("--port", serve_port);
    auto* o_host = serve->add_option("--host", serve_host);
    auto* o_serve_corpus = serve->add_option("--corpus", serve_corpus);
    auto* o_serve_ckpt = serve->add_option("--checkpoint", serve_checkpoint);
    auto* o_serve_labels = serve->add_option("--labels", serve_labels, "Label store (default: <corpus>/labels.jsonl)");
    auto* o_serve_static = serve->add_option("--static-dir", serve_static, "Directory of review UI assets");
    auto* o_serve_export = serve->add_option("--export-dir", serve_export);
    auto* o_serve_thr = serve->add_option("--threshold", serve_threshold);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("Usage", e.what(), kUsage);
    }

    try {
        json config = json::object();
        if (config_path.empty()) {
            if (const char* env = std::getenv("TABEXT_CONFIG"); env && *env) {
                config_path = env;
            }
        }
        if (!config_path.empty()) {
            config = load_config(config_path);
        }

        if (synth->parsed()) {
            const auto sec = section(config, "synth");
            fill(o_synth_n, sec, "n", synth_n);
            fill(o_synth_seed, sec, "seed", synth_seed);
            fill(o_synth_out, sec, "out", synth_out);
            fill(o_synth_jitter, sec, "jitter_px", synth_jitter);
            fill(o_synth_dropout, sec, "dropout", synth_dropout);
            tabext::SynthOptions options;
            if (sec.contains("spec")) {
                options.spec = tabext::layout_spec_from_json(sec["spec"]);
            }
            if (o_synth_spec->count() > 0) {
                options.spec = tabext::layout_spec_from_json(load_config(synth_spec));
            }
            if (o_synth_jitter->count() > 0 || sec.contains("jitter_px")) {
                options.spec.jitter_px = synth_jitter;
            }
            if (o_synth_dropout->count() > 0 || sec.contains("dropout")) {
                options.spec.dropout = synth_dropout;
            }
            require(synth_out, "--out");
            if (synth_n == 0) {
                throw tabext::Error(tabext::ErrorKind::Config, "--n must be at least 1");
            }
            options.n = synth_n;
            options.seed = synth_seed;
            options.out_dir = synth_out;
            tabext::run_synth(options);
            std::cout << json{{"documents", synth_n}, {"out", synth_out}}.dump() << std::endl;
        } else if (featurize->parsed()) {
            const auto sec = section(config, "featurize");
            fill(o_feat_corpus, sec, "corpus", feat_corpus);
            fill(o_feat_out, sec, "out", feat_out);
            fill(o_feat_labels, sec, "labels", feat_labels);
            fill(o_feat_format, sec, "format", feat_format);
            tabext::FeaturizeOptions options;
            fill_optional(o_feat_tol, sec, "tolerance", feat_tolerance, options.tolerance);
            if (!options.tolerance && config.contains("tolerance")) {
                options.tolerance = config["tolerance"].get<int>();
            }
            require_exists(feat_corpus, "--corpus");
            require(feat_out, "--out");
            if (feat_format != "jsonl" && feat_format != "csv") {
                throw tabext::Error(tabext::ErrorKind::Config, "--format must be jsonl or csv");
            }
            options.corpus_dir = feat_corpus;
            options.out = feat_out;
            if (!feat_labels.empty()) {
                options.labels = fs::path(feat_labels);
            }
            options.format = feat_format == "csv" ? tabext::FeatureFormat::Csv : tabext::FeatureFormat::Jsonl;
            const auto rows = tabext::run_featurize(options);
            std::cout << json{{"rows", rows}, {"out", feat_out}}.dump() << std::endl;
        } else if (train->parsed()) {
            const auto sec = section(config, "train");
            fill(o_train_features, sec, "features", train_features);
            fill(o_train_labels, sec, "labels", train_labels);
            fill(o_train_out, sec, "out", train_out);
            if (sec.contains("split")) {
                const auto split = sec["split"];
                fill(o_train_frac, split, "train", topt.split.train_fraction);
                fill(o_test_frac, split, "test", topt.split.test_fraction);
                fill(o_val_frac, split, "validation", topt.split.validation_fraction);
                fill(o_train_seed, split, "seed", topt.split.seed);
            }
            if (sec.contains("network")) {
                const auto net = sec["network"];
                fill(o_lr, net, "learning_rate", topt.network.learning_rate);
                fill(o_batch, net, "batch_size", topt.network.batch_size);
                fill(o_epochs, net, "max_epochs", topt.network.max_epochs);
                fill(o_patience, net, "early_stop_patience", topt.network.early_stop_patience);
                fill(o_hidden, net, "hidden_dims", topt.network.hidden_dims);
                fill(o_train_threshold, net, "threshold", topt.network.threshold);
                fill(o_train_seed, net, "seed", topt.network.seed);
            }
            if (o_train_threshold->count() == 0 && config.contains("threshold")) {
                topt.network.threshold = config["threshold"].get<double>();
            }
            if (o_train_seed->count() > 0) {
                topt.split.seed = train_seed;
                topt.network.seed = train_seed;
            }
            fill(o_export, sec, "export_encoded", topt.export_encoded);
            require_exists(train_features, "--features");
            require(train_out, "--out");
            topt.features = train_features;
            if (!train_labels.empty()) {
                topt.labels = fs::path(train_labels);
            }
            topt.out_dir = train_out;
            const auto summary = tabext::run_train(topt);
            json out{
                {"checkpoint", summary.checkpoint_path.string()},
                {"epochs_run", summary.training.epochs_run},
                {"best_epoch", summary.training.best_epoch},
                {"best_val_f1", summary.training.best_val_f1},
            };
            if (summary.test) {
                std::cout << tabext::render_report(*summary.test, "test split") << '\n';
                out["test_f1"] = summary.test->classes[1].f1;
            }
            if (summary.validation) {
                std::cout << tabext::render_report(*summary.validation, "validation split") << '\n';
                out["validation_f1"] = summary.validation->classes[1].f1;
            }
            std::cout << out.dump() << std::endl;
        } else if (predict->parsed()) {
            const auto sec = section(config, "predict");
            fill(o_pred_ckpt, sec, "checkpoint", pred_checkpoint);
            fill(o_pred_tsv, sec, "tsv", pred_tsv);
            fill(o_pred_out, sec, "out", pred_out);
            tabext::PredictOptions options;
            fill_optional(o_pred_thr, sec, "threshold", pred_threshold, options.threshold);
            fill_optional(o_pred_tol, sec, "tolerance", pred_tolerance, options.tolerance);
            if (!options.threshold && config.contains("threshold")) {
                options.threshold = config["threshold"].get<double>();
            }
            if (!options.tolerance && config.contains("tolerance")) {
                options.tolerance = config["tolerance"].get<int>();
            }
            require_exists(pred_checkpoint, "--checkpoint");
            require_exists(pred_tsv, "--tsv");
            require(pred_out, "--out");
            options.checkpoint = pred_checkpoint;
            options.tsv = pred_tsv;
            options.out = pred_out;
            const auto n = tabext::run_predict(options);
            std::cout << json{{"tokens", n}, {"out", pred_out}}.dump() << std::endl;
        } else if (eval->parsed()) {
            const auto sec = section(config, "eval");
            fill(o_eval_ckpt, sec, "checkpoint", eval_checkpoint);
            fill(o_eval_features, sec, "features", eval_features);
            fill(o_eval_labels, sec, "labels", eval_labels);
            fill(o_eval_json, sec, "json", eval_json);
            tabext::EvalOptions options;
            fill_optional(o_eval_thr, sec, "threshold", eval_threshold, options.threshold);
            if (!options.threshold && config.contains("threshold")) {
                options.threshold = config["threshold"].get<double>();
            }
            require_exists(eval_checkpoint, "--checkpoint");
            require_exists(eval_features, "--features");
            options.checkpoint = eval_checkpoint;
            options.features = eval_features;
            if (!eval_labels.empty()) {
                options.labels = fs::path(eval_labels);
            }
            const auto report = tabext::run_eval(options);
            std::cout << tabext::render_report(report);
            if (!eval_json.empty()) {
                std::ofstream out(eval_json, std::ios::binary | std::ios::trunc);
                out << tabext::to_json(report).dump(2) << '\n';
                if (!out) {
                    throw tabext::Error(tabext::ErrorKind::Io, "cannot write " + eval_json);
                }
            }
        } else if (serve->parsed()) {
            const auto sec = section(config, "serve");
            fill(o_port, sec, "port", serve_port);
            fill(o_host, sec, "host", serve_host);
            fill(o_serve_corpus, sec, "corpus", serve_corpus);
            fill(o_serve_ckpt, sec, "checkpoint", serve_checkpoint);
            fill(o_serve_labels, sec, "labels", serve_labels);
            fill(o_serve_static, sec, "static_dir", serve_static);
            fill(o_serve_export, sec, "export_dir", serve_export);
            tabext::ReviewOptions options;
            fill_optional(o_serve_thr, sec, "threshold", serve_threshold, options.threshold);
            require_exists(serve_corpus, "--corpus");
            options.corpus_dir = serve_corpus;
            options.labels_path = serve_labels.empty() ? options.corpus_dir / "labels.jsonl" : fs::path(serve_labels);
            if (!serve_checkpoint.empty()) {
                require_exists(serve_checkpoint, "--checkpoint");
                options.checkpoint = fs::path(serve_checkpoint);
            }
            if (!serve_static.empty()) {
                options.static_dir = fs::path(serve_static);
            }
            if (!serve_export.empty()) {
                options.export_dir = fs::path(serve_export);
            }
            tabext::ReviewService service(options);
            const int port = service.bind(serve_host, serve_port);
            std::cerr << json{{"listening", serve_host + ":" + std::to_string(port)}}.dump() << std::endl;
            service.run();
        }
    } catch (const tabext::Error& e) {
        return report_error(tabext::to_string(e.kind()), e.what(), exit_code_for(e.kind()));
    } catch (const fs::filesystem_error& e) {
        return report_error("Io", e.what(), kData);
    } catch (const json::exception& e) {
        return report_error("Config", e.what(), kUsage);
    } catch (const std::exception& e) {
        return report_error("Internal", e.what(), kInternal);
    }
    return kOk;
}
