#include "tabext/review_service.hpp"

#include <fstream>
#include <map>
#include <mutex>

#include <json.hpp>

#include "tabext/checkpoint.hpp"
#include "tabext/error.hpp"
#include "tabext/pipeline.hpp"

#include <httplib.h>

namespace tabext {

namespace {

using nlohmann::json;

struct ReviewDocument {
    DocumentModel model;
    std::vector<const Token*> tokens;
    std::vector<Prediction> predictions; // empty without a checkpoint
};

void reply(httplib::Response& res, int status, json body)
{
    body["schema"] = kReviewSchema;
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view error, const std::string& message,
    json extra = json::object())
{
    extra["error"] = error;
    extra["message"] = message;
    reply(res, status, std::move(extra));
}

} // namespace

struct ReviewService::Impl {
    explicit Impl(ReviewOptions opts)
        : options(std::move(opts))
        , store(options.labels_path)
    {
        std::map<std::string, int> counts;
        std::optional<ModelCheckpoint> checkpoint;
        if (options.checkpoint) {
            checkpoint = load_checkpoint(*options.checkpoint);
            require_feature_schema(*checkpoint, kFeatureSchema);
        }
        const double threshold = options.threshold.value_or(checkpoint ? checkpoint->config.threshold : 0.5);
        for (const auto& file : list_tsv_files(options.corpus_dir)) {
            auto doc = std::make_unique<ReviewDocument>();
            doc->model = parse_tsv_file(file);
            doc->tokens = doc->model.tokens();
            if (checkpoint) {
                doc->predictions = score_document(*checkpoint, doc->model, threshold, options.tolerance);
            }
            counts[doc->model.doc_id] = static_cast<int>(doc->tokens.size());
            const std::string id = doc->model.doc_id;
            documents.emplace(id, std::move(doc));
        }
        store.set_known_tokens(std::move(counts));
        export_dir = options.export_dir.value_or(options.corpus_dir / "exports");
        routes();
    }

    void routes()
    {
        server.Get("/documents", [this](const httplib::Request&, httplib::Response& res) { list_documents(res); });
        server.Get("/documents/:id/tokens",
            [this](const httplib::Request& req, httplib::Response& res) { document_tokens(req, res); });
        server.Post("/documents/:id/labels",
            [this](const httplib::Request& req, httplib::Response& res) { post_labels(req, res); });
        server.Post("/export-training-set",
            [this](const httplib::Request&, httplib::Response& res) { export_training_set(res); });
        if (options.static_dir) {
            server.set_mount_point("/", options.static_dir->string());
        }
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                reply_error(res, 500, "Internal", e.what());
            } catch (...) {
                reply_error(res, 500, "Internal", "unknown error");
            }
        });
    }

    void list_documents(httplib::Response& res)
    {
        auto list = json::array();
        for (const auto& [id, doc] : documents) {
            std::size_t reviewed = 0;
            for (std::size_t i = 0; i < doc->tokens.size(); ++i) {
                if (store.human({id, static_cast<int>(i)})) {
                    ++reviewed;
                }
            }
            const double fraction = doc->tokens.empty() ? 0.0 : static_cast<double>(reviewed) / doc->tokens.size();
            list.push_back({
                {"doc_id", id},
                {"page_count", doc->model.pages.size()},
                {"token_count", doc->tokens.size()},
                {"reviewed_fraction", fraction},
            });
        }
        reply(res, 200, {{"documents", std::move(list)}});
    }

    const ReviewDocument* find(const httplib::Request& req, httplib::Response& res)
    {
        const auto& id = req.path_params.at("id");
        const auto it = documents.find(id);
        if (it == documents.end()) {
            reply_error(res, 404, "NotFound", "unknown document '" + id + "'");
            return nullptr;
        }
        return it->second.get();
    }

    void document_tokens(const httplib::Request& req, httplib::Response& res)
    {
        const auto* doc = find(req, res);
        if (!doc) {
            return;
        }
        const auto& id = doc->model.doc_id;
        auto tokens = json::array();
        for (std::size_t i = 0; i < doc->tokens.size(); ++i) {
            const auto& t = *doc->tokens[i];
            const auto human = store.human({id, static_cast<int>(i)});
            json entry{
                {"token_index", i},
                {"page_num", t.page_num},
                {"text", t.text},
                {"box", {{"left", t.left}, {"top", t.top}, {"width", t.width}, {"height", t.height}}},
                {"probability", nullptr},
                {"predicted_label", nullptr},
                {"human_label", human ? json(human->label) : json(nullptr)},
            };
            if (!doc->predictions.empty()) {
                entry["probability"] = doc->predictions[i].probability;
                entry["predicted_label"] = doc->predictions[i].label;
            }
            tokens.push_back(std::move(entry));
        }
        auto pages = json::array();
        for (const auto& page : doc->model.pages) {
            pages.push_back({{"page_num", page.page_num}, {"page_width", page.width}, {"page_height", page.height}});
        }
        reply(res, 200, {{"doc_id", id}, {"pages", std::move(pages)}, {"tokens", std::move(tokens)}});
    }

    void post_labels(const httplib::Request& req, httplib::Response& res)
    {
        const auto* doc = find(req, res);
        if (!doc) {
            return;
        }
        const auto& id = doc->model.doc_id;
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::parse_error& e) {
            reply_error(res, 400, "BadRequest", std::string("body is not JSON: ") + e.what());
            return;
        }
        if (!body.is_array()) {
            reply_error(res, 400, "BadRequest", "body must be an array of {token_index, label}");
            return;
        }
        std::vector<LabelWrite> writes;
        auto bad_labels = json::array();
        auto unknown = json::array();
        for (const auto& item : body) {
            if (!item.is_object() || !item.contains("token_index") || !item.contains("label")
                || !item["token_index"].is_number_integer() || !item["label"].is_number_integer()) {
                reply_error(res, 400, "BadRequest", "every entry needs integer token_index and label");
                return;
            }
            const int index = item["token_index"].get<int>();
            const int label = item["label"].get<int>();
            if (label != 0 && label != 1) {
                bad_labels.push_back({{"token_index", index}, {"label", label}});
            }
            if (index < 0 || index >= static_cast<int>(doc->tokens.size())) {
                unknown.push_back(index);
            }
            writes.push_back({{id, index}, label});
        }
        if (!bad_labels.empty()) {
            reply_error(res, 400, "InvalidLabel", "labels must be 0 or 1", {{"offenders", bad_labels}});
            return;
        }
        if (!unknown.empty()) {
            reply_error(res, 400, "UnknownToken", "unknown token indices", {{"offenders", unknown}});
            return;
        }
        const auto records = store.write_batch(writes, LabelSource::Human);
        auto revisions = json::array();
        for (const auto& r : records) {
            revisions.push_back({{"token_index", r.key.token_index}, {"revision", r.revision}, {"label", r.label}});
        }
        reply(res, 200, {{"doc_id", id}, {"accepted", records.size()}, {"revisions", std::move(revisions)}});
    }

    void export_training_set(httplib::Response& res)
    {
        // Exports are serialized; each one writes a single store generation.
        std::uint64_t generation = 0;
        std::vector<LabelRecord> records;
        {
            std::lock_guard lock(export_mutex);
            generation = store.generation();
            records = store.export_records();
            std::filesystem::create_directories(export_dir);
            const auto path = export_dir / ("training-labels-g" + std::to_string(generation) + ".jsonl");
            const auto tmp = path.string() + ".tmp";
            {
                std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
                for (const auto& r : records) {
                    out << to_json(r).dump() << '\n';
                }
                if (!out) {
                    throw Error(ErrorKind::Io, "cannot write " + tmp);
                }
            }
            std::filesystem::rename(tmp, path);
            reply(res, 200, {{"path", path.string()}, {"records", records.size()}, {"generation", generation}});
        }
    }

    ReviewOptions options;
    LabelStore store;
    std::map<std::string, std::unique_ptr<ReviewDocument>> documents;
    std::filesystem::path export_dir;
    std::mutex export_mutex;
    httplib::Server server;
};

ReviewService::ReviewService(ReviewOptions options)
    : impl_(std::make_unique<Impl>(std::move(options)))
{
}

ReviewService::~ReviewService() = default;

int ReviewService::bind(const std::string& host, int port)
{
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) {
            throw Error(ErrorKind::Io, "cannot bind " + host);
        }
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void ReviewService::run()
{
    impl_->server.listen_after_bind();
}

void ReviewService::stop()
{
    impl_->server.stop();
}

void ReviewService::wait_until_ready() const
{
    impl_->server.wait_until_ready();
}

const LabelStore& ReviewService::labels() const
{
    return impl_->store;
}

} // namespace tabext
