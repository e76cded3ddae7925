#include "tabext/checkpoint.hpp"

#include <fstream>

#include "tabext/error.hpp"

namespace tabext {

nlohmann::json to_json(const ModelCheckpoint& c)
{
    auto layers = nlohmann::json::array();
    for (std::size_t layer = 0; layer < c.model.layers(); ++layer) {
        const auto& w = c.model.weights(layer);
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(w.size()));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index col = 0; col < w.cols(); ++col) {
                flat.push_back(w(r, col));
            }
        }
        const auto& b = c.model.bias(layer);
        layers.push_back({
            {"rows", w.rows()},
            {"cols", w.cols()},
            {"weights", std::move(flat)},
            {"bias", std::vector<double>(b.data(), b.data() + b.size())},
        });
    }
    return {
        {"schema", kCheckpointSchema},
        {"feature_schema", c.feature_schema},
        {"layer_dims", c.model.dims()},
        {"layers", std::move(layers)},
        {"normalizer", to_json(c.norm)},
        {"pattern_vocab", to_json(c.vocab)},
        {"config", to_json(c.config)},
        {"training",
            {{"epochs_run", c.training.epochs_run}, {"best_epoch", c.training.best_epoch},
                {"best_val_f1", c.training.best_val_f1}}},
    };
}

ModelCheckpoint checkpoint_from_json(const nlohmann::json& j)
{
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::SchemaMismatch, "checkpoint: " + msg); };
    if (!j.is_object() || j.value("schema", std::string()) != kCheckpointSchema) {
        fail("unsupported schema, expected " + std::string(kCheckpointSchema));
    }
    try {
        ModelCheckpoint c;
        const auto dims = j.at("layer_dims").get<std::vector<int>>();
        c.model = Mlp(dims);
        const auto& layers = j.at("layers");
        if (layers.size() != c.model.layers()) {
            fail("layer count does not match layer_dims");
        }
        for (std::size_t layer = 0; layer < c.model.layers(); ++layer) {
            const auto& jl = layers[layer];
            const auto rows = jl.at("rows").get<Eigen::Index>();
            const auto cols = jl.at("cols").get<Eigen::Index>();
            if (rows != dims[layer + 1] || cols != dims[layer]) {
                fail("layer " + std::to_string(layer) + " shape breaks the dimension chain");
            }
            const auto flat = jl.at("weights").get<std::vector<double>>();
            const auto bias = jl.at("bias").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(flat.size()) != rows * cols || static_cast<Eigen::Index>(bias.size()) != rows) {
                fail("layer " + std::to_string(layer) + " has the wrong number of parameters");
            }
            auto& w = c.model.weights(layer);
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (Eigen::Index col = 0; col < cols; ++col) {
                    w(r, col) = flat[static_cast<std::size_t>(r * cols + col)];
                }
            }
            c.model.bias(layer) = Eigen::Map<const Eigen::VectorXd>(bias.data(), rows);
        }
        c.norm = norm_stats_from_json(j.at("normalizer"));
        c.vocab = pattern_vocab_from_json(j.at("pattern_vocab"));
        c.feature_schema = j.at("feature_schema").get<std::string>();
        c.config = network_config_from_json(j.at("config"));
        const auto& t = j.at("training");
        c.training = {t.at("epochs_run").get<int>(), t.at("best_epoch").get<int>(), t.at("best_val_f1").get<double>()};
        if (static_cast<int>(c.norm.min.size()) != c.model.input_dim()) {
            fail("normalizer dimension differs from the network input");
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, std::string("checkpoint: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::SchemaMismatch) {
            throw;
        }
        throw Error(ErrorKind::SchemaMismatch, std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const ModelCheckpoint& checkpoint, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << to_json(checkpoint).dump() << '\n';
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write checkpoint " + path.string());
    }
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open checkpoint " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::SchemaMismatch, "checkpoint " + path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

void require_feature_schema(const ModelCheckpoint& checkpoint, std::string_view feature_schema)
{
    if (checkpoint.feature_schema != feature_schema) {
        throw Error(ErrorKind::SchemaMismatch,
            "checkpoint was trained on " + checkpoint.feature_schema + " features, got " + std::string(feature_schema));
    }
}

} // namespace tabext
