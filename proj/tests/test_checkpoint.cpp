#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "tabext/checkpoint.hpp"
#include "tabext/error.hpp"
#include "tabext/random.hpp"

using namespace tabext;
using namespace tabext::testing;

namespace {

ModelCheckpoint sample_checkpoint()
{
    ModelCheckpoint c;
    NetworkConfig config;
    config.hidden_dims = {7, 6, 5, 4, 3, 2};
    config.threshold = 0.4;
    c.config = config;
    c.model = Mlp::initialize(config.layer_dims(), 5);
    Rng rng(81);
    for (std::size_t l = 0; l < c.model.layers(); ++l) {
        for (Eigen::Index r = 0; r < c.model.bias(l).size(); ++r) {
            c.model.bias(l)(r) = rng.uniform(-1.0, 1.0);
        }
    }
    for (std::size_t d = 0; d < kEncodedDim; ++d) {
        const double lo = rng.uniform(-5.0, 5.0);
        c.norm.min.push_back(lo);
        c.norm.max.push_back(lo + rng.uniform(0.0, 3.0));
    }
    c.vocab = PatternVocab({"N", "W W", "F F F"});
    c.training = {12, 9, 0.875};
    return c;
}

ErrorKind kind_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}

} // namespace

TEST_CASE("save and load reproduce the checkpoint exactly")
{
    TempDir dir;
    const auto c = sample_checkpoint();
    save_checkpoint(c, dir / "c.json");
    const auto back = load_checkpoint(dir / "c.json");
    CHECK(back.model == c.model);
    CHECK(back.norm == c.norm);
    CHECK(back.vocab == c.vocab);
    CHECK(back.feature_schema == c.feature_schema);
    CHECK(back.config.layer_dims() == c.config.layer_dims());
    CHECK(back.config.threshold == c.config.threshold);
    CHECK(back.training.best_epoch == 9);
    CHECK(back.training.best_val_f1 == 0.875);

    save_checkpoint(back, dir / "again.json");
    CHECK(read_file(dir / "c.json") == read_file(dir / "again.json"));
}

TEST_CASE("property: reloaded model scores identically")
{
    TempDir dir;
    const auto c = sample_checkpoint();
    save_checkpoint(c, dir / "c.json");
    const auto back = load_checkpoint(dir / "c.json");
    Rng rng(82);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x(kEncodedDim);
        for (auto& v : x) {
            v = rng.uniform();
        }
        CHECK(back.model.forward(x) == c.model.forward(x));
    }
}

TEST_CASE("JSON layout")
{
    const auto j = to_json(sample_checkpoint());
    CHECK(j.at("schema") == std::string(kCheckpointSchema));
    CHECK(j.at("feature_schema") == std::string(kFeatureSchema));
    CHECK(j.at("layer_dims").size() == kLayerCount);
    CHECK(j.at("layers").size() == kLayerCount - 1);
    CHECK(j.at("layers")[0].at("rows") == 7);
    CHECK(j.at("layers")[0].at("cols") == static_cast<int>(kEncodedDim));
    CHECK(j.at("layers")[0].at("weights").size() == 7 * kEncodedDim);
}

TEST_CASE("malformed checkpoints are schema mismatches")
{
    const auto good = to_json(sample_checkpoint());

    auto j = good;
    j["schema"] = "tabext.checkpoint/0";
    CHECK(kind_of([&] { checkpoint_from_json(j); }) == ErrorKind::SchemaMismatch);

    j = good;
    j["layers"][2]["rows"] = 99;
    CHECK(kind_of([&] { checkpoint_from_json(j); }) == ErrorKind::SchemaMismatch);

    j = good;
    j["layers"][1]["weights"].erase(0);
    CHECK(kind_of([&] { checkpoint_from_json(j); }) == ErrorKind::SchemaMismatch);

    j = good;
    j["layer_dims"] = {94, 7, 6, 5, 4, 3, 1};
    CHECK(kind_of([&] { checkpoint_from_json(j); }) == ErrorKind::SchemaMismatch);

    j = good;
    j["normalizer"]["min"].erase(0);
    j["normalizer"]["max"].erase(0);
    CHECK(kind_of([&] { checkpoint_from_json(j); }) == ErrorKind::SchemaMismatch);

    j = good;
    j.erase("training");
    CHECK(kind_of([&] { checkpoint_from_json(j); }) == ErrorKind::SchemaMismatch);

    TempDir dir;
    write_file(dir / "junk.json", "{ nope");
    CHECK(kind_of([&] { load_checkpoint(dir / "junk.json"); }) == ErrorKind::SchemaMismatch);
    CHECK(kind_of([&] { load_checkpoint(dir / "missing.json"); }) == ErrorKind::Io);
}

TEST_CASE("feature schema guard")
{
    auto c = sample_checkpoint();
    CHECK_NOTHROW(require_feature_schema(c, kFeatureSchema));
    c.feature_schema = "tabext.features/0";
    CHECK(kind_of([&] { require_feature_schema(c, kFeatureSchema); }) == ErrorKind::SchemaMismatch);
}
