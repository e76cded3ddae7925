#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "support.hpp"

using namespace tabext::testing;
using nlohmann::json;

namespace {

json last_json_line(const std::string& text)
{
    std::istringstream in(text);
    std::string line, last;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '{') {
            last = line;
        }
    }
    REQUIRE_FALSE(last.empty());
    return json::parse(last);
}

json error_of(const CommandResult& r)
{
    return last_json_line(r.err);
}

std::string q(const fs::path& p)
{
    return "\"" + p.string() + "\"";
}

std::size_t tsv_count(const fs::path& dir)
{
    return tabext::list_tsv_files(dir).size();
}

} // namespace

TEST_CASE("usage errors exit 1")
{
    TempDir dir;
    auto r = run_cli("", dir.path());
    CHECK(r.exit_code == 1);
    CHECK(error_of(r).at("error") == "Usage");

    r = run_cli("synth --n 3", dir.path());
    CHECK(r.exit_code == 1);
    CHECK(error_of(r).at("error") == "Config");
    CHECK(error_of(r).at("exit_code") == 1);

    r = run_cli("synth --n notanumber --out x", dir.path());
    CHECK(r.exit_code == 1);

    r = run_cli("featurize --corpus " + q(dir.path()) + " --out f.jsonl --format xml", dir.path());
    CHECK(r.exit_code == 1);

    write_file(dir / "bad.json", "{ not json");
    r = run_cli("--config " + q(dir / "bad.json") + " synth --n 1 --out " + q(dir / "c"), dir.path());
    CHECK(r.exit_code == 1);
    CHECK(error_of(r).at("error") == "Config");

    r = run_cli("--help", dir.path());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("synth") != std::string::npos);
}

TEST_CASE("data errors exit 2")
{
    TempDir dir;
    fs::create_directories(dir / "empty");
    auto r = run_cli("featurize --corpus " + q(dir / "empty") + " --out " + q(dir / "f.jsonl"), dir.path());
    CHECK(r.exit_code == 2);
    CHECK(error_of(r).at("error") == "EmptyInput");
    CHECK(error_of(r).at("message").get<std::string>().find("no documents") != std::string::npos);

    r = run_cli("synth --n 2 --jitter 5 --out " + q(dir / "c"), dir.path());
    CHECK(r.exit_code == 2);
    CHECK(error_of(r).at("error") == "InfeasibleSpec");

    r = run_cli("predict --checkpoint " + q(dir / "missing.json") + " --tsv x.tsv --out o.json", dir.path());
    CHECK(r.exit_code == 2);
    CHECK(error_of(r).at("error") == "Io");

    write_file(dir / "broken.tsv", "not a header\n");
    write_file(dir / "ck.json", "{}");
    r = run_cli("predict --checkpoint " + q(dir / "ck.json") + " --tsv " + q(dir / "broken.tsv") + " --out "
            + q(dir / "o.json"),
        dir.path());
    CHECK(r.exit_code == 2);
    CHECK(error_of(r).at("error") == "SchemaMismatch");
}

TEST_CASE("synth, featurize, train, predict, eval")
{
    TempDir dir;
    auto r = run_cli("synth --n 12 --seed 4 --out " + q(dir / "corpus"), dir.path());
    REQUIRE(r.exit_code == 0);
    CHECK(last_json_line(r.out).at("documents") == 12);
    CHECK(tsv_count(dir / "corpus") == 12);
    CHECK(fs::exists(dir / "corpus" / "labels.jsonl"));

    r = run_cli("featurize --corpus " + q(dir / "corpus") + " --out " + q(dir / "features.jsonl"), dir.path());
    REQUIRE(r.exit_code == 0);
    const auto rows = last_json_line(r.out).at("rows").get<std::size_t>();
    CHECK(rows > 0);

    r = run_cli("train --features " + q(dir / "features.jsonl") + " --out " + q(dir / "model")
            + " --max-epochs 4 --learning-rate 0.001 --batch-size 64 --seed 9",
        dir.path());
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("test split") != std::string::npos);
    CHECK(r.out.find("weighted avg") != std::string::npos);
    const auto summary = last_json_line(r.out);
    CHECK(summary.at("epochs_run").get<int>() <= 4);
    CHECK(summary.contains("test_f1"));
    CHECK(fs::exists(dir / "model" / "checkpoint.json"));
    const auto split = json::parse(read_file(dir / "model" / "split.json"));
    CHECK(split.at("seed") == 9);
    CHECK(split.at("train").size() == 9);

    const auto tsv = tabext::list_tsv_files(dir / "corpus").front();
    r = run_cli("predict --checkpoint " + q(dir / "model" / "checkpoint.json") + " --tsv " + q(tsv) + " --out "
            + q(dir / "overlay.json") + " --threshold 0.7",
        dir.path());
    REQUIRE(r.exit_code == 0);
    const auto overlay = json::parse(read_file(dir / "overlay.json"));
    CHECK(overlay.at("threshold") == 0.7);
    CHECK(overlay.at("tokens").size() == tabext::parse_tsv_file(tsv).token_count());

    r = run_cli("eval --checkpoint " + q(dir / "model" / "checkpoint.json") + " --features "
            + q(dir / "features.jsonl") + " --json " + q(dir / "eval.json"),
        dir.path());
    REQUIRE(r.exit_code == 0);
    CHECK(rendered_row_labels(r.out) == std::vector<std::string>{"0", "1", "accuracy", "macro avg", "weighted avg"});
    const auto report = json::parse(read_file(dir / "eval.json"));
    CHECK(report.at("total") == rows);
}

TEST_CASE("train is byte-for-byte reproducible")
{
    TempDir dir;
    REQUIRE(run_cli("synth --n 10 --seed 5 --out " + q(dir / "corpus"), dir.path()).exit_code == 0);
    REQUIRE(run_cli("featurize --corpus " + q(dir / "corpus") + " --out " + q(dir / "f.jsonl"), dir.path()).exit_code == 0);
    const std::string common = "train --features " + q(dir / "f.jsonl") + " --max-epochs 3 --seed 2 --out ";
    const auto a = run_cli(common + q(dir / "a"), dir.path());
    const auto b = run_cli(common + q(dir / "b"), dir.path());
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(read_file(dir / "a" / "checkpoint.json") == read_file(dir / "b" / "checkpoint.json"));
    CHECK(last_json_line(a.out).at("test_f1") == last_json_line(b.out).at("test_f1"));
    CHECK(read_file(dir / "a" / "report.json") == read_file(dir / "b" / "report.json"));
}

TEST_CASE("config file values apply; flags win; TABEXT_CONFIG is honoured")
{
    TempDir dir;
    const json config{{"synth", {{"n", 2}, {"seed", 3}, {"out", (dir / "from-config").string()}}}};
    write_file(dir / "config.json", config.dump());

    auto r = run_cli("--config " + q(dir / "config.json") + " synth", dir.path());
    REQUIRE(r.exit_code == 0);
    CHECK(tsv_count(dir / "from-config") == 2);

    r = run_cli("--config " + q(dir / "config.json") + " synth --n 3 --out " + q(dir / "from-flag"), dir.path());
    REQUIRE(r.exit_code == 0);
    CHECK(tsv_count(dir / "from-flag") == 3);

    const json env_config{{"synth", {{"n", 1}, {"out", (dir / "from-env").string()}}}};
    write_file(dir / "env.json", env_config.dump());
    r = run_cli("synth", dir.path(), "TABEXT_CONFIG=" + q(dir / "env.json"));
    REQUIRE(r.exit_code == 0);
    CHECK(tsv_count(dir / "from-env") == 1);

    // same seed through config or flag gives the same corpus
    r = run_cli("synth --n 2 --seed 3 --out " + q(dir / "same"), dir.path());
    REQUIRE(r.exit_code == 0);
    for (const auto& f : tabext::list_tsv_files(dir / "same")) {
        CHECK(read_file(f) == read_file(dir / "from-config" / f.filename()));
    }
}
