#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "support.hpp"
#include "tabext/error.hpp"
#include "tabext/features.hpp"
#include "tabext/random.hpp"
#include "tabext/synthgen.hpp"

using namespace tabext;
using namespace tabext::testing;

namespace {

Page random_page(Rng& rng, int n, int width = 2480, int height = 3508)
{
    static const std::vector<std::string> words{"Oktober", "-", "2019", "1,000", "ST", "70,63", "Müller", "A4-Nr7"};
    Page page;
    page.width = width;
    page.height = height;
    for (int i = 0; i < n; ++i) {
        const int w = rng.between(5, 300);
        const int h = rng.between(5, 60);
        page.tokens.push_back(make_token(rng.pick(words), rng.between(0, width - w), rng.between(0, height - h), w, h,
            rng.between(0, 6), rng.between(0, 4), i, rng.between(0, 2)));
    }
    return page;
}

std::size_t chars(const std::string& s) { return utf8_length(s); }

bool same_line(const Token& a, const Token& b)
{
    return a.block_num == b.block_num && a.par_num == b.par_num && a.line_num == b.line_num;
}

} // namespace

TEST_CASE("block aggregates: two-token block")
{
    const std::vector<Token> tokens{make_token("ab", 10, 0, 20, 10), make_token("cde", 40, 0, 30, 10)};
    const auto agg = block_aggregates(tokens);
    REQUIRE(agg.size() == 1);
    CHECK(agg.at(1).char_count == 5);
    CHECK(agg.at(1).word_count == 2);
    CHECK(agg.at(1).width == 60);
}

TEST_CASE("block aggregates: single token width")
{
    const std::vector<Token> tokens{make_token("Summe", 100, 0, 77, 10, 4)};
    CHECK(block_aggregates(tokens).at(4).width == 77);
}

TEST_CASE("block aggregates match a brute-force oracle")
{
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const auto page = random_page(rng, 50);
        const auto agg = block_aggregates(page.tokens);
        for (const auto& t : page.tokens) {
            int words = 0, total_chars = 0, lo = 1 << 30, hi = -(1 << 30);
            for (const auto& u : page.tokens) {
                if (u.block_num == t.block_num) {
                    ++words;
                    total_chars += static_cast<int>(chars(u.text));
                    lo = std::min(lo, u.left);
                    hi = std::max(hi, u.left + u.width);
                }
            }
            const auto& a = agg.at(t.block_num);
            REQUIRE(a.word_count == words);
            REQUIRE(a.char_count == total_chars);
            REQUIRE(a.width == hi - lo);
        }
    }
}

TEST_CASE("line aggregates")
{
    SUBCASE("worked example line")
    {
        std::vector<Token> tokens;
        const std::vector<std::string> texts{"Oktober", "-", "Dezember", "2019", "1,000", "ST", "70,63", "70,63"};
        for (std::size_t i = 0; i < texts.size(); ++i) {
            tokens.push_back(make_token(texts[i], static_cast<int>(i) * 50, 0, 40, 10, 1, 1, static_cast<int>(i)));
        }
        const auto agg = line_aggregates(tokens).at({1, 1, 1});
        CHECK(agg.word_count == 8);
        CHECK(agg.regex == "W ? W N F W F F");
    }
    SUBCASE("single token")
    {
        const std::vector<Token> tokens{make_token("ST", 0, 0, 10, 10)};
        const auto agg = line_aggregates(tokens).at({1, 1, 1});
        CHECK(agg.word_count == 1);
        CHECK(agg.char_count == 2);
    }
    SUBCASE("line numbers follow (block, par, line) order")
    {
        const std::vector<Token> tokens{make_token("b", 0, 100, 10, 10, 2, 1), make_token("a", 0, 0, 10, 10, 1, 1)};
        const auto agg = line_aggregates(tokens);
        CHECK(agg.at({1, 1, 1}).line_no == 0);
        CHECK(agg.at({2, 1, 1}).line_no == 1);
    }
}

TEST_CASE("alignment groups: stated examples")
{
    const std::vector<int> coords{100, 101, 300};
    const auto g = cluster_coordinates(coords, 2);
    CHECK(g[0] == GroupAssignment{0, 2});
    CHECK(g[1] == GroupAssignment{0, 2});
    CHECK(g[2] == GroupAssignment{1, 1});

    const std::vector<int> same(17, 80);
    for (const auto& a : cluster_coordinates(same, 3)) {
        CHECK(a == GroupAssignment{0, 17});
    }
    CHECK(cluster_coordinates(std::span<const int>(), 5).empty());
}

TEST_CASE("alignment groups: chaining and boundary")
{
    const std::vector<int> chain{0, 5, 10, 15, 21};
    const auto g = cluster_coordinates(chain, 5);
    for (int i = 0; i < 4; ++i) {
        CHECK(g[static_cast<std::size_t>(i)] == GroupAssignment{0, 4});
    }
    CHECK(g[4] == GroupAssignment{1, 1});
}

TEST_CASE("alignment groups equal a transitive-closure oracle, ids ascend with coordinate")
{
    Rng rng(22);
    for (int trial = 0; trial < 100; ++trial) {
        const int tol = rng.between(0, 12);
        std::vector<int> coords;
        for (int i = 0; i < 100; ++i) {
            coords.push_back(rng.between(0, 1500));
        }
        const auto got = cluster_coordinates(coords, tol);
        std::vector<int> ids;
        for (const auto& a : got) {
            ids.push_back(a.group_id);
        }
        REQUIRE(canonical_partition(ids) == canonical_partition(closure_oracle(coords, tol)));
        std::map<int, int> sizes;
        for (int id : ids) {
            ++sizes[id];
        }
        int count_sum = 0;
        for (std::size_t i = 0; i < got.size(); ++i) {
            REQUIRE(got[i].group_count == sizes[got[i].group_id]);
            for (std::size_t j = 0; j < got.size(); ++j) {
                if (coords[i] < coords[j]) {
                    REQUIRE(got[i].group_id <= got[j].group_id);
                }
            }
        }
        for (const auto& [id, size] : sizes) {
            count_sum += size;
        }
        CHECK(count_sum == 100);
        CHECK(sizes.rbegin()->first == static_cast<int>(sizes.size()) - 1);
    }
}

TEST_CASE("property: translation leaves the left partition unchanged")
{
    Rng rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        auto page = random_page(rng, 60, 2000);
        const auto before = alignment_groups(page.tokens, AlignAxis::Left, 8);
        const int c = rng.between(1, 500);
        for (auto& t : page.tokens) {
            t.left += c;
        }
        const auto after = alignment_groups(page.tokens, AlignAxis::Left, 8);
        CHECK(before == after);
    }
}

TEST_CASE("quarters")
{
    CHECK(quarter_index(0, 1000) == 0);
    CHECK(quarter_index(249, 1000) == 0);
    CHECK(quarter_index(250, 1000) == 1);
    CHECK(quarter_index(500, 1000) == 2);
    CHECK(quarter_index(750, 1000) == 3);
    CHECK(quarter_index(999, 1000) == 3);
    CHECK(quarter_index(1000, 1000) == 3);
    Page page;
    page.width = 500;
    page.height = 1000;
    CHECK(quarter_flags(make_token("x", 0, 0, 1, 1), page) == std::array<int, 4>{1, 0, 0, 0});
    CHECK(quarter_flags(make_token("x", 0, 250, 1, 1), page) == std::array<int, 4>{0, 1, 0, 0});
    CHECK(quarter_flags(make_token("x", 0, 999, 1, 1), page) == std::array<int, 4>{0, 0, 0, 1});
}

TEST_CASE("default tolerance")
{
    CHECK(default_alignment_tolerance(2480) == 10);
    CHECK(default_alignment_tolerance(100) == 2);
}

TEST_CASE("featurize_document: simple fields")
{
    DocumentModel doc;
    doc.doc_id = "d";
    Page page;
    page.width = 500;
    page.height = 1000;
    page.tokens = {make_token("2019", 50, 100, 40, 10, 1, 1, 1), make_token("Oktober", 100, 100, 70, 10, 1, 1, 2)};
    doc.pages.push_back(page);
    const auto rows = featurize_document(doc);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].is_first_int == 1);
    CHECK(rows[1].is_first_int == 0);
    CHECK(rows[0].left_margin == doctest::Approx(0.1));
    CHECK(rows[0].top_margin == doctest::Approx(0.1));
    CHECK(rows[0].line_block_regex == "N W");
    CHECK(rows[0].token_index == 0);
    CHECK(rows[1].token_index == 1);
    CHECK(rows[1].char_count == 7);
    CHECK(rows[0].label == kUnlabeled);
    CHECK(featurize_document(DocumentModel{}).empty());
}

TEST_CASE("featurize_document on synthetic pages matches brute-force recomputation")
{
    LayoutSpec spec;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        spec.seed = seed;
        const auto inv = generate_invoice(spec, "inv");
        const auto doc = parse_tsv(inv.tsv, "inv");
        const auto rows = featurize_document(doc);
        const auto& page = doc.pages.at(0);
        REQUIRE(rows.size() == page.tokens.size());
        const int tol = default_alignment_tolerance(page.width);
        std::vector<int> lefts, rights;
        for (const auto& t : page.tokens) {
            lefts.push_back(t.left);
            rights.push_back(t.right());
        }
        const auto left_closure = closure_oracle(lefts, tol);
        const auto right_closure = closure_oracle(rights, tol);
        std::set<std::tuple<int, int, int>> line_keys;
        for (const auto& t : page.tokens) {
            line_keys.insert({t.block_num, t.par_num, t.line_num});
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            const auto& t = page.tokens[i];
            int block_words = 0, block_chars = 0, line_words = 0, line_chars = 0, lo = 1 << 30, hi = 0;
            int left_size = 0, right_size = 0;
            for (std::size_t j = 0; j < page.tokens.size(); ++j) {
                const auto& u = page.tokens[j];
                if (u.block_num == t.block_num) {
                    ++block_words;
                    block_chars += static_cast<int>(chars(u.text));
                    lo = std::min(lo, u.left);
                    hi = std::max(hi, u.right());
                }
                if (same_line(u, t)) {
                    ++line_words;
                    line_chars += static_cast<int>(chars(u.text));
                }
                left_size += left_closure[j] == left_closure[i] ? 1 : 0;
                right_size += right_closure[j] == right_closure[i] ? 1 : 0;
            }
            REQUIRE(r.block_word_count == block_words);
            REQUIRE(r.block_char_count == block_chars);
            REQUIRE(r.block_width == hi - lo);
            REQUIRE(r.line_word_count == line_words);
            REQUIRE(r.line_char_count == line_chars);
            REQUIRE(r.left_alignment_count == left_size);
            REQUIRE(r.right_alignment_count == right_size);
            REQUIRE(r.line_no
                == static_cast<int>(std::distance(line_keys.begin(), line_keys.find({t.block_num, t.par_num, t.line_num}))));
            // row invariants
            REQUIRE(r.first_quarter + r.second_quarter + r.third_quarter + r.fourth_quarter == 1);
            REQUIRE(r.left_margin == static_cast<double>(r.left) / r.page_width);
            REQUIRE(r.top_margin == static_cast<double>(r.top) / r.page_height);
            REQUIRE(r.char_count == static_cast<int>(chars(r.raw_text)));
            REQUIRE(r.left_alignment_count >= 1);
            REQUIRE(r.page_no == 1);
        }
        CHECK(featurize_document(doc) == rows);
    }
}

TEST_CASE("JSONL round-trip and schema checks")
{
    LayoutSpec spec;
    const auto doc = parse_tsv(generate_invoice(spec, "inv").tsv, "inv");
    auto rows = featurize_document(doc);
    rows[0].label = 1;
    rows[1].label = 0;
    std::stringstream ss;
    write_features_jsonl(ss, rows);
    const auto back = read_features_jsonl(ss);
    CHECK(back == rows);

    auto j = to_json(rows[0]);
    CHECK(j.at("schema") == std::string(kFeatureSchema));
    for (const auto& col : kFeatureColumns) {
        CHECK(j.contains(std::string(col)));
    }
    CHECK(to_json(rows[2]).at("label").is_null());
    j["schema"] = "tabext.features/0";
    try {
        feature_row_from_json(j);
        FAIL("expected SchemaMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SchemaMismatch);
    }
    auto missing = to_json(rows[0]);
    missing.erase("LineNo");
    CHECK_THROWS_AS(feature_row_from_json(missing), Error);
}

TEST_CASE("CSV output has a schema line and a header naming every column")
{
    const auto doc = parse_tsv(tsv_of({make_token("a,b", 1, 1, 5, 5)}), "d");
    const auto rows = featurize_document(doc);
    std::stringstream ss;
    write_features_csv(ss, rows);
    std::string first, header, body;
    std::getline(ss, first);
    std::getline(ss, header);
    std::getline(ss, body);
    CHECK(first == "# schema: " + std::string(kFeatureSchema));
    for (const auto& col : kFeatureColumns) {
        CHECK(header.find(std::string(col)) != std::string::npos);
    }
    CHECK(body.find("\"a,b\"") != std::string::npos);
}
