#include "tabext/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include "tabext/error.hpp"

namespace tabext {

std::map<int, BlockAggregate> block_aggregates(std::span<const Token> page_tokens)
{
    struct Extent {
        BlockAggregate agg;
        int min_left = std::numeric_limits<int>::max();
        int max_right = std::numeric_limits<int>::min();
    };
    std::map<int, Extent> extents;
    for (const auto& t : page_tokens) {
        auto& e = extents[t.block_num];
        e.agg.word_count += 1;
        e.agg.char_count += static_cast<int>(utf8_length(t.text));
        e.min_left = std::min(e.min_left, t.left);
        e.max_right = std::max(e.max_right, t.right());
    }
    std::map<int, BlockAggregate> out;
    for (auto& [block, e] : extents) {
        e.agg.width = e.max_right - e.min_left;
        out.emplace(block, e.agg);
    }
    return out;
}

std::map<LineKey, LineAggregate> line_aggregates(std::span<const Token> page_tokens)
{
    std::map<LineKey, std::vector<Token>> lines;
    for (const auto& t : page_tokens) {
        lines[{t.block_num, t.par_num, t.line_num}].push_back(t);
    }
    std::map<LineKey, LineAggregate> out;
    int line_no = 0;
    for (const auto& [key, tokens] : lines) {
        LineAggregate agg;
        agg.word_count = static_cast<int>(tokens.size());
        for (const auto& t : tokens) {
            agg.char_count += static_cast<int>(utf8_length(t.text));
        }
        agg.regex = line_block_regex(tokens);
        agg.line_no = line_no++;
        out.emplace(key, std::move(agg));
    }
    return out;
}

std::vector<GroupAssignment> cluster_coordinates(std::span<const int> coords, int tolerance)
{
    std::vector<std::size_t> order(coords.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return coords[a] < coords[b]; });

    std::vector<GroupAssignment> out(coords.size());
    std::vector<int> sizes;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k == 0 || coords[order[k]] - coords[order[k - 1]] > tolerance) {
            sizes.push_back(0);
        }
        out[order[k]].group_id = static_cast<int>(sizes.size()) - 1;
        ++sizes.back();
    }
    for (auto& g : out) {
        g.group_count = sizes[static_cast<std::size_t>(g.group_id)];
    }
    return out;
}

std::vector<GroupAssignment> alignment_groups(std::span<const Token> page_tokens, AlignAxis axis, int tolerance)
{
    std::vector<int> coords;
    coords.reserve(page_tokens.size());
    for (const auto& t : page_tokens) {
        coords.push_back(axis == AlignAxis::Left ? t.left : t.right());
    }
    return cluster_coordinates(coords, tolerance);
}

int default_alignment_tolerance(int page_width)
{
    return std::max(2, static_cast<int>(std::lround(0.004 * page_width)));
}

int quarter_index(int top, int page_height)
{
    const long long q = 4LL * top / page_height;
    return static_cast<int>(std::clamp(q, 0LL, 3LL));
}

std::array<int, 4> quarter_flags(const Token& token, const Page& page)
{
    std::array<int, 4> flags{};
    flags[static_cast<std::size_t>(quarter_index(token.top, page.height))] = 1;
    return flags;
}

std::vector<FeatureRow> featurize_document(const DocumentModel& doc, std::optional<int> tolerance)
{
    std::vector<FeatureRow> rows;
    rows.reserve(doc.token_count());
    int token_index = 0;
    for (const auto& page : doc.pages) {
        const int tol = tolerance.value_or(default_alignment_tolerance(page.width));
        const auto blocks = block_aggregates(page.tokens);
        const auto lines = line_aggregates(page.tokens);
        const auto left_groups = alignment_groups(page.tokens, AlignAxis::Left, tol);
        const auto right_groups = alignment_groups(page.tokens, AlignAxis::Right, tol);

        for (std::size_t i = 0; i < page.tokens.size(); ++i) {
            const auto& t = page.tokens[i];
            const auto& block = blocks.at(t.block_num);
            const auto& line = lines.at({t.block_num, t.par_num, t.line_num});
            const auto quarters = quarter_flags(t, page);
            const auto cps = decode_utf8(t.text);

            FeatureRow r;
            r.doc_id = doc.doc_id;
            r.token_index = token_index++;
            r.raw_text = t.text;
            r.text_pattern = classify_text_pattern(t.text);
            r.block_no = t.block_num;
            r.block_char_count = block.char_count;
            r.line_word_count = line.word_count;
            r.block_width = block.width;
            r.line_char_count = line.char_count;
            r.is_first_int = (!cps.empty() && cps.front() >= U'0' && cps.front() <= U'9') ? 1 : 0;
            r.block_word_count = block.word_count;
            r.page_width = page.width;
            r.page_height = page.height;
            r.left_alignment_group = left_groups[i].group_id;
            r.left_alignment_count = left_groups[i].group_count;
            r.right_alignment_group = right_groups[i].group_id;
            r.right_alignment_count = right_groups[i].group_count;
            r.line_block_regex = line.regex;
            r.width = t.width;
            r.height = t.height;
            r.char_count = static_cast<int>(cps.size());
            r.left = t.left;
            r.top = t.top;
            r.left_margin = static_cast<double>(t.left) / page.width;
            r.top_margin = static_cast<double>(t.top) / page.height;
            r.first_quarter = quarters[0];
            r.second_quarter = quarters[1];
            r.third_quarter = quarters[2];
            r.fourth_quarter = quarters[3];
            r.line_no = line.line_no;
            r.page_no = page.page_num;
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

nlohmann::json to_json(const FeatureRow& r)
{
    nlohmann::json j = nlohmann::json::object();
    j["schema"] = kFeatureSchema;
    j["doc_id"] = r.doc_id;
    j["token_index"] = r.token_index;
    j["RawText"] = r.raw_text;
    j["TextPattern"] = std::string(1, symbol(r.text_pattern));
    j["BlockNo"] = r.block_no;
    j["BlockCharCount"] = r.block_char_count;
    j["LineWordCount"] = r.line_word_count;
    j["BlockWidth"] = r.block_width;
    j["LineCharCount"] = r.line_char_count;
    j["IsFirstInt"] = r.is_first_int;
    j["BlockWordCount"] = r.block_word_count;
    j["PageWidth"] = r.page_width;
    j["PageHeight"] = r.page_height;
    j["LeftAlignmentGroup"] = r.left_alignment_group;
    j["LeftAlignmentCount"] = r.left_alignment_count;
    j["RightAlignmentGroup"] = r.right_alignment_group;
    j["RightAlignmentCount"] = r.right_alignment_count;
    j["LineBlockRegex"] = r.line_block_regex;
    j["Width"] = r.width;
    j["Height"] = r.height;
    j["CharCount"] = r.char_count;
    j["Left"] = r.left;
    j["Top"] = r.top;
    j["LeftMargin"] = r.left_margin;
    j["TopMargin"] = r.top_margin;
    j["FirstQuarter"] = r.first_quarter;
    j["SecondQuarter"] = r.second_quarter;
    j["ThirdQuarter"] = r.third_quarter;
    j["FourthQuarter"] = r.fourth_quarter;
    j["LineNo"] = r.line_no;
    j["PageNo"] = r.page_no;
    if (r.label == kUnlabeled) {
        j["label"] = nullptr;
    } else {
        j["label"] = r.label;
    }
    return j;
}

FeatureRow feature_row_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("schema") || j["schema"] != kFeatureSchema) {
        throw Error(ErrorKind::SchemaMismatch,
            "feature record schema " + (j.is_object() && j.contains("schema") ? j["schema"].dump() : std::string("<missing>"))
                + " does not match " + std::string(kFeatureSchema));
    }
    try {
        FeatureRow r;
        r.doc_id = j.at("doc_id").get<std::string>();
        r.token_index = j.at("token_index").get<int>();
        r.raw_text = j.at("RawText").get<std::string>();
        const auto pattern = j.at("TextPattern").get<std::string>();
        if (pattern.size() != 1) {
            throw Error(ErrorKind::SchemaMismatch, "TextPattern must be one symbol");
        }
        r.text_pattern = pattern_from_symbol(pattern[0]);
        r.block_no = j.at("BlockNo").get<int>();
        r.block_char_count = j.at("BlockCharCount").get<int>();
        r.line_word_count = j.at("LineWordCount").get<int>();
        r.block_width = j.at("BlockWidth").get<int>();
        r.line_char_count = j.at("LineCharCount").get<int>();
        r.is_first_int = j.at("IsFirstInt").get<int>();
        r.block_word_count = j.at("BlockWordCount").get<int>();
        r.page_width = j.at("PageWidth").get<int>();
        r.page_height = j.at("PageHeight").get<int>();
        r.left_alignment_group = j.at("LeftAlignmentGroup").get<int>();
        r.left_alignment_count = j.at("LeftAlignmentCount").get<int>();
        r.right_alignment_group = j.at("RightAlignmentGroup").get<int>();
        r.right_alignment_count = j.at("RightAlignmentCount").get<int>();
        r.line_block_regex = j.at("LineBlockRegex").get<std::string>();
        r.width = j.at("Width").get<int>();
        r.height = j.at("Height").get<int>();
        r.char_count = j.at("CharCount").get<int>();
        r.left = j.at("Left").get<int>();
        r.top = j.at("Top").get<int>();
        r.left_margin = j.at("LeftMargin").get<double>();
        r.top_margin = j.at("TopMargin").get<double>();
        r.first_quarter = j.at("FirstQuarter").get<int>();
        r.second_quarter = j.at("SecondQuarter").get<int>();
        r.third_quarter = j.at("ThirdQuarter").get<int>();
        r.fourth_quarter = j.at("FourthQuarter").get<int>();
        r.line_no = j.at("LineNo").get<int>();
        r.page_no = j.at("PageNo").get<int>();
        const auto& label = j.at("label");
        r.label = label.is_null() ? kUnlabeled : label.get<int>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, std::string("feature record: ") + e.what());
    }
}

void write_features_jsonl(std::ostream& out, std::span<const FeatureRow> rows)
{
    for (const auto& r : rows) {
        out << to_json(r).dump() << '\n';
    }
}

std::vector<FeatureRow> read_features_jsonl(std::istream& in)
{
    std::vector<FeatureRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorKind::SchemaMismatch, "feature line " + std::to_string(line_no) + ": " + e.what());
        }
        rows.push_back(feature_row_from_json(j));
    }
    return rows;
}

std::vector<FeatureRow> read_features_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    return read_features_jsonl(in);
}

namespace {

std::string csv_quote(std::string_view field)
{
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace

void write_features_csv(std::ostream& out, std::span<const FeatureRow> rows)
{
    out << "# schema: " << kFeatureSchema << '\n';
    out << "doc_id,token_index";
    for (auto column : kFeatureColumns) {
        out << ',' << column;
    }
    out << ",label\n";
    for (const auto& r : rows) {
        const auto j = to_json(r);
        out << csv_quote(r.doc_id) << ',' << r.token_index;
        for (auto column : kFeatureColumns) {
            const auto& v = j.at(std::string(column));
            out << ',' << (v.is_string() ? csv_quote(v.get<std::string>()) : v.dump());
        }
        out << ',' << (r.label == kUnlabeled ? std::string() : std::to_string(r.label)) << '\n';
    }
}

} // namespace tabext
