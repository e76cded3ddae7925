#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "tabext/ingest.hpp"
#include "tabext/textpattern.hpp"

namespace tabext {

inline constexpr std::string_view kFeatureSchema = "tabext.features/1";

/// Label value for a token nobody has labelled yet.
inline constexpr int kUnlabeled = -1;

/// Layout and text attributes of one token, plus its table/non-table label.
struct FeatureRow {
    std::string doc_id;
    int token_index = 0;

    std::string raw_text;
    PatternLabel text_pattern = PatternLabel::Mixed;
    int block_no = 0;
    int block_char_count = 0;
    int line_word_count = 0;
    int block_width = 0;
    int line_char_count = 0;
    int is_first_int = 0;
    int block_word_count = 0;
    int page_width = 0;
    int page_height = 0;
    int left_alignment_group = 0;
    int left_alignment_count = 0;
    int right_alignment_group = 0;
    int right_alignment_count = 0;
    std::string line_block_regex;
    int width = 0;
    int height = 0;
    int char_count = 0;
    int left = 0;
    int top = 0;
    double left_margin = 0.0;
    double top_margin = 0.0;
    int first_quarter = 0;
    int second_quarter = 0;
    int third_quarter = 0;
    int fourth_quarter = 0;
    int line_no = 0;
    int page_no = 0;

    int label = kUnlabeled;

    bool operator==(const FeatureRow&) const = default;
};

/// Column order used by every serialized feature file.
inline constexpr std::array<std::string_view, 29> kFeatureColumns{
    "RawText", "TextPattern", "BlockNo", "BlockCharCount", "LineWordCount", "BlockWidth",
    "LineCharCount", "IsFirstInt", "BlockWordCount", "PageWidth", "PageHeight",
    "LeftAlignmentGroup", "LeftAlignmentCount", "RightAlignmentGroup", "RightAlignmentCount",
    "LineBlockRegex", "Width", "Height", "CharCount", "Left", "Top", "LeftMargin", "TopMargin",
    "FirstQuarter", "SecondQuarter", "ThirdQuarter", "FourthQuarter", "LineNo", "PageNo",
};

struct BlockAggregate {
    int char_count = 0;
    int word_count = 0;
    int width = 0;

    bool operator==(const BlockAggregate&) const = default;
};

/// Keyed by block_num; tokens must belong to one page.
std::map<int, BlockAggregate> block_aggregates(std::span<const Token> page_tokens);

using LineKey = std::tuple<int, int, int>; // block_num, par_num, line_num

struct LineAggregate {
    int word_count = 0;
    int char_count = 0;
    std::string regex;
    int line_no = 0; // 0-based rank of the line within its page

    bool operator==(const LineAggregate&) const = default;
};

std::map<LineKey, LineAggregate> line_aggregates(std::span<const Token> page_tokens);

enum class AlignAxis { Left, Right };

struct GroupAssignment {
    int group_id = 0;
    int group_count = 0;

    bool operator==(const GroupAssignment&) const = default;
};

/// Single-linkage sweep over sorted coordinates: neighbours at most
/// `tolerance` apart share a group. Ids ascend with coordinate.
std::vector<GroupAssignment> cluster_coordinates(std::span<const int> coords, int tolerance);

/// Groups on the left edge or on the right edge (left + width).
std::vector<GroupAssignment> alignment_groups(std::span<const Token> page_tokens, AlignAxis axis, int tolerance);

/// max(2, round(0.004 * page_width)).
int default_alignment_tolerance(int page_width);

/// Vertical band of the page holding `top`: floor(4 * top / page_height), capped at 3.
int quarter_index(int top, int page_height);
std::array<int, 4> quarter_flags(const Token& token, const Page& page);

/// One row per token in document reading order. Labels are left unset.
/// Without an explicit tolerance each page uses default_alignment_tolerance.
std::vector<FeatureRow> featurize_document(const DocumentModel& doc, std::optional<int> tolerance = std::nullopt);

nlohmann::json to_json(const FeatureRow& row);
FeatureRow feature_row_from_json(const nlohmann::json& j);

void write_features_jsonl(std::ostream& out, std::span<const FeatureRow> rows);
std::vector<FeatureRow> read_features_jsonl(std::istream& in);
std::vector<FeatureRow> read_features_file(const std::filesystem::path& path);

/// First line is "# schema: <kFeatureSchema>", then a header row.
void write_features_csv(std::ostream& out, std::span<const FeatureRow> rows);

} // namespace tabext
