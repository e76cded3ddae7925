#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tabext {

inline constexpr std::string_view kTsvHeader =
    "level\tpage_num\tblock_num\tpar_num\tline_num\tword_num\tleft\ttop\twidth\theight\tconf\ttext";

inline constexpr std::string_view kDocumentSchema = "tabext.document/1";

/// Boxes may overshoot the page edge by at most this many pixels before being rejected.
inline constexpr int kClampTolerancePx = 5;

/// One recognised word (a level-5 TSV row).
struct Token {
    int level = 5;
    int page_num = 1;
    int block_num = 0;
    int par_num = 0;
    int line_num = 0;
    int word_num = 0;
    int left = 0;
    int top = 0;
    int width = 1;
    int height = 1;
    double conf = 0.0;
    std::string text;

    int right() const { return left + width; }
    int bottom() const { return top + height; }

    bool operator==(const Token&) const = default;
};

struct Page {
    int page_num = 1;
    int width = 0;
    int height = 0;
    std::vector<Token> tokens; // reading order

    bool operator==(const Page&) const = default;
};

struct DocumentModel {
    std::string doc_id;
    std::vector<Page> pages;

    std::size_t token_count() const;

    /// Tokens of all pages in reading order; position in the result is the
    /// document-wide token index used by labels and predictions.
    std::vector<const Token*> tokens() const;

    bool operator==(const DocumentModel&) const = default;
};

DocumentModel parse_tsv(std::istream& in, std::string doc_id = {});
DocumentModel parse_tsv(std::string_view text, std::string doc_id = {});

/// Reads a TSV file; the document id is the file stem.
DocumentModel parse_tsv_file(const std::filesystem::path& path);

/// Pulls a box that overshoots the page by at most kClampTolerancePx back to
/// the page edge; larger overshoot throws BadGeometry.
Token clamp_or_reject(Token token, const Page& page);

/// Writes the page (level 1) and word (level 5) rows needed to rebuild the model.
void write_tsv(std::ostream& out, const DocumentModel& doc);
std::string to_tsv(const DocumentModel& doc);

nlohmann::json to_json(const Token& token);
nlohmann::json to_json(const DocumentModel& doc);
DocumentModel document_from_json(const nlohmann::json& j);

/// Every *.tsv under dir, sorted by file name.
std::vector<std::filesystem::path> list_tsv_files(const std::filesystem::path& dir);

} // namespace tabext
