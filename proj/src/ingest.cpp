#include "tabext/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "tabext/error.hpp"

namespace tabext {

namespace {

constexpr std::size_t kColumns = 12;

std::vector<std::string_view> split_tabs(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

int parse_int(std::string_view field, std::size_t line_no, std::string_view name)
{
    int value = 0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc{} || ptr != end) {
        throw BadRowError(line_no, "non-numeric " + std::string(name) + " '" + std::string(field) + "'");
    }
    return value;
}

double parse_double(std::string_view field, std::size_t line_no, std::string_view name)
{
    double value = 0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc{} || ptr != end) {
        throw BadRowError(line_no, "non-numeric " + std::string(name) + " '" + std::string(field) + "'");
    }
    return value;
}

std::string format_double(double value)
{
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

} // namespace

std::size_t DocumentModel::token_count() const
{
    std::size_t n = 0;
    for (const auto& page : pages) {
        n += page.tokens.size();
    }
    return n;
}

std::vector<const Token*> DocumentModel::tokens() const
{
    std::vector<const Token*> all;
    all.reserve(token_count());
    for (const auto& page : pages) {
        for (const auto& token : page.tokens) {
            all.push_back(&token);
        }
    }
    return all;
}

Token clamp_or_reject(Token token, const Page& page)
{
    const int overshoot_x = token.left + token.width - page.width;
    const int overshoot_y = token.top + token.height - page.height;
    if (overshoot_x > kClampTolerancePx || overshoot_y > kClampTolerancePx) {
        throw Error(ErrorKind::BadGeometry,
            "token '" + token.text + "' at (" + std::to_string(token.left) + "," + std::to_string(token.top) + ") size "
                + std::to_string(token.width) + "x" + std::to_string(token.height) + " exceeds page "
                + std::to_string(page.width) + "x" + std::to_string(page.height));
    }
    if (overshoot_x > 0) {
        token.width -= overshoot_x;
    }
    if (overshoot_y > 0) {
        token.height -= overshoot_y;
    }
    if (token.width < 1 || token.height < 1) {
        throw Error(ErrorKind::BadGeometry, "token '" + token.text + "' lies outside its page");
    }
    return token;
}

DocumentModel parse_tsv(std::istream& in, std::string doc_id)
{
    DocumentModel doc;
    doc.doc_id = std::move(doc_id);

    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::MalformedHeader, "empty input, expected TSV header");
    }
    std::string_view header = line;
    if (header.starts_with("\xEF\xBB\xBF")) {
        header.remove_prefix(3);
    }
    if (header.ends_with('\r')) {
        header.remove_suffix(1);
    }
    if (header != kTsvHeader) {
        throw Error(ErrorKind::MalformedHeader, "unexpected TSV header '" + std::string(header) + "'");
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view row = line;
        if (row.ends_with('\r')) {
            row.remove_suffix(1);
        }
        if (row.empty()) {
            continue;
        }
        const auto fields = split_tabs(row);
        if (fields.size() != kColumns) {
            throw BadRowError(line_no, "expected 12 columns, found " + std::to_string(fields.size()));
        }

        Token t;
        t.level = parse_int(fields[0], line_no, "level");
        t.page_num = parse_int(fields[1], line_no, "page_num");
        t.block_num = parse_int(fields[2], line_no, "block_num");
        t.par_num = parse_int(fields[3], line_no, "par_num");
        t.line_num = parse_int(fields[4], line_no, "line_num");
        t.word_num = parse_int(fields[5], line_no, "word_num");
        t.left = parse_int(fields[6], line_no, "left");
        t.top = parse_int(fields[7], line_no, "top");
        t.width = parse_int(fields[8], line_no, "width");
        t.height = parse_int(fields[9], line_no, "height");
        t.conf = parse_double(fields[10], line_no, "conf");
        t.text = std::string(fields[11]);

        if (t.level < 1 || t.level > 5) {
            throw BadRowError(line_no, "level " + std::to_string(t.level) + " outside 1..5");
        }
        if (t.page_num < 1) {
            throw BadRowError(line_no, "page_num must be >= 1");
        }
        if (t.block_num < 0 || t.par_num < 0 || t.line_num < 0 || t.word_num < 0) {
            throw BadRowError(line_no, "negative structural index");
        }
        if (t.left < 0 || t.top < 0 || t.width < 0 || t.height < 0) {
            throw BadRowError(line_no, "negative box coordinate");
        }

        if (t.level == 1) {
            if (t.width < 1 || t.height < 1) {
                throw BadRowError(line_no, "page row without positive dimensions");
            }
            const bool seen = std::any_of(doc.pages.begin(), doc.pages.end(),
                [&](const Page& p) { return p.page_num == t.page_num; });
            if (seen) {
                throw BadRowError(line_no, "duplicate page row for page " + std::to_string(t.page_num));
            }
            doc.pages.push_back(Page{t.page_num, t.width, t.height, {}});
            continue;
        }
        if (t.level < 5) {
            continue;
        }
        if (t.text.empty()) {
            continue;
        }
        if (t.conf < 0.0 || t.conf > 100.0) {
            throw BadRowError(line_no, "word confidence outside [0,100]");
        }
        auto page = std::find_if(doc.pages.begin(), doc.pages.end(),
            [&](const Page& p) { return p.page_num == t.page_num; });
        if (page == doc.pages.end()) {
            throw Error(ErrorKind::MissingPageRow,
                "line " + std::to_string(line_no) + ": word row before page row for page " + std::to_string(t.page_num));
        }
        if (t.width < 1 || t.height < 1) {
            throw Error(ErrorKind::BadGeometry, "line " + std::to_string(line_no) + ": empty word box");
        }
        page->tokens.push_back(clamp_or_reject(std::move(t), *page));
    }
    return doc;
}

DocumentModel parse_tsv(std::string_view text, std::string doc_id)
{
    std::istringstream in{std::string(text)};
    return parse_tsv(in, std::move(doc_id));
}

DocumentModel parse_tsv_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    return parse_tsv(in, path.stem().string());
}

void write_tsv(std::ostream& out, const DocumentModel& doc)
{
    out << kTsvHeader << '\n';
    for (const auto& page : doc.pages) {
        out << "1\t" << page.page_num << "\t0\t0\t0\t0\t0\t0\t" << page.width << '\t' << page.height << "\t-1\t\n";
        for (const auto& t : page.tokens) {
            out << t.level << '\t' << t.page_num << '\t' << t.block_num << '\t' << t.par_num << '\t' << t.line_num
                << '\t' << t.word_num << '\t' << t.left << '\t' << t.top << '\t' << t.width << '\t' << t.height
                << '\t' << format_double(t.conf) << '\t' << t.text << '\n';
        }
    }
}

std::string to_tsv(const DocumentModel& doc)
{
    std::ostringstream out;
    write_tsv(out, doc);
    return out.str();
}

nlohmann::json to_json(const Token& t)
{
    return {
        {"level", t.level},
        {"page_num", t.page_num},
        {"block_num", t.block_num},
        {"par_num", t.par_num},
        {"line_num", t.line_num},
        {"word_num", t.word_num},
        {"left", t.left},
        {"top", t.top},
        {"width", t.width},
        {"height", t.height},
        {"conf", t.conf},
        {"text", t.text},
    };
}

nlohmann::json to_json(const DocumentModel& doc)
{
    auto pages = nlohmann::json::array();
    for (const auto& page : doc.pages) {
        auto tokens = nlohmann::json::array();
        for (const auto& t : page.tokens) {
            tokens.push_back(to_json(t));
        }
        pages.push_back({
            {"page_num", page.page_num},
            {"page_width", page.width},
            {"page_height", page.height},
            {"tokens", std::move(tokens)},
        });
    }
    return {{"schema", kDocumentSchema}, {"doc_id", doc.doc_id}, {"pages", std::move(pages)}};
}

DocumentModel document_from_json(const nlohmann::json& j)
{
    try {
        if (j.at("schema").get<std::string>() != kDocumentSchema) {
            throw Error(ErrorKind::SchemaMismatch, "unsupported document schema " + j.at("schema").dump());
        }
        DocumentModel doc;
        doc.doc_id = j.at("doc_id").get<std::string>();
        for (const auto& jp : j.at("pages")) {
            Page page{jp.at("page_num").get<int>(), jp.at("page_width").get<int>(), jp.at("page_height").get<int>(), {}};
            for (const auto& jt : jp.at("tokens")) {
                Token t;
                t.level = jt.at("level").get<int>();
                t.page_num = jt.at("page_num").get<int>();
                t.block_num = jt.at("block_num").get<int>();
                t.par_num = jt.at("par_num").get<int>();
                t.line_num = jt.at("line_num").get<int>();
                t.word_num = jt.at("word_num").get<int>();
                t.left = jt.at("left").get<int>();
                t.top = jt.at("top").get<int>();
                t.width = jt.at("width").get<int>();
                t.height = jt.at("height").get<int>();
                t.conf = jt.at("conf").get<double>();
                t.text = jt.at("text").get<std::string>();
                page.tokens.push_back(std::move(t));
            }
            doc.pages.push_back(std::move(page));
        }
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, std::string("malformed document JSON: ") + e.what());
    }
}

std::vector<std::filesystem::path> list_tsv_files(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir)) {
        throw Error(ErrorKind::Io, "not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".tsv") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

} // namespace tabext
