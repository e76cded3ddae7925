#include "tabext/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "tabext/error.hpp"
#include "tabext/features.hpp"
#include "tabext/ingest.hpp"
#include "tabext/label_store.hpp"
#include "tabext/random.hpp"
#include "tabext/textpattern.hpp"

namespace tabext {

namespace {

constexpr int kMaxAttempts = 200;

const std::vector<std::string> kCompanies{"Müller", "Schmidt", "Schneider", "Fischer", "Weber", "Meyer", "Wagner",
    "Becker", "Schulz", "Hoffmann", "Koch", "Richter", "Klein", "Wolf", "Schröder", "Neumann", "Braun", "Zimmermann"};
const std::vector<std::string> kTrades{"Bäckerei", "Elektro", "Bürobedarf", "Gartenbau", "Metallbau", "Druckerei",
    "Autohaus", "Getränke", "Haustechnik", "Holzbau"};
const std::vector<std::string> kLegalForms{"GmbH", "AG", "KG", "OHG", "UG"};
const std::vector<std::string> kStreets{"Hauptstraße", "Bahnhofstraße", "Gartenweg", "Schulstraße", "Lindenallee",
    "Bergstraße", "Kirchplatz", "Mühlenweg", "Industriestraße", "Am Markt"};
const std::vector<std::string> kStreetsShort{"Hauptstr.", "Bahnhofstr.", "Schulstr.", "Bergstr.", "Gartenweg"};
const std::vector<std::string> kCities{"München", "Berlin", "Hamburg", "Köln", "Stuttgart", "Düsseldorf", "Leipzig",
    "Nürnberg", "Dresden", "Bremen", "Hannover", "Würzburg"};
const std::vector<std::string> kFirstNames{"Anna", "Max", "Julia", "Lukas", "Sophie", "Felix", "Lena", "Jonas"};
const std::vector<std::string> kProducts{"Schrauben", "Dübel", "Kabelbinder", "Druckerpapier", "Toner", "Wartung",
    "Montage", "Beratung", "Reinigung", "Versandkosten", "Gehäuse", "Lüfter", "Türschloss", "Schlüssel",
    "Büromaterial", "Ordner", "Kopierpapier", "Netzteil", "Steckdose", "Leuchtmittel", "Arbeitszeit", "Anfahrt",
    "Fliesen", "Farbe", "Pinsel", "Klebeband", "Lieferung"};
const std::vector<std::string> kUnits{"ST", "Stk", "kg", "m", "Std", "Pkt", "l", "Paar"};

struct Placed {
    std::string text;
    int left = 0;
    int top = 0;
    int width = 1;
    int height = 1;
    int column = -1;
};

struct Line {
    std::vector<Placed> words;
};

struct Block {
    BlockRole role = BlockRole::Table;
    std::vector<Line> lines;
};

/// Per-document typography.
struct Typography {
    int body_height = 40;
    int footer_height = 27;
    double char_width = 22.0;
    int line_spacing = 64;
    int word_gap = 22;
};

class InvoiceBuilder {
public:
    InvoiceBuilder(const LayoutSpec& spec, std::uint64_t seed)
        : spec_(spec)
        , rng_(seed)
    {
        const double H = spec.page_height;
        type_.body_height = static_cast<int>(std::lround(H * rng_.uniform(0.0105, 0.0125)));
        type_.footer_height = static_cast<int>(std::lround(type_.body_height * rng_.uniform(0.62, 0.72)));
        type_.char_width = type_.body_height * rng_.uniform(0.50, 0.58);
        type_.line_spacing = static_cast<int>(std::lround(type_.body_height * rng_.uniform(1.45, 1.7)));
        type_.word_gap = static_cast<int>(std::lround(type_.char_width * rng_.uniform(0.8, 1.2)));
    }

    GeneratedInvoice build(const std::string& doc_id);

private:
    int text_width(const std::string& text)
    {
        const double w = static_cast<double>(utf8_length(text)) * type_.char_width * rng_.uniform(0.9, 1.1);
        return std::max(1, static_cast<int>(std::lround(w)));
    }

    int body_height() { return type_.body_height + rng_.between(-2, 2); }
    int footer_height() { return type_.footer_height + rng_.between(-1, 1); }

    /// Lays words out left to right starting at x.
    Line flow(const std::vector<std::string>& words, int x, int y, bool footer)
    {
        Line line;
        for (const auto& w : words) {
            Placed p{w, x, y, text_width(w), footer ? footer_height() : body_height()};
            if (footer) {
                p.width = std::max(1, static_cast<int>(std::lround(p.width * 0.68)));
            }
            x += p.width + (footer ? type_.word_gap * 2 / 3 : type_.word_gap);
            line.words.push_back(std::move(p));
        }
        return line;
    }

    static int line_width(const Line& line)
    {
        if (line.words.empty()) {
            return 0;
        }
        return line.words.back().left + line.words.back().width - line.words.front().left;
    }

    std::string digits(int n)
    {
        std::string s;
        s.push_back(static_cast<char>('1' + rng_.below(9)));
        for (int i = 1; i < n; ++i) {
            s.push_back(static_cast<char>('0' + rng_.below(10)));
        }
        return s;
    }

    std::string money()
    {
        std::string whole = std::to_string(rng_.between(1, rng_.chance(0.2) ? 9999 : 999));
        if (whole.size() == 4 && rng_.chance(0.5)) {
            whole.insert(1, ".");
        }
        const int cents = rng_.between(0, 99);
        return whole + "," + (cents < 10 ? "0" : "") + std::to_string(cents);
    }

    std::string date()
    {
        const int d = rng_.between(1, 28);
        const int m = rng_.between(1, 12);
        return (d < 10 ? "0" : "") + std::to_string(d) + "." + (m < 10 ? "0" : "") + std::to_string(m) + "."
            + std::to_string(rng_.between(2015, 2023));
    }

    Block address_block(int x0, int y0);
    Block upper_info_block(int x0, int y0);
    Block table_block(int y0, int& table_left, int& table_right, std::vector<int>& right_aligned);
    Block total_block(int y0, int right_edge);
    Block footer_block(int y0);
    void keep_clear_of_table(std::vector<Block>& blocks) const;

    const LayoutSpec& spec_;
    Rng rng_;
    Typography type_;
};

Block InvoiceBuilder::address_block(int x0, int y0)
{
    std::vector<std::vector<std::string>> lines;
    if (rng_.chance(0.5)) {
        lines.push_back({rng_.pick(kTrades), rng_.pick(kCompanies), rng_.pick(kLegalForms)});
    } else {
        lines.push_back({rng_.pick(kCompanies), "&", rng_.pick(kCompanies), rng_.pick(kLegalForms)});
    }
    if (rng_.chance(0.5)) {
        lines.push_back({"z.Hd.", rng_.chance(0.5) ? "Frau" : "Herrn", rng_.pick(kFirstNames), rng_.pick(kCompanies)});
    }
    {
        std::istringstream street(rng_.pick(kStreets));
        std::vector<std::string> words{std::istream_iterator<std::string>(street), {}};
        std::string number = std::to_string(rng_.between(1, 120));
        if (rng_.chance(0.2)) {
            number += "a";
        }
        words.push_back(number);
        lines.push_back(words);
    }
    lines.push_back({digits(5), rng_.pick(kCities)});
    if (rng_.chance(0.4)) {
        lines.push_back({"Deutschland"});
    }

    Block block{BlockRole::Address, {}};
    int y = y0;
    for (const auto& words : lines) {
        block.lines.push_back(flow(words, x0, y, false));
        y += type_.line_spacing;
    }
    return block;
}

Block InvoiceBuilder::upper_info_block(int x0, int y0)
{
    std::vector<std::vector<std::string>> candidates{
        {"Rechnungsnummer", digits(rng_.between(5, 7))},
        {"Rechnungsdatum", date()},
        {"Lieferdatum", date()},
        {"Kundennummer", "KD-" + digits(5)},
        {"Seite", "1", "von", "1"},
        {"Bestellnummer", digits(6)},
        {"Ansprechpartner", rng_.pick(kFirstNames), rng_.pick(kCompanies)},
        {"USt-IdNr.", "DE" + digits(9)},
    };
    rng_.shuffle(candidates);
    const int count = rng_.between(3, 5);

    // Labels on the left, values in a second column.
    const int value_offset = static_cast<int>(std::lround(type_.char_width * rng_.uniform(17.0, 20.0)));
    Block block{BlockRole::UpperInfo, {}};
    int y = y0;
    for (int i = 0; i < count; ++i) {
        const auto& words = candidates[static_cast<std::size_t>(i)];
        Line line = flow({words.front()}, x0, y, false);
        Line rest = flow(std::vector<std::string>(words.begin() + 1, words.end()), x0 + value_offset, y, false);
        line.words.insert(line.words.end(), rest.words.begin(), rest.words.end());
        block.lines.push_back(std::move(line));
        y += type_.line_spacing;
    }
    return block;
}

Block InvoiceBuilder::table_block(int y0, int& table_left, int& table_right, std::vector<int>& right_aligned)
{
    enum class Kind { Pos, Article, Description, Quantity, Unit, Price, Amount };
    struct Column {
        Kind kind;
        std::string header;
        bool right;
    };
    const std::vector<Column> catalogue{
        {Kind::Pos, "Pos", false},
        {Kind::Article, "Artikel", false},
        {Kind::Description, "Bezeichnung", false},
        {Kind::Quantity, "Menge", true},
        {Kind::Unit, "Einheit", false},
        {Kind::Price, "Einzelpreis", true},
        {Kind::Amount, "Gesamt", true},
    };
    const int max_cols = static_cast<int>(catalogue.size());
    const int ncols = std::clamp(rng_.between(spec_.table_columns.min, spec_.table_columns.max), 2, max_cols);

    std::vector<std::size_t> chosen{2, 6};
    std::vector<std::size_t> optional{0, 1, 3, 4, 5};
    rng_.shuffle(optional);
    for (int i = 2; i < ncols; ++i) {
        chosen.push_back(optional[static_cast<std::size_t>(i - 2)]);
    }
    std::sort(chosen.begin(), chosen.end());

    const bool article_numeric = rng_.chance(0.5);
    const bool quantity_fraction = rng_.chance(0.6);
    const int nrows = rng_.between(spec_.table_rows.min, spec_.table_rows.max);

    auto cell_text = [&](Kind kind, int row) -> std::string {
        switch (kind) {
        case Kind::Pos: return std::to_string(row + 1);
        case Kind::Article: {
            if (article_numeric) {
                return digits(6);
            }
            const std::string head = digits(3);
            return "A" + head + "-" + digits(2);
        }
        case Kind::Description: return rng_.pick(kProducts);
        case Kind::Quantity: {
            if (!quantity_fraction) {
                return std::to_string(rng_.between(1, 250));
            }
            const std::string whole = std::to_string(rng_.between(1, 99));
            return whole + "," + (rng_.chance(0.5) ? "000" : "50");
        }
        case Kind::Unit: return rng_.pick(kUnits);
        case Kind::Price:
        case Kind::Amount: return money();
        }
        return "?";
    };

    // texts[row][col], row 0 is the header
    std::vector<std::vector<std::string>> texts(static_cast<std::size_t>(nrows) + 1);
    std::vector<std::vector<int>> widths(texts.size());
    std::vector<int> col_width(chosen.size(), 0);
    for (std::size_t r = 0; r < texts.size(); ++r) {
        for (std::size_t c = 0; c < chosen.size(); ++c) {
            const auto& col = catalogue[chosen[c]];
            texts[r].push_back(r == 0 ? col.header : cell_text(col.kind, static_cast<int>(r) - 1));
            widths[r].push_back(text_width(texts[r].back()));
            col_width[c] = std::max(col_width[c], widths[r].back());
        }
    }
    const int gap = static_cast<int>(std::lround(type_.char_width * rng_.uniform(2.0, 4.0)));
    int total_width = gap * static_cast<int>(chosen.size() - 1);
    for (int w : col_width) {
        total_width += w;
    }
    const int W = spec_.page_width;
    const int offset = static_cast<int>(std::lround(W * rng_.uniform(-0.03, 0.03)));
    table_left = (W - total_width) / 2 + offset;
    table_right = table_left + total_width;

    std::vector<int> col_x;
    int x = table_left;
    for (int w : col_width) {
        col_x.push_back(x);
        x += w + gap;
    }

    right_aligned.clear();
    for (auto idx : chosen) {
        right_aligned.push_back(catalogue[idx].right ? 1 : 0);
    }

    Block block{BlockRole::Table, {}};
    int y = y0;
    for (std::size_t r = 0; r < texts.size(); ++r) {
        Line line;
        for (std::size_t c = 0; c < chosen.size(); ++c) {
            const int w = widths[r][c];
            const int left = right_aligned[c] ? col_x[c] + col_width[c] - w : col_x[c];
            line.words.push_back(Placed{texts[r][c], left, y, w, body_height(), static_cast<int>(c)});
        }
        block.lines.push_back(std::move(line));
        y += type_.line_spacing;
    }
    return block;
}

Block InvoiceBuilder::total_block(int y0, int right_edge)
{
    std::vector<std::vector<std::string>> rows;
    rows.push_back({rng_.chance(0.5) ? "Zwischensumme" : "Nettobetrag", money()});
    rows.push_back({"MwSt", rng_.chance(0.8) ? "19%" : "7%", money()});
    if (rng_.chance(0.3)) {
        rows.push_back({"Versand", money()});
    }
    rows.push_back(rng_.chance(0.5) ? std::vector<std::string>{"Gesamtbetrag", money()}
                                    : std::vector<std::string>{"Summe", "EUR", money()});

    const int label_x = right_edge - static_cast<int>(std::lround(type_.char_width * rng_.uniform(26.0, 30.0)));
    Block block{BlockRole::Total, {}};
    int y = y0;
    for (const auto& words : rows) {
        Line line = flow({words.front()}, label_x, y, false);
        // remaining words end flush at the right edge
        std::vector<Placed> tail;
        int x = right_edge;
        for (auto it = words.rbegin(); it != words.rend() - 1; ++it) {
            const int w = text_width(*it);
            x -= w;
            tail.insert(tail.begin(), Placed{*it, x, y, w, body_height()});
            x -= type_.word_gap;
        }
        line.words.insert(line.words.end(), tail.begin(), tail.end());
        block.lines.push_back(std::move(line));
        y += type_.line_spacing;
    }
    return block;
}

Block InvoiceBuilder::footer_block(int y0)
{
    const std::string company = rng_.pick(kCompanies);
    std::vector<std::vector<std::string>> lines{
        {company, rng_.pick(kLegalForms), "|", rng_.pick(kStreetsShort), std::to_string(rng_.between(1, 90)),
            "|", digits(5), rng_.pick(kCities)},
        {"IBAN:", "DE" + digits(2), digits(4), digits(4), digits(4), digits(4), digits(2), "|", "BIC:", "COBADEFFXXX"},
        {"Geschäftsführer:", rng_.pick(kFirstNames), rng_.pick(kCompanies), "|", "Amtsgericht", rng_.pick(kCities),
            "HRB", digits(5)},
    };
    const int count = rng_.between(2, 3);
    const int spacing = static_cast<int>(std::lround(type_.footer_height * 1.5));
    Block block{BlockRole::Footer, {}};
    int y = y0;
    for (int i = 0; i < count; ++i) {
        Line line = flow(lines[static_cast<std::size_t>(i)], 0, y, true);
        // centred, with a little slack so lines do not share edges
        const int shift = (spec_.page_width - line_width(line)) / 2
            + static_cast<int>(std::lround(spec_.page_width * rng_.uniform(-0.02, 0.02)));
        for (auto& w : line.words) {
            w.left += std::max(0, shift);
        }
        block.lines.push_back(std::move(line));
        y += spacing;
    }
    return block;
}

// Moves non-table text sideways until none of its edges could join a table
// column's alignment group, even after jitter.
void InvoiceBuilder::keep_clear_of_table(std::vector<Block>& blocks) const
{
    const int W = spec_.page_width;
    const int tol = default_alignment_tolerance(W);
    const int margin = tol + 2 * spec_.jitter_px + 2;
    std::vector<int> lefts;
    std::vector<int> rights;
    for (const auto& block : blocks) {
        if (block.role != BlockRole::Table) {
            continue;
        }
        for (const auto& line : block.lines) {
            for (const auto& w : line.words) {
                lefts.push_back(w.left);
                rights.push_back(w.left + w.width);
            }
        }
    }
    // Only edges shared by several table tokens can seed a large group.
    auto shared = [tol](std::vector<int>& edges) {
        const auto groups = cluster_coordinates(edges, tol + 4);
        std::vector<int> kept;
        for (std::size_t i = 0; i < edges.size(); ++i) {
            if (groups[i].group_count >= 2) {
                kept.push_back(edges[i]);
            }
        }
        edges = std::move(kept);
    };
    shared(lefts);
    shared(rights);
    auto near = [margin](const std::vector<int>& edges, int x) {
        return std::any_of(edges.begin(), edges.end(), [&](int e) { return std::abs(e - x) <= margin; });
    };
    auto clear = [&](const std::vector<Line*>& lines, int shift) {
        for (const Line* line : lines) {
            for (const auto& w : line->words) {
                const int l = w.left + shift;
                const int r = l + w.width;
                if (l < tol || r > W - tol || near(lefts, l) || near(rights, r)) {
                    return false;
                }
            }
        }
        return true;
    };
    auto move = [&](const std::vector<Line*>& lines, bool rightward_only) {
        for (int k = 0; k <= 60; ++k) {
            for (int sign : {1, -1}) {
                const int shift = sign * k * (margin / 2 + 1);
                if ((rightward_only && shift < 0) || (k == 0 && sign < 0)) {
                    continue;
                }
                if (clear(lines, shift)) {
                    for (Line* line : lines) {
                        for (auto& w : line->words) {
                            w.left += shift;
                        }
                    }
                    return;
                }
            }
        }
        // No rigid shift fits: widen word gaps instead.
        for (Line* line : lines) {
            int offset = 0;
            for (auto& w : line->words) {
                while (offset < 4 * margin * static_cast<int>(line->words.size())
                    && (near(lefts, w.left + offset) || near(rights, w.left + offset + w.width))) {
                    ++offset;
                }
                w.left += offset;
            }
        }
    };
    for (auto& block : blocks) {
        if (block.role == BlockRole::Table) {
            continue;
        }
        if (block.role == BlockRole::Footer) {
            for (auto& line : block.lines) {
                move({&line}, false);
            }
            continue;
        }
        std::vector<Line*> lines;
        for (auto& line : block.lines) {
            lines.push_back(&line);
        }
        move(lines, block.role == BlockRole::Total);
    }
}

std::string format_conf(double conf)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", conf);
    return buf;
}

struct Box {
    int left = 0, top = 0, right = 0, bottom = 0;
};

Box bounds(const std::vector<Placed>& words)
{
    Box b{words.front().left, words.front().top, words.front().left + words.front().width,
        words.front().top + words.front().height};
    for (const auto& w : words) {
        b.left = std::min(b.left, w.left);
        b.top = std::min(b.top, w.top);
        b.right = std::max(b.right, w.left + w.width);
        b.bottom = std::max(b.bottom, w.top + w.height);
    }
    return b;
}

GeneratedInvoice InvoiceBuilder::build(const std::string& doc_id)
{
    const int W = spec_.page_width;
    const int H = spec_.page_height;
    std::vector<Block> blocks;

    const bool address_left = rng_.chance(0.5);
    int header_bottom = static_cast<int>(H * 0.05);
    if (spec_.address) {
        const int x0 = static_cast<int>(std::lround(W * (address_left ? rng_.uniform(0.06, 0.10) : rng_.uniform(0.55, 0.62))));
        const int y0 = static_cast<int>(std::lround(H * rng_.uniform(0.05, 0.09)));
        blocks.push_back(address_block(x0, y0));
        header_bottom = std::max(header_bottom, y0 + static_cast<int>(blocks.back().lines.size()) * type_.line_spacing);
    }
    if (spec_.upper_info) {
        const bool info_left = spec_.address ? !address_left : rng_.chance(0.5);
        const int x0 = static_cast<int>(std::lround(W * (info_left ? rng_.uniform(0.06, 0.10) : rng_.uniform(0.52, 0.58))));
        const int y0 = static_cast<int>(std::lround(H * rng_.uniform(0.10, 0.16)));
        blocks.push_back(upper_info_block(x0, y0));
        header_bottom = std::max(header_bottom, y0 + static_cast<int>(blocks.back().lines.size()) * type_.line_spacing);
    }

    const int table_top = std::max(header_bottom + type_.line_spacing, static_cast<int>(std::lround(H * rng_.uniform(0.28, 0.33))));
    int table_left = 0;
    int table_right = 0;
    std::vector<int> right_aligned;
    blocks.push_back(table_block(table_top, table_left, table_right, right_aligned));
    int body_bottom = table_top + static_cast<int>(blocks.back().lines.size()) * type_.line_spacing;

    if (spec_.total) {
        const int y0 = body_bottom + static_cast<int>(std::lround(type_.line_spacing * rng_.uniform(0.8, 1.6)));
        const int tol = default_alignment_tolerance(W);
        const int right_edge = std::min(W - 2 * tol, table_right + std::max(4 * tol, static_cast<int>(std::lround(W * rng_.uniform(0.015, 0.04)))));
        blocks.push_back(total_block(y0, right_edge));
        body_bottom = y0 + static_cast<int>(blocks.back().lines.size()) * type_.line_spacing;
    }
    if (spec_.footer) {
        const int y0 = static_cast<int>(std::lround(H * rng_.uniform(0.88, 0.905)));
        blocks.push_back(footer_block(y0));
    }

    GeneratedInvoice inv;
    inv.doc_id = doc_id;
    inv.column_right_aligned = right_aligned;
    for (const auto& block : blocks) {
        if (block.role != BlockRole::Table) {
            continue;
        }
        for (std::size_t r = 1; r < block.lines.size(); ++r) {
            std::vector<std::string> texts;
            for (const auto& w : block.lines[r].words) {
                texts.push_back(w.text);
            }
            inv.clean_row_patterns.push_back(line_block_regex(std::span<const std::string>(texts)));
        }
    }

    keep_clear_of_table(blocks);

    // noise: dropout, then coordinate jitter
    for (auto& block : blocks) {
        for (auto& line : block.lines) {
            std::vector<Placed> kept;
            for (auto& w : line.words) {
                if (spec_.dropout > 0.0 && rng_.chance(spec_.dropout)) {
                    continue;
                }
                if (spec_.jitter_px > 0) {
                    w.left = std::max(0, w.left + rng_.between(-spec_.jitter_px, spec_.jitter_px));
                    w.top = std::max(0, w.top + rng_.between(-spec_.jitter_px, spec_.jitter_px));
                }
                kept.push_back(std::move(w));
            }
            line.words = std::move(kept);
        }
        std::erase_if(block.lines, [](const Line& l) { return l.words.empty(); });
    }
    std::erase_if(blocks, [](const Block& b) { return b.lines.empty(); });

    std::ostringstream tsv;
    tsv << kTsvHeader << '\n';
    tsv << "1\t1\t0\t0\t0\t0\t0\t0\t" << W << '\t' << H << "\t-1\t\n";
    int block_num = 0;
    for (const auto& block : blocks) {
        ++block_num;
        std::vector<Placed> all;
        for (const auto& line : block.lines) {
            all.insert(all.end(), line.words.begin(), line.words.end());
        }
        const Box bb = bounds(all);
        tsv << "2\t1\t" << block_num << "\t0\t0\t0\t" << bb.left << '\t' << bb.top << '\t' << bb.right - bb.left << '\t'
            << bb.bottom - bb.top << "\t-1\t\n";
        tsv << "3\t1\t" << block_num << "\t1\t0\t0\t" << bb.left << '\t' << bb.top << '\t' << bb.right - bb.left << '\t'
            << bb.bottom - bb.top << "\t-1\t\n";
        int line_num = 0;
        for (const auto& line : block.lines) {
            ++line_num;
            const Box lb = bounds(line.words);
            tsv << "4\t1\t" << block_num << "\t1\t" << line_num << "\t0\t" << lb.left << '\t' << lb.top << '\t'
                << lb.right - lb.left << '\t' << lb.bottom - lb.top << "\t-1\t\n";
            int word_num = 0;
            for (const auto& w : line.words) {
                ++word_num;
                tsv << "5\t1\t" << block_num << "\t1\t" << line_num << '\t' << word_num << '\t' << w.left << '\t'
                    << w.top << '\t' << w.width << '\t' << w.height << '\t' << format_conf(rng_.uniform(62.0, 99.5))
                    << '\t' << w.text << '\n';
                inv.labels.push_back(block.role == BlockRole::Table ? 1 : 0);
                inv.roles.push_back(block.role);
                inv.table_columns.push_back(block.role == BlockRole::Table ? w.column : -1);
            }
        }
    }
    inv.tsv = tsv.str();
    return inv;
}

} // namespace

void LayoutSpec::validate() const
{
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InfeasibleSpec, msg); };
    if (page_width < 1000 || page_height < 1400) {
        fail("page must be at least 1000x1400 px");
    }
    if (table_rows.min < 1 || table_rows.min > table_rows.max) {
        fail("table_rows must satisfy 1 <= min <= max");
    }
    if (table_columns.min < 2 || table_columns.min > table_columns.max || table_columns.max > 7) {
        fail("table_columns must satisfy 2 <= min <= max <= 7");
    }
    if (jitter_px < 0 || jitter_px > 2) {
        fail("jitter_px must lie in [0, 2]");
    }
    if (!(dropout >= 0.0 && dropout <= 0.02)) {
        fail("dropout must lie in [0, 0.02]");
    }
    // Rough vertical budget: table plus totals must end before the footer band.
    const double spacing = page_height * 0.0125 * 1.7;
    const double needed = page_height * 0.33 + (table_rows.max + 1) * spacing + (total ? 6 * spacing : 0);
    if (needed > page_height * 0.86) {
        fail("table with " + std::to_string(table_rows.max) + " rows does not fit the page");
    }
}

nlohmann::json to_json(const LayoutSpec& s)
{
    return {
        {"page_width", s.page_width},
        {"page_height", s.page_height},
        {"table_rows", {s.table_rows.min, s.table_rows.max}},
        {"table_columns", {s.table_columns.min, s.table_columns.max}},
        {"blocks", {{"address", s.address}, {"upper_info", s.upper_info}, {"total", s.total}, {"footer", s.footer}}},
        {"jitter_px", s.jitter_px},
        {"dropout", s.dropout},
        {"seed", s.seed},
    };
}

LayoutSpec layout_spec_from_json(const nlohmann::json& j)
{
    LayoutSpec s;
    try {
        s.page_width = j.value("page_width", s.page_width);
        s.page_height = j.value("page_height", s.page_height);
        if (j.contains("table_rows")) {
            s.table_rows = {j["table_rows"].at(0).get<int>(), j["table_rows"].at(1).get<int>()};
        }
        if (j.contains("table_columns")) {
            s.table_columns = {j["table_columns"].at(0).get<int>(), j["table_columns"].at(1).get<int>()};
        }
        if (j.contains("blocks")) {
            const auto& b = j["blocks"];
            s.address = b.value("address", s.address);
            s.upper_info = b.value("upper_info", s.upper_info);
            s.total = b.value("total", s.total);
            s.footer = b.value("footer", s.footer);
        }
        s.jitter_px = j.value("jitter_px", s.jitter_px);
        s.dropout = j.value("dropout", s.dropout);
        s.seed = j.value("seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("layout spec: ") + e.what());
    }
    return s;
}

const char* to_string(BlockRole role)
{
    switch (role) {
    case BlockRole::Address: return "address";
    case BlockRole::UpperInfo: return "upper_info";
    case BlockRole::Table: return "table";
    case BlockRole::Total: return "total";
    case BlockRole::Footer: return "footer";
    }
    return "unknown";
}

std::vector<std::string> check_layout_priors(const GeneratedInvoice& inv, const LayoutSpec& spec)
{
    std::vector<std::string> problems;
    DocumentModel doc;
    try {
        doc = parse_tsv(inv.tsv, inv.doc_id);
    } catch (const Error& e) {
        problems.push_back(std::string("does not parse: ") + e.what());
        return problems;
    }
    if (doc.pages.size() != 1) {
        problems.push_back("expected exactly one page");
        return problems;
    }
    const auto& page = doc.pages.front();
    const auto& tokens = page.tokens;
    if (tokens.size() != inv.labels.size() || tokens.size() != inv.roles.size()) {
        problems.push_back("label map does not cover the parsed tokens");
        return problems;
    }
    const int W = page.width;
    const int H = page.height;

    std::set<int> table_blocks;
    std::set<int> other_blocks;
    int min_body_height = H;
    int max_footer_height = 0;
    int table_left = W;
    int table_right = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        const auto role = inv.roles[i];
        if ((inv.labels[i] == 1) != (role == BlockRole::Table)) {
            problems.push_back("label disagrees with block role at token " + std::to_string(i));
        }
        if (role == BlockRole::Table) {
            table_blocks.insert(t.block_num);
            table_left = std::min(table_left, t.left);
            table_right = std::max(table_right, t.right());
        } else {
            other_blocks.insert(t.block_num);
        }
        if (role == BlockRole::Footer) {
            max_footer_height = std::max(max_footer_height, t.height);
            if (4LL * t.top < 3LL * H) {
                problems.push_back("footer token above the last quarter: " + t.text);
            }
        } else {
            min_body_height = std::min(min_body_height, t.height);
        }
        if (role == BlockRole::Address && 4LL * t.bottom() > H) {
            problems.push_back("address token outside the first quarter: " + t.text);
        }
    }
    if (table_blocks.size() != 1) {
        problems.push_back("expected exactly one table block");
    } else if (other_blocks.count(*table_blocks.begin()) != 0) {
        problems.push_back("table block shares its block number");
    }
    if (spec.footer && max_footer_height >= min_body_height) {
        problems.push_back("footer text not smaller than body text");
    }
    if (table_right > table_left) {
        const double centre = 0.5 * (table_left + table_right);
        if (std::abs(centre - 0.5 * W) > 0.05 * W) {
            problems.push_back("table not horizontally centred");
        }
    }

    // Per-column alignment within the grouping tolerance.
    const int tol = default_alignment_tolerance(W);
    std::map<int, std::pair<int, int>> column_extent;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const int c = inv.table_columns[i];
        if (c < 0) {
            continue;
        }
        const int coord = inv.column_right_aligned.at(static_cast<std::size_t>(c)) ? tokens[i].right() : tokens[i].left;
        auto [it, inserted] = column_extent.try_emplace(c, coord, coord);
        it->second.first = std::min(it->second.first, coord);
        it->second.second = std::max(it->second.second, coord);
    }
    for (const auto& [c, extent] : column_extent) {
        if (extent.second - extent.first >= tol) {
            problems.push_back("table column " + std::to_string(c) + " not aligned");
        }
    }
    for (const auto& pattern : inv.clean_row_patterns) {
        if (pattern != inv.clean_row_patterns.front()) {
            problems.push_back("table row patterns differ");
            break;
        }
    }

    // The biggest alignment group on either axis must be pure table.
    const auto left = alignment_groups(tokens, AlignAxis::Left, tol);
    const auto right = alignment_groups(tokens, AlignAxis::Right, tol);
    int largest = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        largest = std::max({largest, left[i].group_count, right[i].group_count});
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if ((left[i].group_count == largest || right[i].group_count == largest) && inv.labels[i] != 1) {
            problems.push_back("largest alignment group contains non-table token: " + tokens[i].text);
            break;
        }
    }
    return problems;
}

GeneratedInvoice generate_invoice(const LayoutSpec& spec, const std::string& doc_id)
{
    spec.validate();
    std::string last_problem = "no attempt made";
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        InvoiceBuilder builder(spec, derive_seed(spec.seed, static_cast<std::uint64_t>(attempt)));
        auto inv = builder.build(doc_id);
        const auto problems = check_layout_priors(inv, spec);
        if (problems.empty()) {
            inv.attempts = attempt + 1;
            return inv;
        }
        last_problem = problems.front();
    }
    throw Error(ErrorKind::InfeasibleSpec,
        "no layout satisfied the placement rules after " + std::to_string(kMaxAttempts) + " attempts (" + last_problem + ")");
}

void generate_corpus(std::size_t n, const LayoutSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir)
{
    if (n == 0) {
        throw Error(ErrorKind::Config, "corpus size must be at least 1");
    }
    spec.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create " + out_dir.string() + ": " + ec.message());
    }

    const int width = std::max<int>(4, static_cast<int>(std::to_string(n).size()));
    std::ostringstream labels;
    auto documents = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
        std::string index = std::to_string(i + 1);
        const std::string doc_id = "invoice_" + std::string(static_cast<std::size_t>(width) - index.size(), '0') + index;
        LayoutSpec doc_spec = spec;
        doc_spec.seed = derive_seed(seed, i);
        const auto inv = generate_invoice(doc_spec, doc_id);

        const auto path = out_dir / (doc_id + ".tsv");
        std::ofstream tsv(path, std::ios::binary | std::ios::trunc);
        tsv << inv.tsv;
        if (!tsv) {
            throw Error(ErrorKind::Io, "cannot write " + path.string());
        }
        int table_tokens = 0;
        for (std::size_t t = 0; t < inv.labels.size(); ++t) {
            const LabelRecord record{{doc_id, static_cast<int>(t)}, inv.labels[t], LabelSource::Seed, 1, 0};
            labels << to_json(record).dump() << '\n';
            table_tokens += inv.labels[t];
        }
        documents.push_back({
            {"doc_id", doc_id},
            {"seed", doc_spec.seed},
            {"attempts", inv.attempts},
            {"tokens", inv.labels.size()},
            {"table_tokens", table_tokens},
        });
    }

    std::ofstream labels_file(out_dir / "labels.jsonl", std::ios::binary | std::ios::trunc);
    labels_file << labels.str();
    nlohmann::json manifest{
        {"schema", kCorpusSchema},
        {"count", n},
        {"seed", seed},
        {"spec", to_json(spec)},
        {"documents", std::move(documents)},
    };
    std::ofstream manifest_file(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    manifest_file << manifest.dump(2) << '\n';
    if (!labels_file || !manifest_file) {
        throw Error(ErrorKind::Io, "cannot write corpus metadata in " + out_dir.string());
    }
}

} // namespace tabext
