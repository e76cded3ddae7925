#include "tabext/textpattern.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "tabext/error.hpp"

namespace tabext {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Letter ranges of the alphabetic scripts likely to show up on invoices,
// plus combining diacritics so decomposed umlauts stay letters.
constexpr std::array<std::pair<char32_t, char32_t>, 29> kLetterRanges{{
    {U'A', U'Z'},
    {U'a', U'z'},
    {0x00AA, 0x00AA},
    {0x00B5, 0x00B5},
    {0x00BA, 0x00BA},
    {0x00C0, 0x00D6},
    {0x00D8, 0x00F6},
    {0x00F8, 0x02C1}, // Latin-1, Latin Extended-A/B, IPA, modifier letters
    {0x02C6, 0x02D1},
    {0x0300, 0x036F}, // combining diacritical marks
    {0x0370, 0x0373},
    {0x0376, 0x0377},
    {0x037B, 0x037D},
    {0x0386, 0x0386},
    {0x0388, 0x03F5}, // Greek
    {0x03F7, 0x0481}, // Greek, Cyrillic
    {0x048A, 0x052F},
    {0x0531, 0x0556}, // Armenian
    {0x0561, 0x0587},
    {0x05D0, 0x05EA}, // Hebrew
    {0x0620, 0x064A}, // Arabic
    {0x1E00, 0x1FBC}, // Latin Extended Additional, Greek Extended
    {0x1FC2, 0x1FCC},
    {0x1FD0, 0x1FDB},
    {0x1FE0, 0x1FEC},
    {0x1FF2, 0x1FFC},
    {0x3041, 0x30FF}, // kana
    {0x4E00, 0x9FFF}, // CJK unified ideographs
    {0xAC00, 0xD7A3}, // Hangul syllables
}};

} // namespace

std::u32string decode_utf8(std::string_view text)
{
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const auto lead = static_cast<unsigned char>(text[i]);
        std::size_t extra = 0;
        char32_t cp = 0;
        char32_t min = 0;
        if (lead < 0x80) {
            out.push_back(lead);
            ++i;
            continue;
        } else if ((lead & 0xE0) == 0xC0) {
            extra = 1;
            cp = lead & 0x1F;
            min = 0x80;
        } else if ((lead & 0xF0) == 0xE0) {
            extra = 2;
            cp = lead & 0x0F;
            min = 0x800;
        } else if ((lead & 0xF8) == 0xF0) {
            extra = 3;
            cp = lead & 0x07;
            min = 0x10000;
        } else {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        if (i + extra >= text.size()) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        bool ok = true;
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cont = static_cast<unsigned char>(text[i + k]);
            if ((cont & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cont & 0x3F);
        }
        if (!ok || cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += extra + 1;
    }
    return out;
}

std::size_t utf8_length(std::string_view text)
{
    return decode_utf8(text).size();
}

bool is_letter(char32_t c)
{
    return std::any_of(kLetterRanges.begin(), kLetterRanges.end(),
        [c](const auto& range) { return c >= range.first && c <= range.second; });
}

bool is_decimal_digit(char32_t c)
{
    return (c >= U'0' && c <= U'9') || (c >= 0x0660 && c <= 0x0669) || (c >= 0x06F0 && c <= 0x06F9)
        || (c >= 0xFF10 && c <= 0xFF19);
}

int pattern_index(PatternLabel label)
{
    return static_cast<int>(kPatternSymbols.find(symbol(label)));
}

PatternLabel pattern_from_symbol(char c)
{
    if (kPatternSymbols.find(c) == std::string_view::npos) {
        throw Error(ErrorKind::SchemaMismatch, std::string("unknown text pattern symbol '") + c + "'");
    }
    return static_cast<PatternLabel>(c);
}

namespace {

// digits ( [,.] digits )+
bool is_fraction(const std::u32string& cps)
{
    std::size_t i = 0;
    auto digits = [&] {
        const std::size_t start = i;
        while (i < cps.size() && is_decimal_digit(cps[i])) {
            ++i;
        }
        return i > start;
    };
    if (!digits()) {
        return false;
    }
    int groups = 0;
    while (i < cps.size()) {
        if (cps[i] != U',' && cps[i] != U'.') {
            return false;
        }
        ++i;
        if (!digits()) {
            return false;
        }
        ++groups;
    }
    return groups > 0;
}

} // namespace

PatternLabel classify_text_pattern(std::string_view text)
{
    if (text.empty()) {
        throw Error(ErrorKind::EmptyText, "cannot classify empty text");
    }
    const auto cps = decode_utf8(text);
    const bool all_special = std::none_of(cps.begin(), cps.end(),
        [](char32_t c) { return is_letter(c) || is_decimal_digit(c); });
    if (all_special) {
        return PatternLabel::Special;
    }
    if (std::all_of(cps.begin(), cps.end(), is_letter)) {
        return PatternLabel::Word;
    }
    if (std::all_of(cps.begin(), cps.end(), is_decimal_digit)) {
        return PatternLabel::Number;
    }
    if (is_fraction(cps)) {
        return PatternLabel::Fraction;
    }
    return PatternLabel::Mixed;
}

std::string line_block_regex(std::span<const std::string> texts)
{
    std::string out;
    for (const auto& text : texts) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out.push_back(symbol(classify_text_pattern(text)));
    }
    return out;
}

std::string line_block_regex(std::span<const Token> line_tokens)
{
    std::string out;
    for (const auto& token : line_tokens) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out.push_back(symbol(classify_text_pattern(token.text)));
    }
    return out;
}

} // namespace tabext
