#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabext/ingest.hpp"

namespace tabext {

/// Five-symbol classification of a token's characters.
enum class PatternLabel : char {
    Special = '?',  // only non-alphanumeric characters
    Word = 'W',     // only letters
    Number = 'N',   // only decimal digits
    Fraction = 'F', // digits with at least one ',' or '.' group separator
    Mixed = 'A',    // anything else
};

inline constexpr std::string_view kPatternSymbols = "?WNFA";

inline char symbol(PatternLabel label) { return static_cast<char>(label); }

/// Position of the label within kPatternSymbols (one-hot index).
int pattern_index(PatternLabel label);

/// Inverse of symbol(); throws SchemaMismatch for anything outside the alphabet.
PatternLabel pattern_from_symbol(char c);

/// Decodes UTF-8; malformed sequences become U+FFFD.
std::u32string decode_utf8(std::string_view text);

/// Number of code points.
std::size_t utf8_length(std::string_view text);

bool is_letter(char32_t c);
bool is_decimal_digit(char32_t c);

/// Checks '?', 'W', 'N', 'F' in that order and falls back to 'A'.
/// Throws EmptyText for an empty string.
PatternLabel classify_text_pattern(std::string_view text);

/// Space-joined pattern symbols of the tokens of one line, in order.
std::string line_block_regex(std::span<const Token> line_tokens);
std::string line_block_regex(std::span<const std::string> texts);

} // namespace tabext
