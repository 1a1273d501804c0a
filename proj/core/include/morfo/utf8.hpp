#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace morfo::utf8 {

// Decodes a UTF-8 string into code points. Throws data_error on malformed
// input (overlong sequences are accepted as-is by length, stray continuation
// bytes are not).
std::vector<char32_t> decode(std::string_view s);

std::string encode(const std::vector<char32_t>& cps);
void append(std::string& out, char32_t cp);

// Case and class predicates over the blocks this project cares about:
// ASCII, Latin-1, Greek and Coptic, Cyrillic. Code points outside those
// blocks are treated as caseless non-letters.
char32_t to_lower(char32_t cp);
bool is_upper(char32_t cp);
bool is_lower(char32_t cp);
bool is_letter(char32_t cp);
bool is_digit(char32_t cp);

std::string lowercase(std::string_view s);

// Number of code points; throws on malformed input.
std::size_t length(std::string_view s);

}  // namespace morfo::utf8
