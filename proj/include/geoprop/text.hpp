#pragma once

#include <string>
#include <string_view>

namespace geoprop::text {

/// Full Unicode case folding of a UTF-8 string (ICU default folding).
std::string casefold(std::string_view utf8);

/// Casefold, collapse every whitespace run into a single space and trim.
std::string normalize_for_dedup(std::string_view utf8);

/// Trims ASCII and Unicode whitespace from both ends.
std::string trim(std::string_view utf8);

/// Substring match of an already folded needle inside an already folded
/// haystack. In token mode a hit must not be flanked by letters or digits.
bool contains_folded(std::string_view haystack, std::string_view needle, bool whole_token);

/// Length in code points.
std::size_t codepoint_length(std::string_view utf8);

}  // namespace geoprop::text
