#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mmrag {

// Whitespace-separated tokens. "Token" throughout the project means
// exactly this: maximal runs of non-whitespace bytes.
std::vector<std::string_view> split_whitespace(std::string_view text);

std::size_t token_count(std::string_view text);

// ASCII lowercasing; bytes outside A-Z pass through untouched.
std::string ascii_lower(std::string_view text);

// Lowercase + collapse whitespace runs to single spaces + trim.
std::string normalize_whitespace_lower(std::string_view text);

bool contains_ci(std::string_view haystack, std::string_view needle);

}  // namespace mmrag
