#pragma once

#include <string>
#include <string_view>

namespace mmrag {

enum class AccuracyMode { kStandard, kRelaxed };

/// Canonical answer form: ASCII lowercase, punctuation replaced by
/// spaces, standalone articles (a/an/the) dropped, whitespace collapsed.
std::string normalize_answer(std::string_view answer);

/// STANDARD: equality of normalized forms. RELAXED adds, on the raw
/// trimmed strings: numeric match within +/-10% relative to the gold
/// value (gold 0 requires exact 0) and year-range containment (a
/// YYYY-YYYY range matches a year inside it; two ranges match when one
/// contains the other). These relaxed rules are a declared convention.
bool answers_match(std::string_view predicted, std::string_view gold,
                   AccuracyMode mode);

}  // namespace mmrag
