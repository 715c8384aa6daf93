#include "mmrag/answer_match.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>

#include "mmrag/text.hpp"

namespace mmrag {

namespace {

bool is_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<double> parse_number(std::string_view raw) {
  std::string s = trim(raw);
  // thousands separators
  std::erase(s, ',');
  if (s.empty()) return std::nullopt;
  const char* begin = s.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end != begin + s.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

struct YearRange {
  int lo = 0;
  int hi = 0;
};

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (const char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c)) == 0) return false;
  }
  return true;
}

// "YYYY-YYYY" with a hyphen, en dash, or em dash separator.
std::optional<YearRange> parse_year_range(std::string_view raw) {
  const std::string s = trim(raw);
  static constexpr std::string_view kDashes[] = {"-", "–", "—"};
  for (const std::string_view dash : kDashes) {
    const std::size_t pos = s.find(dash);
    if (pos == std::string::npos) continue;
    const std::string left = trim(std::string_view(s).substr(0, pos));
    const std::string right = trim(std::string_view(s).substr(pos + dash.size()));
    if (!all_digits(left) || !all_digits(right)) continue;
    if (left.size() < 3 || left.size() > 4 || right.size() < 3 || right.size() > 4) {
      continue;
    }
    YearRange range;
    range.lo = std::atoi(left.c_str());
    range.hi = std::atoi(right.c_str());
    if (range.lo > range.hi) std::swap(range.lo, range.hi);
    return range;
  }
  return std::nullopt;
}

bool relaxed_numeric_match(std::string_view predicted, std::string_view gold) {
  const auto pred_range = parse_year_range(predicted);
  const auto gold_range = parse_year_range(gold);
  const auto pred_num = parse_number(predicted);
  const auto gold_num = parse_number(gold);

  if (gold_range && pred_num) {
    const double v = *pred_num;
    return v >= gold_range->lo && v <= gold_range->hi;
  }
  if (pred_range && gold_num) {
    const double v = *gold_num;
    return v >= pred_range->lo && v <= pred_range->hi;
  }
  if (pred_range && gold_range) {
    const bool pred_in_gold =
        pred_range->lo >= gold_range->lo && pred_range->hi <= gold_range->hi;
    const bool gold_in_pred =
        gold_range->lo >= pred_range->lo && gold_range->hi <= pred_range->hi;
    return pred_in_gold || gold_in_pred;
  }
  if (pred_num && gold_num) {
    if (*gold_num == 0.0) return *pred_num == 0.0;
    return std::abs(*pred_num - *gold_num) <= 0.1 * std::abs(*gold_num);
  }
  return false;
}

}  // namespace

std::string normalize_answer(std::string_view answer) {
  std::string spaced;
  spaced.reserve(answer.size());
  for (const char c : answer) {
    spaced.push_back(is_punct(c) ? ' ' : c);
  }
  const std::string lowered = ascii_lower(spaced);
  std::string out;
  for (const std::string_view token : split_whitespace(lowered)) {
    if (token == "a" || token == "an" || token == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

bool answers_match(std::string_view predicted, std::string_view gold,
                   AccuracyMode mode) {
  const std::string p = normalize_answer(predicted);
  const std::string g = normalize_answer(gold);
  if (!g.empty() && p == g) return true;
  if (mode == AccuracyMode::kStandard) return false;
  return relaxed_numeric_match(predicted, gold);
}

}  // namespace mmrag
