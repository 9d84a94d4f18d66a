#pragma once

// Answer normalization shared by exact-match scoring, the correctness
// reward and the sandbox's numeric renderer.

#include <optional>
#include <string>
#include <string_view>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace mentor {

namespace detail {

inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

inline icu::UnicodeString trim_unicode(const icu::UnicodeString& s) {
  int32_t begin = 0;
  int32_t end = s.length();
  while (begin < end && u_isUWhiteSpace(s.char32At(begin))) begin = s.moveIndex32(begin, 1);
  while (end > begin) {
    int32_t prev = s.moveIndex32(end, -1);
    if (!u_isUWhiteSpace(s.char32At(prev))) break;
    end = prev;
  }
  return icu::UnicodeString(s, begin, end - begin);
}

inline icu::UnicodeString collapse_whitespace(const icu::UnicodeString& s) {
  icu::UnicodeString out;
  bool in_space = false;
  for (int32_t i = 0; i < s.length(); i = s.moveIndex32(i, 1)) {
    UChar32 c = s.char32At(i);
    if (u_isUWhiteSpace(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !out.isEmpty()) out.append(UChar32{' '});
    in_space = false;
    out.append(c);
  }
  return out;
}

// Index of the brace closing the one opened at `open`, or npos.
inline std::size_t matching_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '{') {
      ++depth;
    } else if (s[i] == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

inline std::string strip_enclosing_dollars(const std::string& s) {
  if (s.size() >= 2 && s.front() == '$' && s.back() == '$') return s.substr(1, s.size() - 2);
  return s;
}

inline std::string strip_enclosing_boxed(const std::string& s) {
  constexpr std::string_view kOpen = "\\boxed{";
  if (s.size() < kOpen.size() + 1 || s.compare(0, kOpen.size(), kOpen) != 0) return s;
  std::size_t close = matching_brace(s, kOpen.size() - 1);
  if (close != s.size() - 1) return s;
  return s.substr(kOpen.size(), close - kOpen.size());
}

// Removes "1,000"-style separators: a comma between a digit and a run of
// exactly three digits.
inline std::string remove_thousands_commas(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == ',' && !out.empty() && is_ascii_digit(out.back())) {
      std::size_t run = 0;
      while (i + 1 + run < s.size() && is_ascii_digit(s[i + 1 + run])) ++run;
      if (run == 3) continue;
    }
    out.push_back(s[i]);
  }
  return out;
}

inline std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

}  // namespace detail

/// Canonical rendering of a plain decimal literal: no leading plus, no
/// redundant leading zeros, no trailing fractional zeros, "0.5" not ".5",
/// and "0" for negative zero. Returns nullopt when `s` is not of the form
/// [+-]?digits[.digits] (exponents are not accepted).
inline std::optional<std::string> canonical_decimal(std::string_view s) {
  std::size_t i = 0;
  bool negative = false;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) negative = s[i++] == '-';
  std::string int_part;
  std::string frac_part;
  while (i < s.size() && detail::is_ascii_digit(s[i])) int_part.push_back(s[i++]);
  bool has_point = i < s.size() && s[i] == '.';
  if (has_point) {
    ++i;
    while (i < s.size() && detail::is_ascii_digit(s[i])) frac_part.push_back(s[i++]);
  }
  if (i != s.size() || (int_part.empty() && frac_part.empty())) return std::nullopt;

  std::size_t lead = int_part.find_first_not_of('0');
  int_part = lead == std::string::npos ? "0" : int_part.substr(lead);
  std::size_t trail = frac_part.find_last_not_of('0');
  frac_part = trail == std::string::npos ? "" : frac_part.substr(0, trail + 1);

  std::string out;
  if (negative && !(int_part == "0" && frac_part.empty())) out.push_back('-');
  out += int_part;
  if (!frac_part.empty()) out += "." + frac_part;
  return out;
}

/// Normalizes an answer string for exact-match comparison.
///
/// One pass applies: NFC, trim, strip one enclosing `$...$`, strip one
/// enclosing `\boxed{...}`, lowercase, whitespace collapse, thousands-comma
/// removal and canonical decimal rendering. Passes repeat until the string
/// stops changing, which makes the function idempotent for inputs such as
/// `$$5$$` or `\BOXED{5}`.
inline std::string normalize_answer(std::string_view input) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);

  std::string current(input);
  for (int pass = 0; pass < 32; ++pass) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(current);
    if (U_SUCCESS(status) && nfc != nullptr) {
      UErrorCode local = U_ZERO_ERROR;
      icu::UnicodeString normalized = nfc->normalize(u, local);
      if (U_SUCCESS(local)) u = normalized;
    }
    std::string s = detail::to_utf8(detail::trim_unicode(u));
    s = detail::strip_enclosing_dollars(s);
    s = detail::to_utf8(detail::trim_unicode(icu::UnicodeString::fromUTF8(s)));
    s = detail::strip_enclosing_boxed(s);

    icu::UnicodeString lowered = icu::UnicodeString::fromUTF8(s);
    lowered.toLower(icu::Locale::getRoot());
    s = detail::to_utf8(detail::collapse_whitespace(lowered));
    s = detail::remove_thousands_commas(s);
    if (auto dec = canonical_decimal(s)) s = *dec;

    if (s == current) break;
    current = std::move(s);
  }
  return current;
}

inline bool answers_match(std::string_view a, std::string_view b) {
  return normalize_answer(a) == normalize_answer(b);
}

}  // namespace mentor
