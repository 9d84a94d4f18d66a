#pragma once

// Hand-evaluated exact-match pairs. `expected` was worked out by applying
// the normalization rules manually, not by running the code.

#include <string>
#include <vector>

namespace cases {

struct EmCase {
  std::string prediction;
  std::vector<std::string> golds;
  bool expected;
  const char* what;
};

inline const std::vector<EmCase>& em_cases() {
  static const std::vector<EmCase> c{
      {"\\boxed{42}", {"42"}, true, "boxed stripped"},
      {"$\\boxed{7}$", {"7"}, true, "dollars then boxed"},
      {"\\boxed{\\frac{1}{2}}", {"\\frac{1}{2}"}, true, "nested braces kept"},
      {"\\boxed{5} ", {"5"}, true, "trailing space before strip"},
      {"\\boxed{5}.", {"5"}, false, "text after the box blocks stripping"},
      {"Paris", {"paris"}, true, "case"},
      {"NEW  YORK", {"new york"}, true, "case and whitespace collapse"},
      {"new\tyork\n", {"New York"}, true, "tabs and newlines"},
      {"1,000", {"1000"}, true, "thousands comma"},
      {"$1,000$", {"1000"}, true, "dollars and thousands comma"},
      {"1,234,567", {"1234567"}, true, "several separators"},
      {"1,00", {"100"}, false, "two-digit group is not a separator"},
      {"3, 4", {"34"}, false, "comma followed by space kept"},
      {"2.50", {"2.5"}, true, "trailing zeros"},
      {".5", {"0.5"}, true, "leading point"},
      {"+7", {"7"}, true, "leading plus"},
      {"007", {"7"}, true, "leading zeros"},
      {"-0", {"0"}, true, "negative zero"},
      {"5.0", {"5"}, true, "integral decimal"},
      {"1e3", {"1000"}, false, "exponent notation not a plain decimal"},
      {"4", {"5", "four", "4"}, true, "multi-gold membership"},
      {"Four", {"5", "four"}, true, "multi-gold with case"},
      {"6", {"5", "four"}, false, "no gold matches"},
      {"  42  ", {"42"}, true, "trim"},
      {"caf\xC3\xA9", {"cafe\xCC\x81"}, true, "NFC composes e + combining acute"},
      {"\\boxed{1,000.50}", {"1000.5"}, true, "boxed, comma and trailing zero"},
      {"", {""}, true, "empty equals empty"},
      {"", {"0"}, false, "empty is not zero"},
  };
  return c;
}

}  // namespace cases
