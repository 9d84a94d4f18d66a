#pragma once

// Evaluation metrics over trajectory collections: alignment score between
// tool-usage distributions, invalid-call and tool-usage rates, tool calls per
// sample, exact match, and per-tool frequency deltas.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mentor/error.hpp"
#include "mentor/normalize.hpp"
#include "mentor/trajectory.hpp"

namespace mentor {

namespace detail {

// (1+x)ln(1+x) + (1-x)ln(1-x), even in x. Near zero the closed form
// cancels, so the series sum_k x^(2k) / (k(2k-1)) is used instead.
inline double js_pair_term(double x) {
  double ax = std::abs(x);
  if (ax >= 1.0) return 2.0 * std::numbers::ln2;
  if (ax >= 0.125) return (1.0 + ax) * std::log1p(ax) + (1.0 - ax) * std::log1p(-ax);
  double x2 = ax * ax;
  double power = x2;
  double sum = 0.0;
  for (int k = 1; k < 40; ++k) {
    double term = power / (k * (2.0 * k - 1.0));
    sum += term;
    if (term < sum * 1e-18) break;
    power *= x2;
  }
  return sum;
}

}  // namespace detail

/// 1 - sqrt(JS divergence) in bits. Names missing from one distribution
/// get probability 0. Exactly one empty distribution scores 0; both empty
/// throws Error("undefined_alignment").
inline double alignment_score(const ToolUsageDistribution& p, const ToolUsageDistribution& q) {
  if (p.empty() && q.empty()) throw Error("undefined_alignment", "both tool distributions are empty");
  if (p.empty() || q.empty()) return 0.0;
  std::set<std::string> support;
  for (const auto& [n, v] : p.probabilities) support.insert(n);
  for (const auto& [n, v] : q.probabilities) support.insert(n);
  double divergence = 0.0;
  for (const auto& name : support) {
    double pi = p.at(name);
    double qi = q.at(name);
    double m = 0.5 * (pi + qi);
    if (m == 0.0) continue;
    double x = 0.5 * std::abs(pi - qi) / m;
    divergence += 0.5 * m * detail::js_pair_term(x) / std::numbers::ln2;
  }
  double distance = std::sqrt(std::clamp(divergence, 0.0, 1.0));
  return std::clamp(1.0 - distance, 0.0, 1.0);
}

struct CallCounts {
  std::size_t attempts = 0;
  std::size_t invalid = 0;
};

inline CallCounts count_calls(std::span<const Trajectory> trajs) {
  CallCounts c;
  for (const Trajectory& t : trajs) {
    for (const Step& s : t.steps) {
      if (!s.is_call_attempt()) continue;
      ++c.attempts;
      if (s.parse_fault || !(s.observation && s.observation->ok())) ++c.invalid;
    }
  }
  return c;
}

/// Invalid attempts (parse faults or failed executions) over all attempts.
/// Zero attempts -> 0.
inline double invalid_call_rate(std::span<const Trajectory> trajs) {
  CallCounts c = count_calls(trajs);
  return c.attempts == 0 ? 0.0 : static_cast<double>(c.invalid) / static_cast<double>(c.attempts);
}

/// Fraction of trajectories with at least one invalid attempt.
inline double invalid_trajectory_rate(std::span<const Trajectory> trajs) {
  if (trajs.empty()) return 0.0;
  std::size_t bad = 0;
  for (const Trajectory& t : trajs) {
    if (count_calls(std::span<const Trajectory>(&t, 1)).invalid > 0) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(trajs.size());
}

/// Fraction of trajectories with at least one well-formed call.
inline double tool_usage_rate(std::span<const Trajectory> trajs) {
  if (trajs.empty()) return 0.0;
  auto users = std::count_if(trajs.begin(), trajs.end(),
                             [](const Trajectory& t) { return t.well_formed_calls() > 0; });
  return static_cast<double>(users) / static_cast<double>(trajs.size());
}

struct FiveNumberSummary {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double lower_fence = 0, upper_fence = 0;
  std::vector<double> outliers;
};

/// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double prob) {
  double pos = prob * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline FiveNumberSummary summarize(std::vector<double> values) {
  if (values.empty()) throw Error("empty_sample", "cannot summarize an empty sample");
  std::sort(values.begin(), values.end());
  FiveNumberSummary s;
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  double iqr = s.q3 - s.q1;
  s.lower_fence = s.q1 - 1.5 * iqr;
  s.upper_fence = s.q3 + 1.5 * iqr;
  for (double v : values) {
    if (v < s.lower_fence || v > s.upper_fence) s.outliers.push_back(v);
  }
  return s;
}

/// Box-plot summary of well-formed calls per trajectory (1.5 IQR outliers).
inline FiveNumberSummary calls_per_sample(std::span<const Trajectory> trajs) {
  std::vector<double> counts;
  counts.reserve(trajs.size());
  for (const Trajectory& t : trajs) counts.push_back(static_cast<double>(t.well_formed_calls()));
  return summarize(std::move(counts));
}

inline double exact_match(std::span<const std::string> predictions,
                          std::span<const std::vector<std::string>> golds) {
  if (predictions.size() != golds.size()) {
    throw Error("shape_mismatch", "predictions and golds differ in length");
  }
  if (predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    std::string pred = normalize_answer(predictions[i]);
    for (const auto& g : golds[i]) {
      if (normalize_answer(g) == pred) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

/// (student - teacher) probability in percentage points over the union support.
inline std::map<std::string, double> per_tool_delta(const ToolUsageDistribution& student,
                                                    const ToolUsageDistribution& teacher) {
  std::map<std::string, double> delta;
  for (const auto& [n, v] : student.probabilities) delta[n] = 0.0;
  for (const auto& [n, v] : teacher.probabilities) delta[n] = 0.0;
  for (auto& [n, d] : delta) d = (student.at(n) - teacher.at(n)) * 100.0;
  return delta;
}

struct MetricsReport {
  double em = 0.0;
  double alignment = 0.0;
  double invalid_rate = 0.0;
  double usage_rate = 0.0;
  std::map<std::string, double> per_tool_delta;
  ToolUsageDistribution student_distribution;
  ToolUsageDistribution teacher_distribution;
  std::optional<FiveNumberSummary> student_calls;
  std::optional<FiveNumberSummary> teacher_calls;
};

}  // namespace mentor
