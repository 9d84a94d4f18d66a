#pragma once

// Trajectory data model and the parser that turns raw model output into
// (reasoning, tool call, observation) steps.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mentor/error.hpp"

namespace mentor {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolCallOpen = "<tool_call>";
inline constexpr std::string_view kToolCallClose = "</tool_call>";
inline constexpr std::string_view kToolResponseOpen = "<tool_response>";
inline constexpr std::string_view kToolResponseClose = "</tool_response>";

/// Half-open character range [begin, end) into a source text.
struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const TextSpan&, const TextSpan&) = default;
};

struct ToolCall {
  std::string name;
  Json arguments = Json::object();  // ordered; keys unique
  TextSpan raw_span;

  friend bool operator==(const ToolCall& a, const ToolCall& b) {
    return a.name == b.name && a.arguments == b.arguments;
  }
};

enum class ErrorKind { unknown_tool, bad_arguments, domain_error, backend_error, parse_error };

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::unknown_tool: return "unknown_tool";
    case ErrorKind::bad_arguments: return "bad_arguments";
    case ErrorKind::domain_error: return "domain_error";
    case ErrorKind::backend_error: return "backend_error";
    case ErrorKind::parse_error: return "parse_error";
  }
  return "backend_error";
}

inline std::optional<ErrorKind> error_kind_from_string(std::string_view s) {
  for (ErrorKind k : {ErrorKind::unknown_tool, ErrorKind::bad_arguments, ErrorKind::domain_error,
                      ErrorKind::backend_error, ErrorKind::parse_error}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct ToolError {
  ErrorKind kind = ErrorKind::backend_error;
  std::string message;

  friend bool operator==(const ToolError&, const ToolError&) = default;
};

/// Outcome of one tool invocation. Exactly one of value/error is set.
struct Observation {
  std::optional<std::string> value;
  std::optional<ToolError> error;

  bool ok() const { return value.has_value(); }

  static Observation success(std::string v) { return Observation{std::move(v), std::nullopt}; }
  static Observation failure(ErrorKind kind, std::string message) {
    return Observation{std::nullopt, ToolError{kind, std::move(message)}};
  }

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct Step {
  std::string reasoning;
  std::optional<ToolCall> tool_call;
  std::optional<Observation> observation;
  std::optional<std::string> parse_fault;  // raw block content that failed to parse
  TextSpan block;                          // span of the <tool_call> block, if any

  bool is_call_attempt() const { return tool_call.has_value() || parse_fault.has_value(); }

  friend bool operator==(const Step& a, const Step& b) {
    return a.reasoning == b.reasoning && a.tool_call == b.tool_call &&
           a.observation == b.observation && a.parse_fault == b.parse_fault;
  }
};

struct Trajectory {
  std::vector<Step> steps;
  std::optional<std::string> final_answer;
  std::string raw_text;

  /// Number of tool-call attempts (well-formed or faulty).
  std::size_t length() const {
    return static_cast<std::size_t>(
        std::count_if(steps.begin(), steps.end(), [](const Step& s) { return s.is_call_attempt(); }));
  }

  std::size_t well_formed_calls() const {
    return static_cast<std::size_t>(std::count_if(
        steps.begin(), steps.end(), [](const Step& s) { return s.tool_call.has_value(); }));
  }

  std::size_t parse_faults() const {
    return static_cast<std::size_t>(std::count_if(
        steps.begin(), steps.end(), [](const Step& s) { return s.parse_fault.has_value(); }));
  }
};

struct ReferenceRecord {
  std::string question_id;
  std::string question;
  std::string ground_truth;
  Trajectory teacher_trajectory;
  std::string teacher_answer;
};

/// Content of the last `\boxed{...}` occurrence, brace-balanced. Absent
/// when there is no occurrence or its braces never close.
inline std::optional<std::string> extract_answer(std::string_view text) {
  constexpr std::string_view kOpen = "\\boxed{";
  std::size_t at = text.rfind(kOpen);
  if (at == std::string_view::npos) return std::nullopt;
  std::size_t open = at + kOpen.size() - 1;
  int depth = 0;
  for (std::size_t i = open; i < text.size(); ++i) {
    if (text[i] == '{') {
      ++depth;
    } else if (text[i] == '}' && --depth == 0) {
      return std::string(text.substr(open + 1, i - open - 1));
    }
  }
  return std::nullopt;
}

namespace detail {

inline bool all_space(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

inline std::string_view trim_view(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::optional<ToolCall> parse_call_payload(std::string_view payload) {
  Json j = Json::parse(trim_view(payload), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto name = j.find("name");
  auto args = j.find("arguments");
  if (name == j.end() || !name->is_string() || args == j.end() || !args->is_object()) {
    return std::nullopt;
  }
  ToolCall call;
  call.name = name->get<std::string>();
  if (call.name.empty()) return std::nullopt;
  call.arguments = *args;
  return call;
}

}  // namespace detail

inline Json observation_to_json(const Observation& obs) {
  Json j = Json::object();
  j["ok"] = obs.ok();
  if (obs.ok()) {
    j["value"] = *obs.value;
  } else {
    const ToolError& e = *obs.error;
    j["error"] = Json{{"kind", std::string(to_string(e.kind))}, {"message", e.message}};
  }
  return j;
}

/// Accepts the {"ok", "value"|"error"} schema; throws mentor::Error otherwise.
inline Observation observation_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("ok") || !j["ok"].is_boolean()) {
    throw Error("bad_record", "observation requires boolean field 'ok'");
  }
  if (j["ok"].get<bool>()) {
    if (!j.contains("value") || !j["value"].is_string()) {
      throw Error("bad_record", "successful observation requires string 'value'");
    }
    return Observation::success(j["value"].get<std::string>());
  }
  const Json* err = j.contains("error") ? &j["error"] : nullptr;
  if (err == nullptr || !err->is_object()) {
    throw Error("bad_record", "failed observation requires object 'error'");
  }
  auto kind = error_kind_from_string(err->value("kind", std::string{}));
  if (!kind) throw Error("bad_record", "unknown observation error kind");
  return Observation::failure(*kind, err->value("message", std::string{}));
}

inline Observation parse_observation_payload(std::string_view payload) {
  Json j = Json::parse(detail::trim_view(payload), nullptr, false);
  if (!j.is_discarded()) {
    try {
      return observation_from_json(j);
    } catch (const Error&) {
    }
  }
  return Observation::success(std::string(detail::trim_view(payload)));
}

/// Parses raw model output. Total: malformed tool-call blocks become
/// parse_fault steps. A `<tool_response>` block directly after a call
/// (whitespace aside) becomes that step's observation; anywhere else it is
/// ordinary text.
inline Trajectory parse_trajectory(std::string_view text) {
  Trajectory traj;
  traj.raw_text = std::string(text);

  std::size_t reasoning_start = 0;
  std::size_t scan = 0;
  while (scan < text.size()) {
    std::size_t call_at = text.find(kToolCallOpen, scan);
    std::size_t resp_at = text.find(kToolResponseOpen, scan);
    if (call_at == std::string_view::npos && resp_at == std::string_view::npos) break;

    if (call_at < resp_at) {
      Step step;
      step.reasoning = std::string(text.substr(reasoning_start, call_at - reasoning_start));
      std::size_t body = call_at + kToolCallOpen.size();
      std::size_t close = text.find(kToolCallClose, body);
      std::size_t block_end =
          close == std::string_view::npos ? text.size() : close + kToolCallClose.size();
      std::string_view payload =
          text.substr(body, (close == std::string_view::npos ? text.size() : close) - body);
      step.block = TextSpan{call_at, block_end};
      if (auto call = detail::parse_call_payload(payload); call && close != std::string_view::npos) {
        call->raw_span = step.block;
        step.tool_call = std::move(*call);
      } else {
        step.parse_fault = std::string(payload);
      }
      traj.steps.push_back(std::move(step));
      reasoning_start = scan = block_end;
      continue;
    }

    std::size_t body = resp_at + kToolResponseOpen.size();
    std::size_t close = text.find(kToolResponseClose, body);
    bool attachable = close != std::string_view::npos && !traj.steps.empty() &&
                      traj.steps.back().is_call_attempt() && !traj.steps.back().observation &&
                      detail::all_space(text.substr(reasoning_start, resp_at - reasoning_start));
    if (attachable) {
      traj.steps.back().observation = parse_observation_payload(text.substr(body, close - body));
      reasoning_start = scan = close + kToolResponseClose.size();
    } else {
      scan = close == std::string_view::npos ? text.size() : close + kToolResponseClose.size();
    }
  }

  std::string_view trailing = text.substr(std::min(reasoning_start, text.size()));
  if (!detail::all_space(trailing)) {
    Step step;
    step.reasoning = std::string(trailing);
    traj.steps.push_back(std::move(step));
  }
  traj.final_answer = extract_answer(text);
  return traj;
}

/// Renders a trajectory back to raw text such that parse_trajectory
/// recovers the same steps.
inline std::string serialize_trajectory(const Trajectory& traj) {
  std::string out;
  for (const Step& step : traj.steps) {
    out += step.reasoning;
    if (step.tool_call) {
      Json payload{{"name", step.tool_call->name}, {"arguments", step.tool_call->arguments}};
      out += kToolCallOpen;
      out += payload.dump();
      out += kToolCallClose;
    } else if (step.parse_fault) {
      out += kToolCallOpen;
      out += *step.parse_fault;
      out += kToolCallClose;
    }
    if (step.observation) {
      out += kToolResponseOpen;
      out += observation_to_json(*step.observation).dump();
      out += kToolResponseClose;
    }
  }
  return out;
}

/// Distinct tool names over well-formed calls.
inline std::set<std::string> tool_name_set(const Trajectory& traj) {
  std::set<std::string> names;
  for (const Step& s : traj.steps) {
    if (s.tool_call) names.insert(s.tool_call->name);
  }
  return names;
}

/// Normalized histogram over tool names. Empty when there are no calls.
struct ToolUsageDistribution {
  std::map<std::string, double> probabilities;

  bool empty() const { return probabilities.empty(); }

  double at(const std::string& name) const {
    auto it = probabilities.find(name);
    return it == probabilities.end() ? 0.0 : it->second;
  }

  std::vector<std::string> support() const {
    std::vector<std::string> names;
    names.reserve(probabilities.size());
    for (const auto& [name, p] : probabilities) names.push_back(name);
    return names;
  }

  static ToolUsageDistribution from_counts(const std::map<std::string, std::size_t>& counts) {
    std::size_t total = 0;
    for (const auto& [name, c] : counts) total += c;
    ToolUsageDistribution d;
    if (total == 0) return d;
    for (const auto& [name, c] : counts) {
      if (c > 0) d.probabilities[name] = static_cast<double>(c) / static_cast<double>(total);
    }
    return d;
  }
};

inline ToolUsageDistribution tool_name_histogram(std::span<const Trajectory> trajs) {
  std::map<std::string, std::size_t> counts;
  for (const Trajectory& t : trajs) {
    for (const Step& s : t.steps) {
      if (s.tool_call) ++counts[s.tool_call->name];
    }
  }
  return ToolUsageDistribution::from_counts(counts);
}

}  // namespace mentor
