#pragma once

// Line-delimited JSON trajectory log: the interchange format between the
// teacher generator, reward scoring, training and analysis.
//
//   {"question_id", "role": "teacher"|"student", "raw_text",
//    "steps": [{"reasoning", "tool_call": {name, arguments}|null,
//               "observation": {ok, value|error}|null, "parse_fault"|null}],
//    "final_answer"|null, ...optional "question", "ground_truth",
//    "rollout_index", "reward"}

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mentor/error.hpp"
#include "mentor/trajectory.hpp"

namespace mentor {

enum class Role { teacher, student };

inline std::string_view to_string(Role r) { return r == Role::teacher ? "teacher" : "student"; }

struct TrajectoryRecord {
  std::string question_id;
  Role role = Role::student;
  Trajectory trajectory;
  std::optional<std::string> question;
  std::optional<std::string> ground_truth;
  std::optional<int> rollout_index;
  std::optional<Json> reward;
};

inline Json step_to_json(const Step& s) {
  Json j = Json::object();
  j["reasoning"] = s.reasoning;
  j["tool_call"] = s.tool_call
                       ? Json{{"name", s.tool_call->name}, {"arguments", s.tool_call->arguments}}
                       : Json(nullptr);
  j["observation"] = s.observation ? observation_to_json(*s.observation) : Json(nullptr);
  j["parse_fault"] = s.parse_fault ? Json(*s.parse_fault) : Json(nullptr);
  return j;
}

inline Step step_from_json(const Json& j) {
  if (!j.is_object()) throw Error("bad_record", "step must be an object");
  Step s;
  s.reasoning = j.value("reasoning", std::string{});
  if (j.contains("tool_call") && !j["tool_call"].is_null()) {
    const Json& c = j["tool_call"];
    if (!c.is_object() || !c.contains("name") || !c["name"].is_string() ||
        c["name"].get<std::string>().empty()) {
      throw Error("bad_record", "tool_call requires non-empty string 'name'");
    }
    ToolCall call;
    call.name = c["name"].get<std::string>();
    call.arguments = c.value("arguments", Json::object());
    if (!call.arguments.is_object()) throw Error("bad_record", "tool_call.arguments must be an object");
    s.tool_call = std::move(call);
  }
  if (j.contains("parse_fault") && !j["parse_fault"].is_null()) {
    if (!j["parse_fault"].is_string()) throw Error("bad_record", "parse_fault must be a string");
    if (s.tool_call) throw Error("bad_record", "parse_fault and tool_call are mutually exclusive");
    s.parse_fault = j["parse_fault"].get<std::string>();
  }
  if (j.contains("observation") && !j["observation"].is_null()) {
    if (!s.is_call_attempt()) throw Error("bad_record", "observation without a tool call");
    s.observation = observation_from_json(j["observation"]);
  }
  return s;
}

inline Json record_to_json(const TrajectoryRecord& r) {
  Json j = Json::object();
  j["question_id"] = r.question_id;
  j["role"] = std::string(to_string(r.role));
  if (r.question) j["question"] = *r.question;
  if (r.ground_truth) j["ground_truth"] = *r.ground_truth;
  if (r.rollout_index) j["rollout_index"] = *r.rollout_index;
  j["raw_text"] = r.trajectory.raw_text;
  Json steps = Json::array();
  for (const Step& s : r.trajectory.steps) steps.push_back(step_to_json(s));
  j["steps"] = std::move(steps);
  j["final_answer"] = r.trajectory.final_answer ? Json(*r.trajectory.final_answer) : Json(nullptr);
  if (r.reward) j["reward"] = *r.reward;
  return j;
}

/// Decodes one record. When "steps" is absent the raw text is re-parsed.
inline TrajectoryRecord record_from_json(const Json& j) {
  if (!j.is_object()) throw Error("bad_record", "record must be an object");
  if (!j.contains("question_id") || !j["question_id"].is_string()) {
    throw Error("bad_record", "record requires string 'question_id'");
  }
  TrajectoryRecord r;
  r.question_id = j["question_id"].get<std::string>();
  std::string role = j.value("role", std::string{"teacher"});
  if (role == "teacher") {
    r.role = Role::teacher;
  } else if (role == "student") {
    r.role = Role::student;
  } else {
    throw Error("bad_record", "role must be 'teacher' or 'student'");
  }
  auto opt_string = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) throw Error("bad_record", std::string(key) + " must be a string");
    return j[key].get<std::string>();
  };
  r.question = opt_string("question");
  r.ground_truth = opt_string("ground_truth");
  if (j.contains("rollout_index") && j["rollout_index"].is_number_integer()) {
    r.rollout_index = j["rollout_index"].get<int>();
  }
  if (j.contains("reward") && !j["reward"].is_null()) r.reward = j["reward"];

  std::string raw = opt_string("raw_text").value_or("");
  if (j.contains("steps") && j["steps"].is_array()) {
    r.trajectory.raw_text = raw;
    for (const Json& s : j["steps"]) r.trajectory.steps.push_back(step_from_json(s));
    r.trajectory.final_answer = opt_string("final_answer");
  } else {
    r.trajectory = parse_trajectory(raw);
  }
  return r;
}

struct LogReadResult {
  std::vector<TrajectoryRecord> records;
  std::size_t malformed_lines = 0;
};

/// Reads a JSONL log. Malformed lines are reported through `warn` and
/// skipped; blank lines are ignored.
inline LogReadResult read_trajectory_log(
    const std::string& path,
    const std::function<void(const std::string&)>& warn = [](const std::string& m) {
      std::cerr << "warning: " << m << '\n';
    }) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open trajectory log '" + path + "'");
  LogReadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::all_space(line)) continue;
    try {
      Json j = Json::parse(line);
      result.records.push_back(record_from_json(j));
    } catch (const std::exception& e) {
      ++result.malformed_lines;
      warn(path + ":" + std::to_string(line_no) + ": skipped malformed record: " + e.what());
    }
  }
  return result;
}

inline void write_trajectory_log(const std::string& path,
                                 const std::vector<TrajectoryRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write trajectory log '" + path + "'");
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

}  // namespace mentor
