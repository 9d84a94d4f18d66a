#pragma once

// Enumerated reward cases: every tool-name subset of {add, multiply, sqrt}
// for student and teacher, answer match or mismatch, and three validity
// patterns. Trajectories are produced as raw model text with responses from
// a real Sandbox, then parsed, so the whole scoring path is exercised.

#include <set>
#include <string>
#include <vector>

#include "mentor/reward.hpp"
#include "mentor/sandbox.hpp"
#include "mentor/trajectory.hpp"
#include "support/oracles.hpp"

namespace cases {

inline const std::vector<std::string>& base_tools() {
  static const std::vector<std::string> t{"add", "multiply", "sqrt"};
  return t;
}

inline std::set<std::string> subset(unsigned mask) {
  std::set<std::string> s;
  for (unsigned i = 0; i < 3; ++i) {
    if (mask & (1u << i)) s.insert(base_tools()[i]);
  }
  return s;
}

inline mentor::Json good_args(const std::string& name) {
  if (name == "sqrt") return {{"number", 16}};
  return {{"firstNumber", 2}, {"secondNumber", 3}};
}

inline mentor::Json bad_args(const std::string& name) {
  if (name == "sqrt") return {{"number", -4}};
  return {{"firstNumber", 2}};
}

inline std::string call_text(const mentor::Sandbox& sb, const std::string& name, const mentor::Json& args) {
  mentor::Json call{{"name", name}, {"arguments", args}};
  mentor::ExecutionResult r = sb.execute({name, args});
  return "I will call " + name + ".\n<tool_call>" + call.dump() + "</tool_call>\n<tool_response>" +
         mentor::observation_to_json(r).dump() + "</tool_response>\n";
}

struct Case {
  unsigned student_mask = 0;
  unsigned teacher_mask = 0;
  bool answer_match = false;
  oracle::Validity validity = oracle::Validity::all_valid;
  mentor::Trajectory student;
  mentor::ReferenceRecord reference;
  std::set<std::string> student_names;  // as written into the text
  std::set<std::string> teacher_names;
  bool has_well_formed_call = false;
};

inline std::vector<Case> enumerate(const mentor::Sandbox& sb) {
  using oracle::Validity;
  std::vector<Case> out;
  for (unsigned tm = 0; tm < 8; ++tm) {
    std::string teacher_text;
    for (const auto& n : subset(tm)) teacher_text += call_text(sb, n, good_args(n));
    teacher_text += "The answer is \\boxed{5}.";
    mentor::ReferenceRecord ref;
    ref.question_id = "q";
    ref.question = "What is 2+3?";
    ref.ground_truth = "5";
    ref.teacher_trajectory = mentor::parse_trajectory(teacher_text);
    ref.teacher_answer = "5";
    for (unsigned sm = 0; sm < 8; ++sm) {
      for (bool match : {true, false}) {
        for (Validity v : {Validity::all_valid, Validity::one_invalid, Validity::one_parse_fault}) {
          Case c;
          c.student_mask = sm;
          c.teacher_mask = tm;
          c.answer_match = match;
          c.validity = v;
          c.student_names = subset(sm);
          c.teacher_names = subset(tm);
          std::string text;
          bool invalid_done = false;
          for (const auto& n : c.student_names) {
            bool make_bad = v == Validity::one_invalid && !invalid_done;
            text += call_text(sb, n, make_bad ? bad_args(n) : good_args(n));
            invalid_done = invalid_done || make_bad;
          }
          if (v == Validity::one_invalid && !invalid_done) {
            text += call_text(sb, "sqrt", bad_args("sqrt"));
            c.student_names.insert("sqrt");
          }
          if (v == Validity::one_parse_fault) text += "<tool_call>{\"name\": add}</tool_call>\n";
          c.has_well_formed_call = !c.student_names.empty();
          text += match ? "So \\boxed{5}." : "So \\boxed{6}.";
          c.student = mentor::parse_trajectory(text);
          c.reference = ref;
          out.push_back(std::move(c));
        }
      }
    }
  }
  return out;
}

inline int setting_number(mentor::RewardSetting s) { return static_cast<int>(s) + 1; }

inline const std::vector<mentor::RewardSetting>& all_settings() {
  using mentor::RewardSetting;
  static const std::vector<RewardSetting> s{RewardSetting::S1_sparse, RewardSetting::S2_tool_format,
                                            RewardSetting::S3_validation, RewardSetting::S4_f1_alignment,
                                            RewardSetting::S5_full};
  return s;
}

inline double expected_total(const Case& c, mentor::RewardSetting s, const mentor::RewardWeights& w) {
  return oracle::reward_oracle(setting_number(s), w.correctness, w.alignment, w.validation, c.student_names,
                               c.teacher_names, c.answer_match, c.validity, c.has_well_formed_call);
}

}  // namespace cases
