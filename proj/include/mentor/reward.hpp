#pragma once

// Teacher-guided reward: correctness, teacher alignment (tool-set
// equality or its F1 relaxation), tool-format and tool-validation terms,
// combined per ablation setting.

#include <algorithm>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mentor/error.hpp"
#include "mentor/normalize.hpp"
#include "mentor/trajectory.hpp"

namespace mentor {

struct RewardWeights {
  double correctness = 1.0;
  double alignment = 0.5;
  double validation = 0.5;

  double sum() const { return correctness + alignment + validation; }

  /// Throws Error("invariant_violation") unless all weights are nonnegative
  /// and at least one is positive.
  void validate() const {
    if (correctness < 0 || alignment < 0 || validation < 0) {
      throw Error("invariant_violation", "reward weights must be nonnegative");
    }
    if (!(sum() > 0)) throw Error("invariant_violation", "reward weights must satisfy w_c + w_a + w_v > 0");
  }
};

enum class RewardSetting { S1_sparse, S2_tool_format, S3_validation, S4_f1_alignment, S5_full };

inline std::string_view to_string(RewardSetting s) {
  switch (s) {
    case RewardSetting::S1_sparse: return "S1";
    case RewardSetting::S2_tool_format: return "S2";
    case RewardSetting::S3_validation: return "S3";
    case RewardSetting::S4_f1_alignment: return "S4";
    case RewardSetting::S5_full: return "S5";
  }
  return "S5";
}

inline std::optional<RewardSetting> reward_setting_from_string(std::string_view s) {
  for (auto v : {RewardSetting::S1_sparse, RewardSetting::S2_tool_format, RewardSetting::S3_validation,
                 RewardSetting::S4_f1_alignment, RewardSetting::S5_full}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

struct RewardConfig {
  RewardSetting setting = RewardSetting::S5_full;
  RewardWeights weights;
};

struct RewardComponents {
  int r_c = 0;
  int r_a = 0;
  double r_a_f1 = 0.0;
  int r_format = 0;
  int r_v = 0;
};

struct RewardBreakdown : RewardComponents {
  double total = 0.0;
};

/// 1 iff the student's boxed answer normalizes equal to the teacher's.
inline int correctness_reward(const Trajectory& student, const ReferenceRecord& reference) {
  if (!student.final_answer) return 0;
  return normalize_answer(*student.final_answer) == normalize_answer(reference.teacher_answer) ? 1 : 0;
}

/// 1 iff the student's tool-name set equals the teacher's (both empty counts).
inline int alignment_reward_exact(const Trajectory& student, const ReferenceRecord& reference) {
  return tool_name_set(student) == tool_name_set(reference.teacher_trajectory) ? 1 : 0;
}

/// F1 between tool-name sets; both empty -> 1, exactly one empty -> 0.
inline double set_f1(const std::set<std::string>& student, const std::set<std::string>& teacher) {
  if (student.empty() && teacher.empty()) return 1.0;
  if (student.empty() || teacher.empty()) return 0.0;
  std::vector<std::string> common;
  std::set_intersection(student.begin(), student.end(), teacher.begin(), teacher.end(),
                        std::back_inserter(common));
  if (common.empty()) return 0.0;
  double precision = static_cast<double>(common.size()) / static_cast<double>(student.size());
  double recall = static_cast<double>(common.size()) / static_cast<double>(teacher.size());
  return 2.0 * precision * recall / (precision + recall);
}

inline double alignment_reward_f1(const Trajectory& student, const ReferenceRecord& reference) {
  return set_f1(tool_name_set(student), tool_name_set(reference.teacher_trajectory));
}

/// 1 iff at least one well-formed call and no parse faults.
inline int tool_format_reward(const Trajectory& student) {
  return student.well_formed_calls() > 0 && student.parse_faults() == 0 ? 1 : 0;
}

/// 1 iff no parse faults and every call has a successful observation.
/// Vacuously 1 with no calls.
inline int validation_reward(const Trajectory& student) {
  for (const Step& s : student.steps) {
    if (s.parse_fault) return 0;
    if (s.tool_call && !(s.observation && s.observation->ok())) return 0;
  }
  return 1;
}

inline double total_reward(const RewardComponents& c, const RewardConfig& config) {
  const RewardWeights& w = config.weights;
  double correctness = w.correctness * c.r_c;
  switch (config.setting) {
    case RewardSetting::S1_sparse: return correctness;
    case RewardSetting::S2_tool_format: return correctness + w.alignment * c.r_format;
    case RewardSetting::S3_validation: return correctness + w.validation * c.r_v;
    case RewardSetting::S4_f1_alignment: return correctness + w.alignment * c.r_a_f1 + w.validation * c.r_v;
    case RewardSetting::S5_full: return correctness + w.alignment * c.r_a + w.validation * c.r_v;
  }
  return correctness;
}

inline RewardBreakdown score_rollout(const Trajectory& student, const ReferenceRecord& reference,
                                     const RewardConfig& config) {
  RewardBreakdown b;
  b.r_c = correctness_reward(student, reference);
  b.r_a = alignment_reward_exact(student, reference);
  b.r_a_f1 = alignment_reward_f1(student, reference);
  b.r_format = tool_format_reward(student);
  b.r_v = validation_reward(student);
  b.total = total_reward(b, config);
  return b;
}

inline std::vector<RewardBreakdown> score_group(std::span<const Trajectory> rollouts,
                                                const ReferenceRecord& reference,
                                                const RewardConfig& config) {
  std::vector<RewardBreakdown> out;
  out.reserve(rollouts.size());
  for (const Trajectory& t : rollouts) out.push_back(score_rollout(t, reference, config));
  return out;
}

inline Json breakdown_to_json(const RewardBreakdown& b, RewardSetting setting) {
  return Json{{"setting", std::string(to_string(setting))},
              {"r_c", b.r_c},
              {"r_a", b.r_a},
              {"r_a_f1", b.r_a_f1},
              {"r_format", b.r_format},
              {"r_v", b.r_v},
              {"total", b.total}};
}

}  // namespace mentor
