#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "mentor/trajectory.hpp"
#include "mentor/trajectory_log.hpp"
#include "support/oracles.hpp"

using namespace mentor;

namespace {

const std::string kAddCall = R"(<tool_call>{"name":"add","arguments":{"firstNumber":2,"secondNumber":3}}</tool_call>)";

// Random model-like text assembled from a fixed vocabulary of fragments.
std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces{
      "Let me think. ",
      "I should add these numbers.\n",
      kAddCall,
      R"(<tool_call>{"name":"sqrt","arguments":{"number":16}}</tool_call>)",
      R"(<tool_call>{"name": add}</tool_call>)",
      R"(<tool_call>[1,2]</tool_call>)",
      R"(<tool_call>{"name":"","arguments":{}}</tool_call>)",
      R"(<tool_call>{"name":"multiply","arguments":"x"}</tool_call>)",
      R"(<tool_response>{"ok":true,"value":"5"}</tool_response>)",
      R"(<tool_response>{"ok":false,"error":{"kind":"domain_error","message":"division by zero"}}</tool_response>)",
      "<tool_response>plain text result</tool_response>",
      "\n",
      "  ",
      "\\boxed{5}",
      "\\boxed{\\frac{1}{2}}",
      "\\boxed{",
      "}",
      "{",
      "The answer is ",
      "<tool_call>",
      "</tool_call>",
  };
  std::uniform_int_distribution<std::size_t> len(0, 12), pick(0, pieces.size() - 1);
  std::string s;
  for (std::size_t n = len(rng); n > 0; --n) s += pieces[pick(rng)];
  return s;
}

}  // namespace

TEST(ParseTrajectory, SingleWellFormedCall) {
  Trajectory t = parse_trajectory(kAddCall);
  ASSERT_EQ(t.steps.size(), 1u);
  ASSERT_TRUE(t.steps[0].tool_call.has_value());
  EXPECT_EQ(t.steps[0].tool_call->name, "add");
  EXPECT_EQ(t.steps[0].tool_call->arguments["firstNumber"], 2);
  EXPECT_EQ(t.length(), 1u);
  EXPECT_FALSE(t.final_answer.has_value());
}

TEST(ParseTrajectory, EmptyText) {
  Trajectory t = parse_trajectory("");
  EXPECT_TRUE(t.steps.empty());
  EXPECT_FALSE(t.final_answer.has_value());
  EXPECT_EQ(t.length(), 0u);
}

TEST(ParseTrajectory, UnquotedNameIsParseFault) {
  Trajectory t = parse_trajectory(R"(<tool_call>{"name": add}</tool_call>)");
  ASSERT_EQ(t.steps.size(), 1u);
  EXPECT_TRUE(t.steps[0].parse_fault.has_value());
  EXPECT_FALSE(t.steps[0].tool_call.has_value());
  EXPECT_EQ(t.length(), 1u);
  EXPECT_EQ(oracle::ref_parse(R"(<tool_call>{"name": add}</tool_call>)").calls.at(0).fault, true);
}

TEST(ParseTrajectory, ReasoningAttachesToFollowingStepAndTrailingTextBecomesAnswerStep) {
  std::string text = "First I add. " + kAddCall + R"(<tool_response>{"ok":true,"value":"5"}</tool_response>)" +
                     " So the answer is \\boxed{5}.";
  Trajectory t = parse_trajectory(text);
  ASSERT_EQ(t.steps.size(), 2u);
  EXPECT_EQ(t.steps[0].reasoning, "First I add. ");
  ASSERT_TRUE(t.steps[0].observation.has_value());
  EXPECT_EQ(t.steps[0].observation->value, "5");
  EXPECT_FALSE(t.steps[1].is_call_attempt());
  EXPECT_EQ(t.steps[1].reasoning, " So the answer is \\boxed{5}.");
  EXPECT_EQ(t.final_answer, "5");
}

TEST(ParseTrajectory, UnclosedBlockIsFault) {
  Trajectory t = parse_trajectory(R"(<tool_call>{"name":"add","arguments":{}})");
  ASSERT_EQ(t.steps.size(), 1u);
  EXPECT_TRUE(t.steps[0].parse_fault.has_value());
}

TEST(ParseTrajectory, ResponseWithoutCallIsText) {
  Trajectory t = parse_trajectory(R"(hello <tool_response>{"ok":true,"value":"1"}</tool_response>)");
  ASSERT_EQ(t.steps.size(), 1u);
  EXPECT_FALSE(t.steps[0].is_call_attempt());
  EXPECT_FALSE(t.steps[0].observation.has_value());
}

TEST(ParseTrajectory, ErrorObservationIsStructured) {
  std::string text =
      kAddCall + R"(<tool_response>{"ok":false,"error":{"kind":"unknown_tool","message":"x"}}</tool_response>)";
  Trajectory t = parse_trajectory(text);
  ASSERT_EQ(t.steps.size(), 1u);
  ASSERT_TRUE(t.steps[0].observation.has_value());
  EXPECT_FALSE(t.steps[0].observation->ok());
  EXPECT_EQ(t.steps[0].observation->error->kind, ErrorKind::unknown_tool);
}

TEST(ParseTrajectory, AgreesWithReferenceParserOnRandomText) {
  std::mt19937_64 rng(12345);
  for (int i = 0; i < 5000; ++i) {
    std::string text = random_text(rng);
    Trajectory t = parse_trajectory(text);
    oracle::RefParse ref = oracle::ref_parse(text);
    std::vector<const Step*> attempts;
    for (const auto& s : t.steps) {
      if (s.is_call_attempt()) attempts.push_back(&s);
    }
    ASSERT_EQ(attempts.size(), ref.calls.size()) << text;
    for (std::size_t k = 0; k < attempts.size(); ++k) {
      const Step& s = *attempts[k];
      const oracle::RefCall& r = ref.calls[k];
      ASSERT_EQ(s.parse_fault.has_value(), r.fault) << text;
      if (!r.fault) {
        EXPECT_EQ(s.tool_call->name, r.name) << text;
        EXPECT_EQ(nlohmann::json::parse(s.tool_call->arguments.dump()), r.arguments) << text;
      }
      EXPECT_EQ(s.observation.has_value(), r.response.has_value()) << text;
    }
    EXPECT_EQ(t.final_answer, ref.answer) << text;
    // Invariants: step structure, |set| <= L, balanced answer.
    for (const auto& s : t.steps) {
      EXPECT_FALSE(s.tool_call && s.parse_fault);
      if (s.observation) {
        EXPECT_TRUE(s.is_call_attempt());
      }
    }
    EXPECT_LE(tool_name_set(t).size(), t.length());
    if (t.final_answer) {
      int depth = 0;
      for (char c : *t.final_answer) {
        depth += c == '{' ? 1 : c == '}' ? -1 : 0;
        ASSERT_GE(depth, 0);
      }
      EXPECT_EQ(depth, 0);
    }
  }
}

TEST(ParseTrajectory, SerializeRoundTripsStructuredFields) {
  std::mt19937_64 rng(777);
  int contained = 0;
  for (int i = 0; i < 3000; ++i) {
    Trajectory t = parse_trajectory(random_text(rng));
    Trajectory again = parse_trajectory(serialize_trajectory(t));
    ASSERT_EQ(again.steps.size(), t.steps.size());
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
      EXPECT_EQ(again.steps[k].tool_call.has_value(), t.steps[k].tool_call.has_value());
      EXPECT_EQ(again.steps[k].parse_fault.has_value(), t.steps[k].parse_fault.has_value());
      if (t.steps[k].tool_call) {
        EXPECT_EQ(again.steps[k].tool_call->name, t.steps[k].tool_call->name);
        EXPECT_EQ(again.steps[k].tool_call->arguments, t.steps[k].tool_call->arguments);
      }
      EXPECT_EQ(again.steps[k].observation, t.steps[k].observation);
    }
    std::optional<std::string> in_prose;
    for (const auto& st : t.steps) {
      if (st.reasoning.find("\\boxed{") != std::string::npos) in_prose = extract_answer(st.reasoning);
    }
    if (in_prose && in_prose == t.final_answer) {
      EXPECT_EQ(again.final_answer, t.final_answer);
      ++contained;
    }
  }
  EXPECT_GT(contained, 500);
}

TEST(ExtractAnswer, Examples) {
  EXPECT_EQ(extract_answer("so \\boxed{42}"), "42");
  EXPECT_EQ(extract_answer("\\boxed{a}\\boxed{b}"), "b");
  EXPECT_EQ(extract_answer("\\boxed{\\frac{1}{2}}"), "\\frac{1}{2}");
  EXPECT_EQ(extract_answer("\\boxed{\\frac{1}{2}}"), oracle::ref_extract_answer("\\boxed{\\frac{1}{2}}"));
  EXPECT_FALSE(extract_answer("no answer").has_value());
  EXPECT_FALSE(extract_answer("\\boxed{unbalanced").has_value());
  EXPECT_FALSE(extract_answer("\\boxed{1} then \\boxed{2").has_value());
  EXPECT_EQ(extract_answer("\\boxed{}"), "");
}

TEST(ToolNameSet, SetSemantics) {
  std::string call_mul = R"(<tool_call>{"name":"multiply","arguments":{}}</tool_call>)";
  Trajectory t = parse_trajectory(kAddCall + call_mul + kAddCall);
  EXPECT_EQ(tool_name_set(t), (std::set<std::string>{"add", "multiply"}));
  EXPECT_TRUE(tool_name_set(parse_trajectory("just text")).empty());
  EXPECT_TRUE(tool_name_set(parse_trajectory("<tool_call>oops</tool_call>")).empty());
}

TEST(ToolNameHistogram, Examples) {
  auto call = [](const std::string& n) {
    return "<tool_call>{\"name\":\"" + n + "\",\"arguments\":{}}</tool_call>";
  };
  std::vector<Trajectory> trajs{parse_trajectory(call("add") + call("add")),
                                parse_trajectory(call("sqrt") + call("multiply"))};
  ToolUsageDistribution d = tool_name_histogram(trajs);
  EXPECT_DOUBLE_EQ(d.at("add"), 0.5);
  EXPECT_DOUBLE_EQ(d.at("sqrt"), 0.25);
  EXPECT_DOUBLE_EQ(d.at("multiply"), 0.25);
  EXPECT_DOUBLE_EQ(d.at("divide"), 0.0);

  std::vector<Trajectory> none{parse_trajectory("text"), parse_trajectory("")};
  EXPECT_TRUE(tool_name_histogram(none).empty());

  std::vector<Trajectory> one{parse_trajectory(call("modulo"))};
  EXPECT_DOUBLE_EQ(tool_name_histogram(one).at("modulo"), 1.0);
}

TEST(ToolNameHistogram, SumsToOne) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 500; ++i) {
    std::vector<Trajectory> trajs;
    for (int k = 0; k < 5; ++k) trajs.push_back(parse_trajectory(random_text(rng)));
    auto d = tool_name_histogram(trajs);
    if (d.empty()) continue;
    double sum = 0;
    for (const auto& [n, p] : d.probabilities) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(TrajectoryLog, RoundTripThroughFile) {
  std::mt19937_64 rng(5);
  std::vector<TrajectoryRecord> recs;
  for (int i = 0; i < 50; ++i) {
    TrajectoryRecord r;
    r.question_id = "q" + std::to_string(i);
    r.role = i % 2 ? Role::student : Role::teacher;
    r.trajectory = parse_trajectory(random_text(rng));
    r.ground_truth = "5";
    recs.push_back(r);
  }
  auto path = std::filesystem::temp_directory_path() / "mentor_log_roundtrip.jsonl";
  write_trajectory_log(path.string(), recs);
  LogReadResult back = read_trajectory_log(path.string(), [](const std::string&) {});
  ASSERT_EQ(back.records.size(), recs.size());
  EXPECT_EQ(back.malformed_lines, 0u);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back.records[i].question_id, recs[i].question_id);
    EXPECT_EQ(back.records[i].role, recs[i].role);
    EXPECT_EQ(back.records[i].trajectory.steps, recs[i].trajectory.steps);
    EXPECT_EQ(back.records[i].trajectory.final_answer, recs[i].trajectory.final_answer);
    EXPECT_EQ(back.records[i].trajectory.raw_text, recs[i].trajectory.raw_text);
  }
  std::filesystem::remove(path);
}

TEST(TrajectoryLog, MalformedLinesAreSkippedWithWarning) {
  auto path = std::filesystem::temp_directory_path() / "mentor_log_malformed.jsonl";
  {
    std::ofstream out(path);
    out << R"({"question_id":"a","role":"teacher","raw_text":"\\boxed{1}"})" << "\n";
    out << "not json\n\n";
    out << R"({"role":"teacher"})" << "\n";
    out << R"({"question_id":"b","role":"student","raw_text":"","steps":[{"reasoning":"","tool_call":null,"observation":{"ok":true,"value":"1"},"parse_fault":null}]})"
        << "\n";
  }
  std::vector<std::string> warnings;
  LogReadResult r = read_trajectory_log(path.string(), [&](const std::string& m) { warnings.push_back(m); });
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].trajectory.final_answer, "1");
  EXPECT_EQ(r.malformed_lines, 3u);
  EXPECT_EQ(warnings.size(), 3u);
  std::filesystem::remove(path);
}
