#pragma once

// Synthetic arithmetic environment for desk-scale training. Each question
// is "Compute a op b." and the policy is a per-question table of softmax
// decisions:
//
//   DECIDE(ctx)  which tool to call next, a malformed block, or answer
//   ARGS(tool)   how to fill the arguments
//   ANSWER       copy the last tool result or answer from memory
//
// Every decision is one policy token. Tool calls are executed through a
// ToolExecutor and their responses become masked-out observation tokens.

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <cstdio>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "mentor/error.hpp"
#include "mentor/grpo.hpp"
#include "mentor/orchestrator.hpp"
#include "mentor/sandbox.hpp"
#include "mentor/trajectory.hpp"

namespace mentor {

enum class ToyOp { add, subtract, multiply };

struct ToyQuestion {
  std::string id;
  std::string text;
  long long a = 0;
  long long b = 0;
  ToyOp op = ToyOp::add;
  std::string ground_truth;

  long long exact() const {
    switch (op) {
      case ToyOp::add: return a + b;
      case ToyOp::subtract: return a - b;
      case ToyOp::multiply: return a * b;
    }
    return 0;
  }

  /// Answer given without a tool: right for sums and differences, off by
  /// one for products.
  long long mental() const { return op == ToyOp::multiply ? exact() + 1 : exact(); }

  std::string_view tool() const {
    switch (op) {
      case ToyOp::add: return "add";
      case ToyOp::subtract: return "subtract";
      case ToyOp::multiply: return "multiply";
    }
    return "add";
  }
};

struct ToyQuestionInput {
  std::string question_id;
  std::string question;
};

namespace toy {

inline constexpr std::size_t kMathTools = 12;
inline constexpr std::size_t kUnknownTool = 12;  // "calculator", not registered
inline constexpr std::size_t kMalformed = 13;
inline constexpr std::size_t kAnswer = 14;
inline constexpr std::size_t kDecideActions = 15;
inline constexpr std::size_t kArgStates = 13;
inline constexpr std::size_t kArgActions = 4;
inline constexpr std::size_t kAnswerActions = 2;
inline constexpr std::size_t kContexts = 3;
inline constexpr std::size_t kStatesPerQuestion = kContexts + kArgStates + 1;

enum Context : std::size_t { start = 0, after_ok = 1, after_err = 2 };
enum ArgChoice : std::size_t { pair_ab = 0, pair_ba = 1, single_a = 2, junk = 3 };
enum AnswerChoice : std::size_t { copy_observation = 0, from_memory = 1 };

inline const std::vector<std::string>& tool_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& s : builtin_specs()) {
      if (s.name != "wikipedia_search") n.push_back(s.name);
    }
    n.push_back("calculator");
    return n;
  }();
  return names;
}

inline std::size_t tool_index(std::string_view name) {
  const auto& names = tool_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw Error("invalid_argument", "not a toy tool: " + std::string(name));
}

inline std::string format_int(long long v) { return std::to_string(v); }

}  // namespace toy

class ToyEnvironment {
 public:
  ToyEnvironment() = default;
  explicit ToyEnvironment(std::vector<ToyQuestion> questions) : questions_(std::move(questions)) {
    if (questions_.empty()) throw Error("invalid_argument", "toy environment needs at least one question");
  }

  /// The fixed 20-question set: 8 sums, 8 products, 4 differences.
  static ToyEnvironment standard() {
    std::vector<ToyQuestion> qs;
    for (std::size_t i = 0; i < 20; ++i) {
      long long a = 3 + static_cast<long long>((i * 7) % 11);
      long long b = 2 + static_cast<long long>((i * 5) % 9);
      ToyOp op = (i % 5 < 2) ? ToyOp::add : (i % 5 < 4) ? ToyOp::multiply : ToyOp::subtract;
      char id[16];
      std::snprintf(id, sizeof id, "toy-%02zu", i);
      qs.push_back(make_question(id, a, b, op));
    }
    return ToyEnvironment(std::move(qs));
  }

  static ToyQuestion make_question(std::string id, long long a, long long b, ToyOp op) {
    static constexpr std::array<char, 3> symbols{'+', '-', '*'};
    ToyQuestion q;
    q.id = std::move(id);
    q.a = a;
    q.b = b;
    q.op = op;
    q.text = "Compute " + toy::format_int(a) + " " + symbols[static_cast<std::size_t>(op)] + " " +
             toy::format_int(b) + ".";
    q.ground_truth = toy::format_int(q.exact());
    return q;
  }

  /// Parses "Compute <int> <+|-|*> <int>." into a question.
  static std::optional<ToyQuestion> parse_question(const std::string& id, const std::string& text) {
    static const std::regex pattern(R"(^\s*Compute\s+(-?\d{1,9})\s*([-+*])\s*(-?\d{1,9})\s*\.\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, pattern)) return std::nullopt;
    ToyOp op = m[2] == "+" ? ToyOp::add : m[2] == "-" ? ToyOp::subtract : ToyOp::multiply;
    return make_question(id, std::stoll(m[1]), std::stoll(m[3]), op);
  }

  static ToyEnvironment from_questions(const std::vector<ToyQuestionInput>& inputs) {
    std::vector<ToyQuestion> qs;
    for (const auto& in : inputs) {
      auto q = parse_question(in.question_id, in.question);
      if (!q) throw Error("bad_record", "not a toy question: '" + in.question + "'");
      qs.push_back(std::move(*q));
    }
    return ToyEnvironment(std::move(qs));
  }

  const std::vector<ToyQuestion>& questions() const { return questions_; }
  std::size_t size() const { return questions_.size(); }

  std::optional<std::size_t> index_of_text(std::string_view text) const {
    for (std::size_t i = 0; i < questions_.size(); ++i) {
      if (questions_[i].text == text) return i;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> index_of_id(std::string_view id) const {
    for (std::size_t i = 0; i < questions_.size(); ++i) {
      if (questions_[i].id == id) return i;
    }
    return std::nullopt;
  }

  SoftmaxPolicy policy() const {
    std::vector<std::size_t> counts;
    counts.reserve(questions_.size() * toy::kStatesPerQuestion);
    for (std::size_t q = 0; q < questions_.size(); ++q) {
      for (std::size_t c = 0; c < toy::kContexts; ++c) counts.push_back(toy::kDecideActions);
      for (std::size_t t = 0; t < toy::kArgStates; ++t) counts.push_back(toy::kArgActions);
      counts.push_back(toy::kAnswerActions);
    }
    return SoftmaxPolicy(std::move(counts));
  }

 private:
  std::vector<ToyQuestion> questions_;
};

enum class ToyPhase { decide, args, answer, done };

struct ToyState {
  std::size_t question = 0;
  ToyPhase phase = ToyPhase::decide;
  toy::Context context = toy::start;
  std::size_t calls = 0;
  std::size_t tool = 0;  // pending tool while in the args phase
  std::optional<std::string> last_value;
};

/// Global policy state index of a non-terminal toy state.
inline std::size_t toy_state_index(const ToyState& s) {
  std::size_t base = s.question * toy::kStatesPerQuestion;
  switch (s.phase) {
    case ToyPhase::decide: return base + s.context;
    case ToyPhase::args: return base + toy::kContexts + s.tool;
    case ToyPhase::answer: return base + toy::kContexts + toy::kArgStates;
    case ToyPhase::done: break;
  }
  throw Error("invalid_argument", "terminal toy state has no policy index");
}

inline Json toy_arguments(const ToyQuestion& q, std::size_t tool, std::size_t choice) {
  std::vector<std::string> params;
  bool list = false;
  if (tool == toy::kUnknownTool) {
    params = {"firstNumber", "secondNumber"};
  } else {
    auto spec = find_builtin(toy::tool_names().at(tool));
    for (const auto& p : spec->params) {
      params.push_back(p.name);
      list = list || p.type == ParamType::number_list;
    }
  }
  Json args = Json::object();
  auto pair = [&](long long x, long long y) {
    if (list) {
      args[params[0]] = Json::array({x, y});
    } else if (params.size() >= 2) {
      args[params[0]] = x;
      args[params[1]] = y;
    } else {
      args[params[0]] = x;
      args[params[0] + "2"] = y;
    }
  };
  switch (choice) {
    case toy::pair_ab: pair(q.a, q.b); break;
    case toy::pair_ba: pair(q.b, q.a); break;
    case toy::single_a:
      if (list) args[params[0]] = Json::array({q.a});
      else args[params[0]] = q.a;
      break;
    default:
      args["x"] = q.a;
      args["y"] = q.b;
      break;
  }
  return args;
}

inline std::string toy_call_text(const ToyQuestion& q, std::size_t tool, std::size_t choice) {
  Json payload{{"name", toy::tool_names().at(tool)}, {"arguments", toy_arguments(q, tool, choice)}};
  return std::string(kToolCallOpen) + payload.dump() + std::string(kToolCallClose);
}

inline std::string toy_malformed_text(const ToyQuestion& q) {
  return std::string(kToolCallOpen) + "{\"name\": " + std::string(q.tool()) + ", \"arguments\": {}}" +
         std::string(kToolCallClose);
}

inline std::string toy_answer_text(std::string_view value) { return "\\boxed{" + std::string(value) + "}"; }

inline std::string toy_response_text(const Observation& obs) {
  return std::string(kToolResponseOpen) + observation_to_json(obs).dump() + std::string(kToolResponseClose);
}

/// What a single decision produces before any tool runs.
struct ToyTransition {
  ToyState next;
  std::string emitted;
  std::optional<ExecutionRequest> call;  // a call to execute
  bool malformed = false;                // a block that will not parse
};

inline ToyState toy_after_call(ToyState s, bool ok, std::optional<std::string> value, std::size_t max_calls) {
  ++s.calls;
  s.context = ok ? toy::after_ok : toy::after_err;
  if (ok) s.last_value = std::move(value);
  s.phase = s.calls >= max_calls ? ToyPhase::answer : ToyPhase::decide;
  return s;
}

inline ToyTransition toy_transition(const ToyEnvironment& env, const ToyState& s, std::size_t action) {
  const ToyQuestion& q = env.questions().at(s.question);
  ToyTransition t;
  t.next = s;
  switch (s.phase) {
    case ToyPhase::decide:
      if (action < toy::kMalformed) {
        t.next.phase = ToyPhase::args;
        t.next.tool = action;
      } else if (action == toy::kMalformed) {
        t.emitted = toy_malformed_text(q);
        t.malformed = true;
      } else if (action == toy::kAnswer) {
        t.next.phase = ToyPhase::answer;
      } else {
        throw Error("invalid_argument", "action outside the decide alphabet");
      }
      break;
    case ToyPhase::args:
      if (action >= toy::kArgActions) throw Error("invalid_argument", "action outside the argument alphabet");
      t.emitted = toy_call_text(q, s.tool, action);
      t.call = ExecutionRequest{toy::tool_names().at(s.tool), toy_arguments(q, s.tool, action)};
      break;
    case ToyPhase::answer:
      if (action >= toy::kAnswerActions) throw Error("invalid_argument", "action outside the answer alphabet");
      t.emitted = toy_answer_text(action == toy::copy_observation && s.last_value ? *s.last_value
                                                                                  : toy::format_int(q.mental()));
      t.next.phase = ToyPhase::done;
      break;
    case ToyPhase::done: throw Error("invalid_argument", "episode already finished");
  }
  return t;
}

/// Whether the answer phase is a real choice. Without any successful
/// observation the only option is answering from memory.
inline bool toy_answer_is_forced(const ToyState& s) { return s.phase == ToyPhase::answer && !s.last_value; }

struct ToyStepResult {
  ToyState next;
  std::string emitted;
  std::string observation;  // serialized tool response, empty if none
  std::optional<Observation> result;
};

/// Applies one action, executing any tool call it produces.
inline ToyStepResult toy_env_step(const ToyEnvironment& env, const ToolExecutor& executor, const ToyState& s,
                                  std::size_t action, std::size_t max_calls = 4) {
  ToyTransition t = toy_transition(env, s, action);
  ToyStepResult r{t.next, std::move(t.emitted), {}, std::nullopt};
  if (t.call || t.malformed) {
    Observation obs = t.call ? executor.execute(*t.call)
                             : Observation::failure(ErrorKind::parse_error, std::string(kMalformedCallMessage));
    r.observation = toy_response_text(obs);
    r.next = toy_after_call(t.next, obs.ok(), obs.value, max_calls);
    r.result = std::move(obs);
  }
  return r;
}

struct ToyPrior {
  double answer_first = 0.2;
  double tool_affinity = 0.4;
  double answer_after_ok = 0.6;
  double tool_after_ok = 0.1;
  double answer_after_err = 0.3;
  double tool_after_err = 0.3;
  double malformed = 0.05;
  double unknown_tool = 0.05;
  std::array<double, toy::kArgActions> args{0.55, 0.15, 0.15, 0.15};
  double copy = 0.5;
};

/// Log-probability parameters of the untrained policy.
inline std::vector<double> toy_initial_parameters(const ToyEnvironment& env, const ToyPrior& prior = {}) {
  SoftmaxPolicy policy = env.policy();
  std::vector<double> theta(policy.dimension(), 0.0);
  for (std::size_t q = 0; q < env.size(); ++q) {
    std::size_t matching = toy::tool_index(env.questions()[q].tool());
    std::size_t base_state = q * toy::kStatesPerQuestion;
    for (std::size_t c = 0; c < toy::kContexts; ++c) {
      double answer = c == toy::start ? prior.answer_first
                      : c == toy::after_ok ? prior.answer_after_ok
                                           : prior.answer_after_err;
      double affinity = c == toy::after_ok ? prior.tool_after_ok
                        : c == toy::start ? prior.tool_affinity
                                          : prior.tool_after_err;
      double rest = 1.0 - answer - affinity - prior.malformed - prior.unknown_tool;
      double other = rest / static_cast<double>(toy::kMathTools - 1);
      std::size_t off = policy.offset(base_state + c);
      for (std::size_t a = 0; a < toy::kDecideActions; ++a) {
        double p = a == toy::kAnswer ? answer
                   : a == toy::kMalformed ? prior.malformed
                   : a == toy::kUnknownTool ? prior.unknown_tool
                   : a == matching ? affinity
                                   : other;
        theta[off + a] = std::log(p);
      }
    }
    for (std::size_t t = 0; t < toy::kArgStates; ++t) {
      std::size_t off = policy.offset(base_state + toy::kContexts + t);
      for (std::size_t a = 0; a < toy::kArgActions; ++a) theta[off + a] = std::log(prior.args[a]);
    }
    std::size_t off = policy.offset(base_state + toy::kContexts + toy::kArgStates);
    theta[off + toy::copy_observation] = std::log(prior.copy);
    theta[off + toy::from_memory] = std::log(1.0 - prior.copy);
  }
  return theta;
}

/// Parameters whose argmax plays perfectly: matching tool, arguments in
/// order, then copy the result.
inline std::vector<double> toy_expert_parameters(const ToyEnvironment& env) {
  SoftmaxPolicy policy = env.policy();
  std::vector<double> theta(policy.dimension(), 0.0);
  for (std::size_t q = 0; q < env.size(); ++q) {
    std::size_t matching = toy::tool_index(env.questions()[q].tool());
    std::size_t base_state = q * toy::kStatesPerQuestion;
    theta[policy.offset(base_state + toy::start) + matching] = 10.0;
    theta[policy.offset(base_state + toy::after_err) + matching] = 10.0;
    theta[policy.offset(base_state + toy::after_ok) + toy::kAnswer] = 10.0;
    for (std::size_t t = 0; t < toy::kArgStates; ++t) {
      theta[policy.offset(base_state + toy::kContexts + t) + toy::pair_ab] = 10.0;
    }
    theta[policy.offset(base_state + toy::kContexts + toy::kArgStates) + toy::copy_observation] = 10.0;
  }
  return theta;
}

/// Counter-based uniform generator; identical streams on every platform.
class SplitMixRng {
 public:
  explicit SplitMixRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

inline constexpr std::int64_t kObservationTokenBase = 1000;

struct ToyRollout {
  Trajectory trajectory;
  TokenizedRollout tokens;
};

/// Samples one episode from `theta_old`, recording old and reference
/// log-probabilities per policy token.
inline ToyRollout toy_rollout(const ToyEnvironment& env, const SoftmaxPolicy& policy,
                              std::span<const double> theta_old, std::span<const double> theta_ref,
                              std::size_t question, const ToolExecutor& executor, std::uint64_t seed,
                              double temperature = 1.0, std::size_t max_calls = 4) {
  SplitMixRng rng(seed);
  ToyState state;
  state.question = question;
  std::string raw;
  TokenizedRollout tok;
  auto push_policy_token = [&](std::size_t sid, std::size_t action) {
    tok.token_ids.push_back(static_cast<std::int64_t>((sid % toy::kStatesPerQuestion) * 16 + action));
    tok.mask.push_back(1);
    tok.logprobs_old.push_back(policy.log_prob(theta_old, sid, action));
    tok.logprobs_ref.push_back(policy.log_prob(theta_ref, sid, action));
    tok.states.push_back(static_cast<std::int64_t>(sid));
    tok.actions.push_back(static_cast<std::int64_t>(action));
  };
  while (state.phase != ToyPhase::done) {
    std::size_t action = toy::from_memory;
    if (!toy_answer_is_forced(state)) {
      std::size_t sid = toy_state_index(state);
      action = policy.sample(theta_old, sid, rng.uniform(), temperature);
      push_policy_token(sid, action);
    }
    ToyStepResult r = toy_env_step(env, executor, state, action, max_calls);
    raw += r.emitted;
    raw += r.observation;
    for (unsigned char c : r.observation) {
      tok.token_ids.push_back(kObservationTokenBase + c);
      tok.mask.push_back(0);
      tok.logprobs_old.push_back(0.0);
      tok.logprobs_ref.push_back(0.0);
      tok.states.push_back(-1);
      tok.actions.push_back(-1);
    }
    state = std::move(r.next);
  }
  return ToyRollout{parse_trajectory(raw), std::move(tok)};
}

/// Adapts the toy policy to the chat-client interface. The episode state
/// is rebuilt from the conversation: each assistant turn is one call, and
/// tool messages carry the rendered results.
class ToyPolicyClient final : public GenerationClient {
 public:
  ToyPolicyClient(std::shared_ptr<const ToyEnvironment> env, std::vector<double> theta, std::size_t max_calls = 4,
                  std::string name = "toy")
      : env_(std::move(env)), policy_(env_->policy()), theta_(std::move(theta)), max_calls_(max_calls),
        name_(std::move(name)) {
    if (theta_.size() != policy_.dimension()) throw Error("shape_mismatch", "toy parameters have wrong dimension");
  }

  std::string next_completion(std::span<const ChatMessage> messages, const SamplingOptions& options) const override {
    ToyState state;
    bool found = false;
    for (const auto& m : messages) {
      if (m.role == "user" && !found) {
        constexpr std::string_view kPrefix = "Question: ";
        std::string_view text = m.content;
        if (text.substr(0, kPrefix.size()) == kPrefix) text.remove_prefix(kPrefix.size());
        text = text.substr(0, text.find("\n\n"));
        auto q = env_->index_of_text(text);
        if (!q) throw Error("generation_failed", "toy client does not know the question");
        state.question = *q;
        found = true;
      } else if (m.role == "assistant") {
        ++state.calls;
      } else if (m.role == "tool") {
        bool ok = m.content.rfind("Error (", 0) != 0;
        state.context = ok ? toy::after_ok : toy::after_err;
        if (ok) state.last_value = m.content;
      }
    }
    if (!found) throw Error("generation_failed", "conversation has no user question");
    if (state.calls >= max_calls_) state.phase = ToyPhase::answer;

    SplitMixRng rng(splitmix64(options.seed) ^ state.calls);
    while (true) {
      std::size_t action = toy::from_memory;
      if (!toy_answer_is_forced(state)) {
        action = policy_.sample(theta_, toy_state_index(state), rng.uniform(), options.temperature);
      }
      ToyTransition t = toy_transition(*env_, state, action);
      if (!t.emitted.empty()) return t.emitted;
      state = std::move(t.next);
    }
  }

  std::string identity() const override { return name_; }

 private:
  std::shared_ptr<const ToyEnvironment> env_;
  SoftmaxPolicy policy_;
  std::vector<double> theta_;
  std::size_t max_calls_;
  std::string name_;
};

/// Teacher references for the toy environment from the expert policy.
inline ReferenceStore toy_references(const ToyEnvironment& env, const ToolExecutor& executor) {
  auto shared = std::make_shared<const ToyEnvironment>(env);
  ToyPolicyClient expert(shared, toy_expert_parameters(env), 4, "toy-expert");
  ReferenceStore store;
  store.set_source("toy-expert");
  for (const auto& q : env.questions()) {
    generate_reference(q.id, q.text, q.ground_truth, expert, executor, store, GenerationLimits{},
                       SamplingOptions{0, 0.0});
  }
  if (store.size() == 0) throw Error("empty_store", "expert produced no usable references");
  return store;
}

}  // namespace mentor
