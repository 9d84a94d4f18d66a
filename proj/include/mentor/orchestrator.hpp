#pragma once

// Multi-turn generation loop against a pluggable chat client: the teacher
// reference generator with its ground-truth filter, reference ingestion from
// recorded logs, and student rollout groups.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <httplib.h>

#include "mentor/error.hpp"
#include "mentor/normalize.hpp"
#include "mentor/sandbox.hpp"
#include "mentor/trajectory.hpp"
#include "mentor/trajectory_log.hpp"

namespace mentor {

struct ChatMessage {
  std::string role;  // system | user | assistant | tool
  std::string content;
};

struct SamplingOptions {
  std::uint64_t seed = 0;
  double temperature = 1.0;
};

/// Produces the next assistant turn for a conversation. Implementations
/// keep no state between calls beyond what the messages carry.
class GenerationClient {
 public:
  virtual ~GenerationClient() = default;
  /// Throws Error("generation_failed") on transport failure.
  virtual std::string next_completion(std::span<const ChatMessage> messages,
                                      const SamplingOptions& options) const = 0;
  virtual std::string identity() const = 0;
};

/// Replays fixed completions, indexed by the number of assistant turns
/// already present. Past the end it repeats the last completion.
class ScriptedClient final : public GenerationClient {
 public:
  explicit ScriptedClient(std::vector<std::string> turns) : turns_(std::move(turns)) {}

  std::string next_completion(std::span<const ChatMessage> messages,
                              const SamplingOptions&) const override {
    if (turns_.empty()) throw Error("generation_failed", "scripted client has no turns");
    std::size_t k = 0;
    for (const auto& m : messages) k += m.role == "assistant" ? 1 : 0;
    return turns_[std::min(k, turns_.size() - 1)];
  }

  std::string identity() const override { return "scripted"; }

 private:
  std::vector<std::string> turns_;
};

/// Client for any server speaking the chat-completions wire format
/// (POST {base}/v1/chat/completions). The bearer token, if any, is read
/// from the MENTOR_API_KEY environment variable.
class ChatCompletionClient final : public GenerationClient {
 public:
  ChatCompletionClient(std::string base_url, std::string model,
                       std::chrono::seconds timeout = std::chrono::seconds(600))
      : base_url_(std::move(base_url)), model_(std::move(model)), timeout_(timeout) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  }

  std::string next_completion(std::span<const ChatMessage> messages,
                              const SamplingOptions& options) const override {
    // Split "http://host:port/prefix" into client root and path prefix.
    std::string root = base_url_;
    std::string prefix;
    if (auto scheme = root.find("://"); scheme != std::string::npos) {
      if (auto slash = root.find('/', scheme + 3); slash != std::string::npos) {
        prefix = root.substr(slash);
        root = root.substr(0, slash);
      }
    }
    if (prefix.size() < 3 || prefix.substr(prefix.size() - 3) != "/v1") prefix += "/v1";

    Json msgs = Json::array();
    for (const auto& m : messages) msgs.push_back(Json{{"role", m.role}, {"content", m.content}});
    Json body{{"model", model_},
              {"messages", std::move(msgs)},
              {"temperature", options.temperature},
              {"seed", options.seed}};

    httplib::Client client(root);
    client.set_read_timeout(timeout_.count(), 0);
    client.set_connection_timeout(10, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv("MENTOR_API_KEY"); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = client.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw Error("generation_failed", "chat endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw Error("generation_failed", "chat endpoint returned HTTP " + std::to_string(res->status));
    }
    Json reply = Json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty()) {
      throw Error("generation_failed", "chat endpoint reply has no choices");
    }
    const Json& message = reply["choices"][0].value("message", Json::object());
    if (!message.contains("content") || !message["content"].is_string()) {
      throw Error("generation_failed", "chat endpoint reply has no text content");
    }
    return message["content"].get<std::string>();
  }

  std::string identity() const override { return "chat-completions:" + base_url_ + "#" + model_; }

 private:
  std::string base_url_;
  std::string model_;
  std::chrono::seconds timeout_;
};

inline constexpr std::string_view kMalformedCallMessage =
    "tool call is not a JSON object with 'name' and 'arguments'";

struct GenerationLimits {
  std::size_t max_tool_steps = 16;
  std::size_t max_turns = 32;
};

inline std::string instruction_prompt(std::span<const ToolSpec> tools) {
  std::string out =
      "# Tools\n\nYou may call one or more functions to assist with the user query.\n\n"
      "You are provided with function signatures within <tools></tools> XML tags:\n<tools>\n";
  for (const auto& t : tools) out += spec_to_function_schema(t).dump() + "\n";
  out +=
      "</tools>\n\nFor each function call, return a json object with function name and arguments "
      "within <tool_call></tool_call> XML tags:\n<tool_call>\n"
      "{\"name\": <function-name>, \"arguments\": <args-json-object>}\n</tool_call>";
  return out;
}

inline std::string question_prompt(std::string_view question) {
  return "Question: " + std::string(question) +
         "\n\nIf you have got the answer, enclose it within \\boxed{} with latex format.";
}

struct EpisodeResult {
  Trajectory trajectory;
  bool exhausted = false;  // stopped by a limit rather than by the model
};

/// Runs the tool-use loop for one question. Every call in a completion is
/// executed and its result spliced in right after the call block, so the
/// assembled raw text parses back to the same steps.
inline EpisodeResult run_episode(std::string_view question, const GenerationClient& client,
                                 const ToolExecutor& executor, std::span<const ToolSpec> tools,
                                 const GenerationLimits& limits, const SamplingOptions& options) {
  std::vector<ChatMessage> messages{{"system", instruction_prompt(tools)},
                                    {"user", question_prompt(question)}};
  std::string raw;
  std::size_t calls = 0;
  EpisodeResult result;
  bool finished = false;
  for (std::size_t turn = 0; turn < limits.max_turns && !finished; ++turn) {
    std::string completion = client.next_completion(messages, options);
    Trajectory parsed = parse_trajectory(completion);
    std::size_t cursor = 0;
    bool any_call = false;
    std::vector<ChatMessage> tool_messages;
    for (const Step& step : parsed.steps) {
      if (!step.is_call_attempt()) continue;
      if (calls >= limits.max_tool_steps) {
        completion.resize(step.block.begin);
        result.exhausted = true;
        break;
      }
      any_call = true;
      raw.append(completion, cursor, step.block.end - cursor);
      cursor = step.block.end;
      bool closed = step.block.end - step.block.begin >= kToolCallOpen.size() + kToolCallClose.size() &&
                    completion.compare(step.block.end - kToolCallClose.size(), kToolCallClose.size(),
                                       kToolCallClose) == 0;
      if (!closed) {
        ++calls;
        break;
      }
      ExecutionResult obs =
          step.tool_call ? executor.execute(ExecutionRequest{step.tool_call->name, step.tool_call->arguments})
                         : Observation::failure(ErrorKind::parse_error, std::string(kMalformedCallMessage));
      raw += kToolResponseOpen;
      raw += observation_to_json(obs).dump();
      raw += kToolResponseClose;
      tool_messages.push_back({"tool", render_result_text(obs)});
      ++calls;
    }
    if (cursor < completion.size()) raw.append(completion, cursor, std::string::npos);
    messages.push_back({"assistant", completion});
    for (auto& m : tool_messages) messages.push_back(std::move(m));
    if (result.exhausted || !any_call || extract_answer(completion)) finished = true;
  }
  if (!finished) result.exhausted = true;
  result.trajectory = parse_trajectory(raw);
  return result;
}

struct FilterStats {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t dropped_mismatch = 0;
  std::size_t dropped_unanswered = 0;
  std::size_t duplicates = 0;
  std::size_t malformed_lines = 0;
};

class ReferenceStore {
 public:
  const ReferenceRecord* find(const std::string& question_id) const {
    auto it = records_.find(question_id);
    return it == records_.end() ? nullptr : &it->second;
  }

  const ReferenceRecord& at(const std::string& question_id) const {
    if (const auto* r = find(question_id)) return *r;
    throw Error("unknown_question", "no reference trajectory for question '" + question_id + "'");
  }

  const std::map<std::string, ReferenceRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const FilterStats& stats() const { return stats_; }
  const std::string& source() const { return source_; }

  std::vector<Trajectory> teacher_trajectories() const {
    std::vector<Trajectory> out;
    for (const auto& [id, r] : records_) out.push_back(r.teacher_trajectory);
    return out;
  }

  /// Applies the ground-truth filter and records the outcome. Returns true
  /// when the record is stored.
  bool offer(std::string question_id, std::string question, std::string ground_truth,
             Trajectory teacher, bool exhausted = false) {
    if (records_.count(question_id) != 0) {
      ++stats_.duplicates;
      return false;
    }
    ++stats_.total;
    if (exhausted || !teacher.final_answer) {
      ++stats_.dropped_unanswered;
      return false;
    }
    if (normalize_answer(*teacher.final_answer) != normalize_answer(ground_truth)) {
      ++stats_.dropped_mismatch;
      return false;
    }
    ++stats_.kept;
    std::string answer = *teacher.final_answer;
    records_.emplace(question_id, ReferenceRecord{question_id, std::move(question), std::move(ground_truth),
                                                  std::move(teacher), std::move(answer)});
    return true;
  }

  void set_source(std::string s) { source_ = std::move(s); }
  void add_malformed(std::size_t n) { stats_.malformed_lines += n; }

 private:
  std::map<std::string, ReferenceRecord> records_;
  FilterStats stats_;
  std::string source_;
};

/// Generates one teacher trajectory and keeps it only when its answer
/// matches the ground truth. Updates `store` statistics either way.
inline std::optional<ReferenceRecord> generate_reference(
    const std::string& question_id, const std::string& question, const std::string& ground_truth,
    const GenerationClient& client, const ToolExecutor& executor, ReferenceStore& store,
    const GenerationLimits& limits = {}, const SamplingOptions& options = {0, 0.0}) {
  auto tools = builtin_specs();
  EpisodeResult ep = run_episode(question, client, executor, tools, limits, options);
  if (!store.offer(question_id, question, ground_truth, std::move(ep.trajectory), ep.exhausted)) {
    return std::nullopt;
  }
  return *store.find(question_id);
}

/// Loads teacher logs, applying the same ground-truth filter. Duplicate
/// ids keep the first record.
inline ReferenceStore ingest_references(
    const std::string& path, const std::function<void(const std::string&)>& warn = [](const std::string& m) {
      std::cerr << "warning: " << m << '\n';
    }) {
  LogReadResult log = read_trajectory_log(path, warn);
  ReferenceStore store;
  store.set_source(path);
  store.add_malformed(log.malformed_lines);
  for (auto& rec : log.records) {
    if (rec.role != Role::teacher) {
      warn(path + ": skipped non-teacher record for '" + rec.question_id + "'");
      continue;
    }
    if (!rec.ground_truth) {
      warn(path + ": record '" + rec.question_id + "' has no ground_truth; skipped");
      continue;
    }
    std::size_t before = store.stats().duplicates;
    store.offer(rec.question_id, rec.question.value_or(""), *rec.ground_truth, std::move(rec.trajectory));
    if (store.stats().duplicates != before) {
      warn(path + ": duplicate question_id '" + rec.question_id + "'; keeping the first");
    }
  }
  if (log.records.empty()) throw Error("empty_store", "no usable records in '" + path + "'");
  return store;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stable per-rollout seed from (run seed, question id, rollout index).
inline std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view question_id, std::uint64_t index) {
  return splitmix64(splitmix64(run_seed ^ fnv1a(question_id)) + index);
}

/// G independent episodes without the ground-truth filter. A failed
/// generation yields an empty trajectory so the group keeps size G.
inline std::vector<Trajectory> rollout_group(
    const std::string& question_id, const std::string& question, const GenerationClient& client,
    const ToolExecutor& executor, std::size_t group_size, std::uint64_t run_seed,
    const GenerationLimits& limits = {}, double temperature = 1.0,
    const std::function<void(const std::string&)>& warn = [](const std::string& m) {
      std::cerr << "warning: " << m << '\n';
    }) {
  if (group_size == 0) throw Error("invalid_argument", "group size must be at least 1");
  auto tools = builtin_specs();
  std::vector<Trajectory> group;
  group.reserve(group_size);
  for (std::size_t j = 0; j < group_size; ++j) {
    SamplingOptions opts{derive_seed(run_seed, question_id, j), temperature};
    try {
      group.push_back(run_episode(question, client, executor, tools, limits, opts).trajectory);
    } catch (const Error& e) {
      warn("rollout " + std::to_string(j) + " for '" + question_id + "' failed: " + e.what());
      group.push_back(Trajectory{});
    }
  }
  return group;
}

}  // namespace mentor
