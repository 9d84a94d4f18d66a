#pragma once

// Run configuration: a JSON file with six sections. Unknown keys and type
// mismatches raise Error("config_error"); constraint violations raise
// Error("invariant_violation"). Both name the offending key. Overrides of
// the form "section.key=value" are applied between the file and
// validation, so flags beat the file and the file beats defaults.

#include <filesystem>
#include <fstream>
#include <set>
#include <type_traits>
#include <sstream>
#include <string>
#include <vector>

#include "mentor/error.hpp"
#include "mentor/grpo.hpp"
#include "mentor/orchestrator.hpp"
#include "mentor/reward.hpp"
#include "mentor/sandbox.hpp"
#include "mentor/trajectory.hpp"

namespace mentor {

struct SandboxConfig {
  std::string bind = "127.0.0.1:8080";
  std::string corpus;
  std::uint64_t call_deadline_ms = 5000;
  std::string url;  // empty: run tools in process
};

struct OrchestratorConfig {
  std::string client = "toy";  // "toy" or "chat"
  std::string endpoint;
  std::string model;
  std::size_t max_tool_steps = 16;
  std::size_t max_turns = 32;
  double temperature = 1.0;
};

struct ToyConfig {
  std::string questions;  // empty: the built-in 20-question set
  std::size_t max_calls = 4;
  std::size_t threads = 1;
};

struct PathsConfig {
  std::string references;
  std::string rollouts;
  std::string reports;
};

struct RunConfig {
  SandboxConfig sandbox;
  RewardConfig rewards;
  GrpoConfig grpo;
  OrchestratorConfig orchestrator;
  ToyConfig toy;
  PathsConfig paths;
};

inline Json config_to_json(const RunConfig& c) {
  return Json{
      {"sandbox",
       {{"bind", c.sandbox.bind},
        {"corpus", c.sandbox.corpus},
        {"call_deadline_ms", c.sandbox.call_deadline_ms},
        {"url", c.sandbox.url}}},
      {"rewards",
       {{"setting", std::string(to_string(c.rewards.setting))},
        {"weights",
         {{"correctness", c.rewards.weights.correctness},
          {"alignment", c.rewards.weights.alignment},
          {"validation", c.rewards.weights.validation}}}}},
      {"grpo",
       {{"group_size", c.grpo.group_size},
        {"clip", c.grpo.clip},
        {"kl_coeff", c.grpo.kl_coeff},
        {"learning_rate", c.grpo.learning_rate},
        {"iterations", c.grpo.iterations},
        {"seed", c.grpo.seed},
        {"numeric_floor", c.grpo.numeric_floor},
        {"mini_batch_size", c.grpo.mini_batch_size},
        {"update_epochs", c.grpo.update_epochs}}},
      {"orchestrator",
       {{"client", c.orchestrator.client},
        {"endpoint", c.orchestrator.endpoint},
        {"model", c.orchestrator.model},
        {"max_tool_steps", c.orchestrator.max_tool_steps},
        {"max_turns", c.orchestrator.max_turns},
        {"temperature", c.orchestrator.temperature}}},
      {"toy", {{"questions", c.toy.questions}, {"max_calls", c.toy.max_calls}, {"threads", c.toy.threads}}},
      {"paths",
       {{"references", c.paths.references}, {"rollouts", c.paths.rollouts}, {"reports", c.paths.reports}}},
  };
}

namespace detail {

[[noreturn]] inline void config_fail(const std::string& key, const std::string& what) {
  throw Error("config_error", key + ": " + what);
}

class SectionReader {
 public:
  SectionReader(const Json& root, std::string name) : name_(std::move(name)) {
    if (!root.contains(name_)) return;
    const Json& v = root.at(name_);
    if (!v.is_object()) config_fail(name_, "expected an object");
    obj_ = &v;
  }

  /// Rejects keys that no read() asked for.
  void finish() const {
    if (obj_ == nullptr) return;
    for (const auto& [k, v] : obj_->items()) {
      if (seen_.count(k) == 0) config_fail(name_ + "." + k, "unknown key");
    }
  }

  const Json* get(const std::string& key) {
    seen_.insert(key);
    if (obj_ == nullptr || !obj_->contains(key)) return nullptr;
    return &obj_->at(key);
  }

  std::string key(const std::string& k) const { return name_ + "." + k; }

  void read(const std::string& k, std::string& out) {
    if (const Json* v = get(k)) {
      if (!v->is_string()) config_fail(key(k), "expected a string");
      out = v->get<std::string>();
    }
  }

  void read(const std::string& k, double& out) {
    if (const Json* v = get(k)) {
      if (!v->is_number()) config_fail(key(k), "expected a number");
      out = v->get<double>();
    }
  }

  template <class U>
    requires std::is_unsigned_v<U>
  void read(const std::string& k, U& out) {
    if (const Json* v = get(k)) {
      if (v->is_number_unsigned()) {
        out = v->get<U>();
      } else if (v->is_number_integer()) {
        throw Error("invariant_violation", key(k) + ": must be nonnegative");
      } else {
        config_fail(key(k), "expected an integer");
      }
    }
  }

 private:
  std::string name_;
  const Json* obj_ = nullptr;
  std::set<std::string> seen_;
};

inline Json parse_override_value(const std::string& text) {
  Json v = Json::parse(text, nullptr, false);
  return v.is_discarded() ? Json(text) : v;
}

}  // namespace detail

/// Applies "section.key=value" (or "section.sub.key=value") overrides.
/// Values parse as JSON when possible, otherwise as plain strings.
inline void apply_overrides(Json& doc, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) detail::config_fail(o, "override must look like section.key=value");
    std::string path = o.substr(0, eq);
    Json* node = &doc;
    std::size_t start = 0;
    while (true) {
      auto dot = path.find('.', start);
      std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (part.empty()) detail::config_fail(path, "empty key segment");
      if (!node->is_object()) detail::config_fail(path, "parent is not an object");
      if (dot == std::string::npos) {
        (*node)[part] = detail::parse_override_value(o.substr(eq + 1));
        break;
      }
      if (!node->contains(part)) (*node)[part] = Json::object();
      node = &(*node)[part];
      start = dot + 1;
    }
  }
}

/// Resolves a configuration document against the defaults.
inline RunConfig resolve_config(const Json& doc) {
  if (!doc.is_object()) detail::config_fail("<root>", "expected an object");
  static const std::set<std::string> sections{"sandbox", "rewards", "grpo", "orchestrator", "toy", "paths"};
  for (const auto& [k, v] : doc.items()) {
    if (sections.count(k) == 0) detail::config_fail(k, "unknown key");
  }
  RunConfig c;
  {
    detail::SectionReader r(doc, "sandbox");
    r.read("bind", c.sandbox.bind);
    r.read("corpus", c.sandbox.corpus);
    r.read("call_deadline_ms", c.sandbox.call_deadline_ms);
    r.read("url", c.sandbox.url);
    r.finish();
  }
  {
    detail::SectionReader r(doc, "rewards");
    std::string setting(to_string(c.rewards.setting));
    r.read("setting", setting);
    auto parsed = reward_setting_from_string(setting);
    if (!parsed) throw Error("invariant_violation", "rewards.setting: must be one of S1..S5, got '" + setting + "'");
    c.rewards.setting = *parsed;
    Json weights_doc = Json::object();
    if (const Json* w = r.get("weights")) weights_doc["rewards.weights"] = *w;
    detail::SectionReader w(weights_doc, "rewards.weights");
    w.read("correctness", c.rewards.weights.correctness);
    w.read("alignment", c.rewards.weights.alignment);
    w.read("validation", c.rewards.weights.validation);
    w.finish();
    r.finish();
  }
  {
    detail::SectionReader r(doc, "grpo");
    r.read("group_size", c.grpo.group_size);
    r.read("clip", c.grpo.clip);
    r.read("kl_coeff", c.grpo.kl_coeff);
    r.read("learning_rate", c.grpo.learning_rate);
    r.read("iterations", c.grpo.iterations);
    r.read("seed", c.grpo.seed);
    r.read("numeric_floor", c.grpo.numeric_floor);
    r.read("mini_batch_size", c.grpo.mini_batch_size);
    r.read("update_epochs", c.grpo.update_epochs);
    r.finish();
  }
  {
    detail::SectionReader r(doc, "orchestrator");
    r.read("client", c.orchestrator.client);
    r.read("endpoint", c.orchestrator.endpoint);
    r.read("model", c.orchestrator.model);
    r.read("max_tool_steps", c.orchestrator.max_tool_steps);
    r.read("max_turns", c.orchestrator.max_turns);
    r.read("temperature", c.orchestrator.temperature);
    r.finish();
  }
  {
    detail::SectionReader r(doc, "toy");
    r.read("questions", c.toy.questions);
    r.read("max_calls", c.toy.max_calls);
    r.read("threads", c.toy.threads);
    r.finish();
  }
  {
    detail::SectionReader r(doc, "paths");
    r.read("references", c.paths.references);
    r.read("rollouts", c.paths.rollouts);
    r.read("reports", c.paths.reports);
    r.finish();
  }
  return c;
}

/// Checks every cross-field constraint. Throws
/// Error("invariant_violation") naming the key.
inline void check_config(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw Error("invariant_violation", m); };
  try {
    c.rewards.weights.validate();
  } catch (const Error& e) {
    fail(std::string("rewards.weights: ") + e.what());
  }
  c.grpo.validate();
  if (c.sandbox.call_deadline_ms == 0) fail("sandbox.call_deadline_ms must be > 0");
  if (c.orchestrator.client != "toy" && c.orchestrator.client != "chat") {
    fail("orchestrator.client must be \"toy\" or \"chat\"");
  }
  if (c.orchestrator.client == "chat" && c.orchestrator.endpoint.empty()) {
    fail("orchestrator.endpoint is required when orchestrator.client is \"chat\"");
  }
  if (c.orchestrator.max_tool_steps < 1) fail("orchestrator.max_tool_steps must be >= 1");
  if (c.orchestrator.max_turns < 1) fail("orchestrator.max_turns must be >= 1");
  if (!(c.orchestrator.temperature >= 0.0)) fail("orchestrator.temperature must be >= 0");
  if (c.toy.max_calls < 1) fail("toy.max_calls must be >= 1");
  if (c.toy.threads < 1) fail("toy.threads must be >= 1");
  auto must_exist = [&](const std::string& key, const std::string& path) {
    if (!path.empty() && !std::filesystem::exists(path)) fail(key + ": file '" + path + "' does not exist");
  };
  must_exist("sandbox.corpus", c.sandbox.corpus);
  must_exist("toy.questions", c.toy.questions);
  must_exist("paths.references", c.paths.references);
  must_exist("paths.rollouts", c.paths.rollouts);
}

/// Reads, overrides, resolves and checks a configuration. An empty path
/// or an empty file means all defaults.
inline RunConfig validate_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  Json doc = Json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw Error("config_error", "cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
      doc = Json::parse(text, nullptr, false);
      if (doc.is_discarded()) throw Error("config_error", "config file '" + path + "' is not valid JSON");
    }
  }
  apply_overrides(doc, overrides);
  RunConfig c = resolve_config(doc);
  check_config(c);
  return c;
}

}  // namespace mentor
