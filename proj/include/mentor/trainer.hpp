#pragma once

// GRPO training of the toy policy: snapshot, sample G rollouts per
// question through the executor, score against teacher references,
// standardize, and take mini-batch gradient steps.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mentor/analytics.hpp"
#include "mentor/error.hpp"
#include "mentor/grpo.hpp"
#include "mentor/orchestrator.hpp"
#include "mentor/reward.hpp"
#include "mentor/toy_env.hpp"

namespace mentor {

struct IterationMetrics {
  std::size_t iter = 0;
  double mean_reward = 0.0;
  double invalid_rate = 0.0;
  double tool_usage_rate = 0.0;
  double alignment_score = 0.0;
  double kl = 0.0;
  double loss = 0.0;
  double mean_correctness = 0.0;
};

inline Json metrics_to_json(const IterationMetrics& m) {
  return Json{{"iter", m.iter},
              {"mean_reward", m.mean_reward},
              {"invalid_rate", m.invalid_rate},
              {"tool_usage_rate", m.tool_usage_rate},
              {"alignment_score", m.alignment_score},
              {"kl", m.kl},
              {"loss", m.loss},
              {"mean_correctness", m.mean_correctness}};
}

inline IterationMetrics metrics_from_json(const Json& j) {
  IterationMetrics m;
  m.iter = j.at("iter").get<std::size_t>();
  m.mean_reward = j.at("mean_reward").get<double>();
  m.invalid_rate = j.at("invalid_rate").get<double>();
  m.tool_usage_rate = j.at("tool_usage_rate").get<double>();
  m.alignment_score = j.at("alignment_score").get<double>();
  m.kl = j.at("kl").get<double>();
  m.loss = j.at("loss").get<double>();
  m.mean_correctness = j.value("mean_correctness", 0.0);
  return m;
}

struct TrainingReport {
  std::vector<IterationMetrics> iterations;
  std::vector<double> theta;  // final parameters

  /// One JSON object per line, one line per iteration.
  std::string to_jsonl() const {
    std::string out;
    for (const auto& m : iterations) out += metrics_to_json(m).dump() + "\n";
    return out;
  }

  /// Average of the last `window` iterations (all if fewer).
  IterationMetrics tail_mean(std::size_t window) const {
    IterationMetrics avg;
    if (iterations.empty()) return avg;
    std::size_t n = std::min(window, iterations.size());
    for (std::size_t i = iterations.size() - n; i < iterations.size(); ++i) {
      const auto& m = iterations[i];
      avg.mean_reward += m.mean_reward;
      avg.invalid_rate += m.invalid_rate;
      avg.tool_usage_rate += m.tool_usage_rate;
      avg.alignment_score += m.alignment_score;
      avg.kl += m.kl;
      avg.loss += m.loss;
      avg.mean_correctness += m.mean_correctness;
    }
    double d = static_cast<double>(n);
    avg.iter = iterations.back().iter;
    avg.mean_reward /= d;
    avg.invalid_rate /= d;
    avg.tool_usage_rate /= d;
    avg.alignment_score /= d;
    avg.kl /= d;
    avg.loss /= d;
    avg.mean_correctness /= d;
    return avg;
  }
};

inline std::vector<IterationMetrics> read_training_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot read training report '" + path + "'");
  std::vector<IterationMetrics> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j = Json::parse(line, nullptr, false);
    try {
      if (j.is_discarded()) throw std::invalid_argument("not JSON");
      out.push_back(metrics_from_json(j));
    } catch (const std::exception& e) {
      throw Error("bad_record", path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

struct TrainOptions {
  std::size_t threads = 1;
  std::size_t max_calls = 4;
  double temperature = 1.0;
  std::function<void(const IterationMetrics&)> on_iteration;
};

namespace detail {

struct SampledGroup {
  RolloutGroup group;
  std::vector<Trajectory> trajectories;
  std::vector<RewardBreakdown> breakdowns;
};

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  std::size_t workers = std::min(threads, n);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// Runs GRPO on the toy environment. Every question must have a reference.
/// The result depends only on the inputs and the seed, never on the
/// thread count.
inline TrainingReport train_toy(const ToyEnvironment& env, const ReferenceStore& references,
                                const RewardConfig& reward_config, const GrpoConfig& config,
                                const ToolExecutor& executor, const TrainOptions& options = {},
                                std::vector<double> theta0 = {}) {
  config.validate();
  reward_config.weights.validate();
  for (const auto& q : env.questions()) {
    if (references.find(q.id) == nullptr) {
      throw Error("unknown_question", "no reference trajectory for question '" + q.id + "'");
    }
  }
  const SoftmaxPolicy policy = env.policy();
  const std::vector<double> theta_ref = toy_initial_parameters(env);
  std::vector<double> theta = theta0.empty() ? theta_ref : std::move(theta0);
  if (theta.size() != policy.dimension()) throw Error("shape_mismatch", "initial parameters have wrong dimension");

  std::vector<Trajectory> teacher;
  for (const auto& q : env.questions()) teacher.push_back(references.at(q.id).teacher_trajectory);
  const ToolUsageDistribution teacher_dist = tool_name_histogram(teacher);
  const ObjectiveOptions objective{config.clip, config.kl_coeff};

  TrainingReport report;
  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const std::vector<double> theta_old = theta;
    std::vector<detail::SampledGroup> sampled(env.size());
    detail::parallel_for(env.size(), options.threads, [&](std::size_t qi) {
      const ToyQuestion& q = env.questions()[qi];
      const ReferenceRecord& ref = references.at(q.id);
      auto& out = sampled[qi];
      out.group.question_id = q.id;
      for (std::size_t j = 0; j < config.group_size; ++j) {
        std::uint64_t seed = derive_seed(config.seed, q.id, iter * config.group_size + j);
        ToyRollout r = toy_rollout(env, policy, theta_old, theta_ref, qi, executor, seed, options.temperature,
                                   options.max_calls);
        RewardBreakdown b = score_rollout(r.trajectory, ref, reward_config);
        out.group.rollouts.push_back(std::move(r.tokens));
        out.group.rewards.push_back(b.total);
        out.trajectories.push_back(std::move(r.trajectory));
        out.breakdowns.push_back(b);
      }
      out.group.advantages = compute_advantages(out.group.rewards, config.numeric_floor);
    });

    IterationMetrics m;
    m.iter = iter;
    std::vector<Trajectory> all;
    std::vector<RolloutGroup> groups;
    double reward_sum = 0.0;
    double correct_sum = 0.0;
    for (auto& s : sampled) {
      for (const auto& b : s.breakdowns) {
        reward_sum += b.total;
        correct_sum += b.r_c;
      }
      for (auto& t : s.trajectories) all.push_back(std::move(t));
      groups.push_back(std::move(s.group));
    }
    double n_rollouts = static_cast<double>(all.size());
    m.mean_reward = reward_sum / n_rollouts;
    m.mean_correctness = correct_sum / n_rollouts;
    m.invalid_rate = invalid_call_rate(all);
    m.tool_usage_rate = tool_usage_rate(all);
    m.alignment_score = alignment_score(tool_name_histogram(all), teacher_dist);

    double loss_sum = 0.0;
    double kl_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t epoch = 0; epoch < config.update_epochs; ++epoch) {
      for (std::size_t lo = 0; lo < groups.size(); lo += config.mini_batch_size) {
        std::size_t hi = std::min(groups.size(), lo + config.mini_batch_size);
        std::span<const RolloutGroup> batch(groups.data() + lo, hi - lo);
        ObjectiveResult res = grpo_objective(policy, theta, batch, objective);
        if (!std::isfinite(res.loss)) throw Error("numeric_fault", "training diverged: loss is not finite");
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= config.learning_rate * res.gradient[i];
        loss_sum += res.loss;
        kl_sum += res.kl;
        ++steps;
      }
    }
    for (double v : theta) {
      if (!std::isfinite(v)) throw Error("numeric_fault", "training diverged: parameters are not finite");
    }
    m.loss = loss_sum / static_cast<double>(steps);
    m.kl = kl_sum / static_cast<double>(steps);
    report.iterations.push_back(m);
    if (options.on_iteration) options.on_iteration(m);
  }
  report.theta = std::move(theta);
  return report;
}

}  // namespace mentor
