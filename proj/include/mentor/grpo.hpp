#pragma once

// Group-relative policy optimization over a tabular softmax policy:
// standardized group advantages, clipped importance ratios, a per-token
// KL penalty toward a reference policy, and masking of tool-output tokens.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mentor/error.hpp"

namespace mentor {

struct GrpoConfig {
  std::size_t group_size = 10;
  double clip = 0.2;
  double kl_coeff = 0.001;
  double learning_rate = 3.0;
  std::size_t iterations = 300;
  std::uint64_t seed = 0;
  double numeric_floor = 1e-8;
  std::size_t mini_batch_size = 4;  // groups per gradient step
  std::size_t update_epochs = 2;    // passes over the batch per snapshot

  /// Throws Error("invariant_violation") naming the offending field.
  void validate() const {
    auto fail = [](const std::string& m) { throw Error("invariant_violation", m); };
    if (group_size < 1) fail("grpo.group_size must be >= 1");
    if (!(clip > 0.0) || !(clip < 1.0)) fail("grpo.clip must satisfy 0 < clip < 1");
    if (!(kl_coeff >= 0.0) || !std::isfinite(kl_coeff)) fail("grpo.kl_coeff must be finite and >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("grpo.learning_rate must be finite and > 0");
    if (iterations < 1) fail("grpo.iterations must be >= 1");
    if (!(numeric_floor > 0.0)) fail("grpo.numeric_floor must be > 0");
    if (mini_batch_size < 1) fail("grpo.mini_batch_size must be >= 1");
    if (update_epochs < 1) fail("grpo.update_epochs must be >= 1");
  }
};

/// Tabular softmax policy: each state owns a contiguous block of logits
/// in the parameter vector, one per action.
class SoftmaxPolicy {
 public:
  SoftmaxPolicy() = default;
  explicit SoftmaxPolicy(std::vector<std::size_t> action_counts) : counts_(std::move(action_counts)) {
    offsets_.reserve(counts_.size());
    std::size_t off = 0;
    for (std::size_t c : counts_) {
      if (c == 0) throw Error("invalid_argument", "every state needs at least one action");
      offsets_.push_back(off);
      off += c;
    }
    dim_ = off;
  }

  std::size_t num_states() const { return counts_.size(); }
  std::size_t num_actions(std::size_t state) const { return counts_.at(state); }
  std::size_t offset(std::size_t state) const { return offsets_.at(state); }
  std::size_t dimension() const { return dim_; }

  std::vector<double> log_probs(std::span<const double> theta, std::size_t state) const {
    const double* z = theta.data() + offsets_.at(state);
    std::size_t n = counts_[state];
    double hi = *std::max_element(z, z + n);
    double sum = 0.0;
    for (std::size_t a = 0; a < n; ++a) sum += std::exp(z[a] - hi);
    double lse = hi + std::log(sum);
    std::vector<double> out(n);
    for (std::size_t a = 0; a < n; ++a) out[a] = z[a] - lse;
    return out;
  }

  std::vector<double> probs(std::span<const double> theta, std::size_t state) const {
    auto lp = log_probs(theta, state);
    for (double& v : lp) v = std::exp(v);
    return lp;
  }

  double log_prob(std::span<const double> theta, std::size_t state, std::size_t action) const {
    return log_probs(theta, state).at(action);
  }

  /// Adds scale * d log pi(action|state) / d theta into `grad`.
  void accumulate_grad_log_prob(std::span<const double> theta, std::size_t state, std::size_t action,
                                double scale, std::span<double> grad) const {
    auto p = probs(theta, state);
    std::size_t off = offsets_[state];
    for (std::size_t a = 0; a < p.size(); ++a) {
      grad[off + a] += scale * ((a == action ? 1.0 : 0.0) - p[a]);
    }
  }

  /// Inverse-CDF draw with u in [0,1). Temperature 0 picks the argmax
  /// (lowest index on ties).
  std::size_t sample(std::span<const double> theta, std::size_t state, double u, double temperature) const {
    const double* z = theta.data() + offsets_.at(state);
    std::size_t n = counts_[state];
    if (temperature <= 0.0) return static_cast<std::size_t>(std::max_element(z, z + n) - z);
    double hi = *std::max_element(z, z + n);
    std::vector<double> w(n);
    double sum = 0.0;
    for (std::size_t a = 0; a < n; ++a) sum += w[a] = std::exp((z[a] - hi) / temperature);
    double target = u * sum;
    double acc = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      acc += w[a];
      if (target < acc) return a;
    }
    return n - 1;
  }

 private:
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> offsets_;
  std::size_t dim_ = 0;
};

/// One rollout as a token sequence. Observation tokens carry mask = 0 and
/// state = -1; policy tokens record the (state, action) pair that produced
/// them.
struct TokenizedRollout {
  std::vector<std::int64_t> token_ids;
  std::vector<std::uint8_t> mask;
  std::vector<double> logprobs_old;
  std::vector<double> logprobs_ref;
  std::vector<std::int64_t> states;
  std::vector<std::int64_t> actions;

  std::size_t size() const { return token_ids.size(); }

  void check() const {
    std::size_t n = token_ids.size();
    if (mask.size() != n || logprobs_old.size() != n || logprobs_ref.size() != n || states.size() != n ||
        actions.size() != n) {
      throw Error("shape_mismatch", "token sequences of a rollout differ in length");
    }
  }
};

struct RolloutGroup {
  std::string question_id;
  std::vector<TokenizedRollout> rollouts;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

/// (r - mean) / (population std + floor). A zero-variance group maps to
/// all zeros.
inline std::vector<double> compute_advantages(std::span<const double> rewards, double numeric_floor = 1e-8) {
  if (rewards.empty()) return {};
  double n = static_cast<double>(rewards.size());
  double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  double denom = std::sqrt(ss / n) + numeric_floor;
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / denom);
  return out;
}

inline double masked_mean(std::span<const double> values, std::span<const std::uint8_t> mask) {
  if (values.size() != mask.size()) throw Error("shape_mismatch", "values and mask differ in length");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i] == 0) continue;
    sum += values[i];
    ++n;
  }
  if (n == 0) throw Error("all_tokens_masked", "mask selects no tokens");
  return sum / static_cast<double>(n);
}

/// k3 estimator of KL(pi_theta || pi_ref) from one sampled token.
inline double kl_estimate(double logprob_theta, double logprob_ref) {
  double d = logprob_ref - logprob_theta;
  return std::expm1(d) - d;
}

/// Exact KL(pi_theta(.|s) || pi_ref(.|s)) for one state of a tabular policy.
inline double exact_kl(const SoftmaxPolicy& policy, std::span<const double> theta,
                       std::span<const double> theta_ref, std::size_t state) {
  auto lp = policy.log_probs(theta, state);
  auto lr = policy.log_probs(theta_ref, state);
  double kl = 0.0;
  for (std::size_t a = 0; a < lp.size(); ++a) kl += std::exp(lp[a]) * (lp[a] - lr[a]);
  return kl;
}

struct ObjectiveOptions {
  double clip = 0.2;  // may be +infinity to disable clipping
  double kl_coeff = 0.001;
};

struct ObjectiveResult {
  double loss = 0.0;           // negated objective
  std::vector<double> gradient;  // d loss / d theta
  double kl = 0.0;             // KL estimate, averaged like the objective
  double clip_fraction = 0.0;  // fraction of policy tokens on the clipped branch
};

/// Per token: min(rho*A, clip(rho)*A) - beta*k3, masked-mean'd per rollout,
/// averaged over the group, then over groups. Tokens with mask 0 are never
/// read beyond their mask bit.
inline ObjectiveResult grpo_objective(const SoftmaxPolicy& policy, std::span<const double> theta,
                                      std::span<const RolloutGroup> groups, const ObjectiveOptions& opts) {
  if (groups.empty()) throw Error("invalid_argument", "grpo_objective needs at least one group");
  if (theta.size() != policy.dimension()) throw Error("shape_mismatch", "parameter vector has wrong dimension");
  ObjectiveResult res;
  res.gradient.assign(theta.size(), 0.0);
  double objective = 0.0;
  double kl_total = 0.0;
  std::size_t policy_tokens = 0;
  std::size_t clipped_tokens = 0;
  const double lo = 1.0 - opts.clip;
  const double hi = 1.0 + opts.clip;
  const double group_weight = 1.0 / static_cast<double>(groups.size());

  for (const RolloutGroup& g : groups) {
    if (g.rollouts.empty()) throw Error("invalid_argument", "group '" + g.question_id + "' has no rollouts");
    if (g.advantages.size() != g.rollouts.size()) {
      throw Error("shape_mismatch", "group '" + g.question_id + "' advantages do not match rollouts");
    }
    const double rollout_weight = group_weight / static_cast<double>(g.rollouts.size());
    for (std::size_t j = 0; j < g.rollouts.size(); ++j) {
      const TokenizedRollout& r = g.rollouts[j];
      r.check();
      std::size_t n_tokens = static_cast<std::size_t>(std::count(r.mask.begin(), r.mask.end(), 1));
      if (n_tokens == 0) throw Error("all_tokens_masked", "rollout has no policy tokens");
      const double w = rollout_weight / static_cast<double>(n_tokens);
      const double adv = g.advantages[j];
      for (std::size_t k = 0; k < r.size(); ++k) {
        if (r.mask[k] == 0) continue;
        if (r.states[k] < 0 || r.actions[k] < 0) {
          throw Error("invalid_argument", "policy token without a (state, action) pair");
        }
        auto state = static_cast<std::size_t>(r.states[k]);
        auto action = static_cast<std::size_t>(r.actions[k]);
        double l = policy.log_prob(theta, state, action);
        if (!std::isfinite(l) || !std::isfinite(r.logprobs_old[k]) || !std::isfinite(r.logprobs_ref[k])) {
          throw Error("numeric_fault", "non-finite log-probability");
        }
        double rho = std::exp(l - r.logprobs_old[k]);
        double unclipped = rho * adv;
        double clipped = std::clamp(rho, lo, hi) * adv;
        double d_term;
        double term;
        if (unclipped <= clipped) {
          term = unclipped;
          d_term = unclipped;  // d(rho*A)/dl = rho*A
        } else {
          term = clipped;
          d_term = 0.0;
          ++clipped_tokens;
        }
        double kl = kl_estimate(l, r.logprobs_ref[k]);
        double d_kl = -std::expm1(r.logprobs_ref[k] - l);
        objective += w * (term - opts.kl_coeff * kl);
        kl_total += w * kl;
        ++policy_tokens;
        // Gradient of the loss (negated objective) with respect to l.
        double d_loss = -w * (d_term - opts.kl_coeff * d_kl);
        if (d_loss != 0.0) policy.accumulate_grad_log_prob(theta, state, action, d_loss, res.gradient);
      }
    }
  }
  if (!std::isfinite(objective)) throw Error("numeric_fault", "objective is not finite");
  res.loss = -objective;
  res.kl = kl_total;
  res.clip_fraction =
      policy_tokens == 0 ? 0.0 : static_cast<double>(clipped_tokens) / static_cast<double>(policy_tokens);
  return res;
}

}  // namespace mentor
