#include "mmrag/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmrag/error.hpp"
#include "mmrag/rng.hpp"

namespace mmrag {

void validate(const GrpoConfig& cfg) {
  if (cfg.group_size < 2) throw Error("config_invalid", "grpo.group_size must be >= 2");
  if (!(cfg.clip_epsilon > 0.0)) throw Error("config_invalid", "grpo.clip_epsilon must be > 0");
  if (cfg.kl_coef < 0.0) throw Error("config_invalid", "grpo.kl_coef must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw Error("config_invalid", "grpo.learning_rate must be > 0");
  if (cfg.steps <= 0) throw Error("config_invalid", "grpo.steps must be > 0");
  if (!(cfg.sample_temperature > 0.0)) {
    throw Error("config_invalid", "grpo.sample_temperature must be > 0");
  }
}

std::vector<double> compute_advantages(std::span<const double> rewards) {
  const std::size_t n = rewards.size();
  if (n < 2) throw Error("group_too_small", "advantage groups need >= 2 rewards");

  double mean = 0.0;
  for (const double r : rewards) mean += r;
  mean /= static_cast<double>(n);

  double variance = 0.0;
  for (const double r : rewards) variance += (r - mean) * (r - mean);
  variance /= static_cast<double>(n);  // population variance
  const double std_dev = std::sqrt(variance);

  std::vector<double> advantages(n, 0.0);
  if (std_dev < kAdvantageStdFloor) return advantages;
  for (std::size_t i = 0; i < n; ++i) {
    advantages[i] = (rewards[i] - mean) / std_dev;
  }
  return advantages;
}

double clipped_term(double rho, double advantage, double epsilon) {
  if (!(rho > 0.0)) throw Error("invalid_ratio", "probability ratio must be > 0");
  if (!(epsilon > 0.0)) throw Error("config_invalid", "clip epsilon must be > 0");
  const double clipped = std::clamp(rho, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(rho * advantage, clipped * advantage);
}

double grpo_objective(const GrpoGroup& group, const GrpoConfig& cfg) {
  const std::size_t g = static_cast<std::size_t>(cfg.group_size);
  if (group.rewards.size() != g || group.ratios.size() != g ||
      group.advantages.size() != g) {
    throw Error("group_size_mismatch",
                "group sequences must all have length " + std::to_string(g));
  }
  if (group.kl_value < 0.0) throw Error("invalid_kl", "kl_value must be >= 0");
  double sum = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    sum += clipped_term(group.ratios[i], group.advantages[i], cfg.clip_epsilon);
  }
  return sum / static_cast<double>(g) - cfg.kl_coef * group.kl_value;
}

double categorical_kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error("dim_mismatch", "KL over distributions of different lengths");
  }
  double p_sum = 0.0, q_sum = 0.0;
  for (const double v : p) p_sum += v;
  for (const double v : q) q_sum += v;
  if (std::abs(p_sum - 1.0) > 1e-9 || std::abs(q_sum - 1.0) > 1e-9) {
    throw Error("not_normalized", "probability vectors must sum to 1");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) {
      throw Error("not_normalized", "probabilities must be non-negative");
    }
    if (p[i] == 0.0) continue;
    if (q[i] <= 0.0) {
      throw Error("support_violation",
                  "q must be positive wherever p is (component " +
                      std::to_string(i) + ")");
    }
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(0.0, kl);
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw Error("config_invalid", "softmax temperature must be > 0");
  }
  if (logits.empty()) throw Error("config_invalid", "softmax over empty logits");
  double max_z = -std::numeric_limits<double>::infinity();
  for (const double l : logits) max_z = std::max(max_z, l / temperature);
  std::vector<double> out(logits.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] / temperature - max_z);
    denom += out[i];
  }
  for (double& v : out) v /= denom;
  return out;
}

namespace {

void validate_gradient_input(const PolicyGradientInput& in) {
  const std::size_t k = in.theta.size();
  if (k < 2) throw Error("config_invalid", "policy needs >= 2 actions");
  if (in.theta_old.size() != k || in.ref_probs.size() != k) {
    throw Error("dim_mismatch", "theta, theta_old and ref_probs must agree");
  }
  if (in.actions.size() != in.advantages.size() || in.actions.empty()) {
    throw Error("dim_mismatch", "actions and advantages must align and be non-empty");
  }
  for (const std::size_t a : in.actions) {
    if (a >= k) throw Error("invalid_action", "sampled action out of range");
  }
  if (!(in.temperature > 0.0)) throw Error("config_invalid", "temperature must be > 0");
  if (!(in.clip_epsilon > 0.0)) throw Error("config_invalid", "clip epsilon must be > 0");
  if (in.kl_coef < 0.0) throw Error("config_invalid", "kl_coef must be >= 0");
}

}  // namespace

double surrogate_objective(const PolicyGradientInput& in) {
  validate_gradient_input(in);
  const std::vector<double> probs = softmax(in.theta, in.temperature);
  const std::vector<double> probs_old = softmax(in.theta_old, in.temperature);
  const std::size_t g = in.actions.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    const double rho = probs[in.actions[i]] / probs_old[in.actions[i]];
    sum += clipped_term(rho, in.advantages[i], in.clip_epsilon);
  }
  double objective = sum / static_cast<double>(g);
  if (in.kl_coef > 0.0) {
    objective -= in.kl_coef *
                 categorical_kl(probs, std::vector<double>(in.ref_probs.begin(),
                                                           in.ref_probs.end()));
  }
  return objective;
}

std::vector<double> policy_gradient(const PolicyGradientInput& in) {
  validate_gradient_input(in);
  const std::size_t k = in.theta.size();
  const std::vector<double> probs = softmax(in.theta, in.temperature);
  const std::vector<double> probs_old = softmax(in.theta_old, in.temperature);
  const std::size_t g = in.actions.size();
  const double inv_temp = 1.0 / in.temperature;

  std::vector<double> grad(k, 0.0);
  for (std::size_t i = 0; i < g; ++i) {
    const std::size_t a = in.actions[i];
    const double advantage = in.advantages[i];
    const double rho = probs[a] / probs_old[a];
    const double unclipped = rho * advantage;
    const double clipped =
        std::clamp(rho, 1.0 - in.clip_epsilon, 1.0 + in.clip_epsilon) * advantage;
    // min() selects the unclipped branch on ties; a selected clipped
    // branch is constant in theta and contributes no gradient.
    if (unclipped > clipped) continue;
    const double scale =
        advantage * rho * inv_temp / static_cast<double>(g);
    for (std::size_t j = 0; j < k; ++j) {
      grad[j] += scale * ((j == a ? 1.0 : 0.0) - probs[j]);
    }
  }

  if (in.kl_coef > 0.0) {
    double kl = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (probs[j] <= 0.0) continue;
      if (in.ref_probs[j] <= 0.0) {
        throw Error("support_violation", "reference policy must cover the policy");
      }
      kl += probs[j] * std::log(probs[j] / in.ref_probs[j]);
    }
    for (std::size_t j = 0; j < k; ++j) {
      const double d_kl =
          inv_temp * probs[j] * (std::log(probs[j] / in.ref_probs[j]) - kl);
      grad[j] -= in.kl_coef * d_kl;
    }
  }
  return grad;
}

TrainResult train_toy_policy(const RewriteEnv& env, const GrpoConfig& cfg) {
  validate(cfg);
  const std::size_t num_actions = env.action_count();
  if (num_actions < 2) {
    throw Error("env_invalid", "environment must expose >= 2 actions");
  }
  if (env.query_count() == 0) {
    throw Error("env_invalid", "environment has no queries");
  }

  TrainResult result;
  result.policy.logits.assign(num_actions, 0.0);
  for (std::size_t a = 0; a < num_actions; ++a) {
    result.policy.action_names.push_back(env.action_name(a));
  }
  const std::vector<double> ref_probs =
      softmax(result.policy.logits, cfg.sample_temperature);

  SplitMix64 rng(cfg.seed);
  const std::size_t g = static_cast<std::size_t>(cfg.group_size);
  result.curve.reserve(static_cast<std::size_t>(cfg.steps));

  for (int step = 1; step <= cfg.steps; ++step) {
    const std::size_t query =
        static_cast<std::size_t>(step - 1) % env.query_count();
    const std::vector<double> theta_old = result.policy.logits;
    const std::vector<double> probs = softmax(theta_old, cfg.sample_temperature);

    std::vector<std::size_t> actions(g);
    std::vector<double> rewards(g);
    for (std::size_t i = 0; i < g; ++i) {
      const double u = rng.next_unit();
      double cumulative = 0.0;
      std::size_t picked = num_actions - 1;
      for (std::size_t a = 0; a < num_actions; ++a) {
        cumulative += probs[a];
        if (u < cumulative) {
          picked = a;
          break;
        }
      }
      actions[i] = picked;
      rewards[i] = env.rollout_reward(query, picked);
    }

    const std::vector<double> advantages = compute_advantages(rewards);
    const double kl = categorical_kl(probs, ref_probs);

    GrpoGroup group;
    group.rewards = rewards;
    group.ratios.assign(g, 1.0);  // one update per group: ratios are 1 here
    group.advantages = advantages;
    group.kl_value = kl;
    const double objective = grpo_objective(group, cfg);

    PolicyGradientInput gin;
    gin.theta = result.policy.logits;
    gin.theta_old = theta_old;
    gin.ref_probs = ref_probs;
    gin.actions = actions;
    gin.advantages = advantages;
    gin.temperature = cfg.sample_temperature;
    gin.clip_epsilon = cfg.clip_epsilon;
    gin.kl_coef = cfg.kl_coef;
    const std::vector<double> grad = policy_gradient(gin);
    for (std::size_t j = 0; j < num_actions; ++j) {
      result.policy.logits[j] += cfg.learning_rate * grad[j];
    }

    double mean_reward = 0.0;
    for (const double r : rewards) mean_reward += r;
    mean_reward /= static_cast<double>(g);
    result.curve.push_back(TrainStepStats{step, mean_reward, objective, kl});
  }
  return result;
}

}  // namespace mmrag
