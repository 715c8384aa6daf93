#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mmrag {

struct GrpoConfig {
  int group_size = 5;
  double clip_epsilon = 0.2;
  double kl_coef = 0.04;
  double learning_rate = 0.1;
  int steps = 600;
  double sample_temperature = 0.7;
  std::uint64_t seed = 0;
};

/// Throws Error("config_invalid", ...) naming the offending field.
void validate(const GrpoConfig& cfg);

/// One sampled group: per-rollout rewards, probability ratios against the
/// pre-update policy, group-normalized advantages, and the KL penalty value.
struct GrpoGroup {
  std::vector<double> rewards;
  std::vector<double> ratios;
  std::vector<double> advantages;
  double kl_value = 0.0;
};

/// Group-relative advantages: (r_i - mean) / population_std. Groups with
/// population std below 1e-8 yield all-zero advantages. Errors on fewer
/// than 2 rewards.
std::vector<double> compute_advantages(std::span<const double> rewards);

inline constexpr double kAdvantageStdFloor = 1e-8;

/// min(rho * A, clip(rho, 1-eps, 1+eps) * A). Errors on rho <= 0 or
/// eps <= 0.
double clipped_term(double rho, double advantage, double epsilon);

/// (1/G) * sum_i clipped_term(rho_i, A_i, eps) - kl_coef * kl_value.
/// Errors when the group length differs from cfg.group_size.
double grpo_objective(const GrpoGroup& group, const GrpoConfig& cfg);

/// KL(p || q) = sum p * log(p / q) over categorical distributions. Both
/// must sum to 1 within 1e-9 and q must be positive wherever p is.
double categorical_kl(std::span<const double> p, std::span<const double> q);

/// Softmax of logits / temperature (numerically stabilized).
std::vector<double> softmax(std::span<const double> logits, double temperature);

/// Categorical policy over a finite set of query-rewrite templates.
struct ToyPolicy {
  std::vector<double> logits;
  std::vector<std::string> action_names;

  std::vector<double> probabilities(double temperature = 1.0) const {
    return softmax(logits, temperature);
  }
};

/// Inputs for the analytic gradient of the clipped surrogate with KL
/// penalty, for a temperature-scaled categorical softmax policy. theta is
/// the point of differentiation; theta_old defines the sampling policy
/// the ratios are taken against.
struct PolicyGradientInput {
  std::span<const double> theta;
  std::span<const double> theta_old;
  std::span<const double> ref_probs;
  std::span<const std::size_t> actions;
  std::span<const double> advantages;
  double temperature = 1.0;
  double clip_epsilon = 0.2;
  double kl_coef = 0.0;
};

/// J(theta): (1/G) sum_i min(rho_i A_i, clip(rho_i) A_i) - beta * KL.
double surrogate_objective(const PolicyGradientInput& input);

/// dJ/dtheta, exact for the categorical policy (clipped branches
/// contribute zero gradient; ties pick the unclipped branch).
std::vector<double> policy_gradient(const PolicyGradientInput& input);

/// Deterministic environment over query-rewrite templates: applying an
/// action to a query yields a rollout whose reward comes from the full
/// format + retrieval reward pipeline.
class RewriteEnv {
 public:
  virtual ~RewriteEnv() = default;
  virtual std::size_t action_count() const = 0;
  virtual const std::string& action_name(std::size_t action) const = 0;
  virtual std::size_t query_count() const = 0;
  virtual double rollout_reward(std::size_t query_index, std::size_t action) const = 0;
};

struct TrainStepStats {
  int step = 0;
  double mean_reward = 0.0;
  double objective = 0.0;
  double kl = 0.0;
};

struct TrainResult {
  ToyPolicy policy;
  std::vector<TrainStepStats> curve;
};

/// Gradient-ascent loop: each step samples G actions for the next query
/// (round-robin) from softmax(logits / temperature), scores them through
/// the environment, normalizes the rewards into advantages, and applies
/// one analytic-gradient step. The KL reference is the initial policy.
/// Fully deterministic under cfg.seed.
TrainResult train_toy_policy(const RewriteEnv& env, const GrpoConfig& cfg);

}  // namespace mmrag
