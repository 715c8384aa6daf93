#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mmrag/error.hpp"
#include "mmrag/grpo.hpp"
#include "mmrag/toy_env.hpp"
#include "support/test_util.hpp"

using namespace mmrag;

namespace {

// Forced-ordering environment: one dominant template rewrites the query
// into exactly the gold document's text (rank 1, reward +5); the others
// rewrite into distractor-flooded text whose gold rank falls past the
// 200-entity reward depth (miss, reward -1.5); one malformed template
// earns the double penalty (-6.5).
ToyEnvSpec forced_ordering_spec(bool with_malformed = false) {
  ToyEnvSpec spec;
  spec.templates.push_back({"exact", "gold document text alpha beta", false});
  spec.templates.push_back({"noise-a", "zzz", false});
  spec.templates.push_back({"noise-b", "zzz yyy", false});
  if (with_malformed) spec.templates.push_back({"broken", "{query}", true});
  spec.queries.push_back({"which species is this", "GOLD"});
  spec.documents.push_back({"GOLD", "gold document text alpha beta"});
  for (int i = 0; i < 230; ++i) {
    spec.documents.push_back({"D" + std::to_string(i),
                              "zzz yyy filler" + std::to_string(i)});
  }
  return spec;
}

}  // namespace

TEST_CASE("advantages: hand-computed example") {
  const auto a = compute_advantages(std::vector<double>{1, 2, 3});
  // mean 2, population std sqrt(2/3)
  const double expected = 1.0 / std::sqrt(2.0 / 3.0);
  REQUIRE(a.size() == 3);
  CHECK(a[0] == doctest::Approx(-expected).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(0.0));
  CHECK(a[2] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("advantages: zero-variance guard and two-point case") {
  const auto zeros = compute_advantages(std::vector<double>{5, 5, 5, 5});
  for (const double v : zeros) CHECK(v == 0.0);

  const auto pair = compute_advantages(std::vector<double>{4.5, -6.5});
  CHECK(pair[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pair[1] == doctest::Approx(-1.0).epsilon(1e-12));

  CHECK_THROWS_AS(compute_advantages(std::vector<double>{1.0}), Error);
}

TEST_CASE("advantages: normalized to mean 0 / std 1 over random groups") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.next_below(63);
    std::vector<double> rewards(n);
    for (double& r : rewards) r = 10.0 * rng.next_unit() - 5.0;
    const auto a = compute_advantages(rewards);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double var = 0.0;
    for (const double v : a) var += (v - mean) * (v - mean);
    const double stddev = std::sqrt(var / n);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(stddev - 1.0) < 1e-9);
  }
}

TEST_CASE("clipped_term examples") {
  CHECK(clipped_term(1.5, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(clipped_term(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
  CHECK(clipped_term(1.0, 3.7, 0.2) == doctest::Approx(3.7));
  CHECK(clipped_term(1.0, -2.2, 0.05) == doctest::Approx(-2.2));
  CHECK_THROWS_AS(clipped_term(0.0, 1.0, 0.2), Error);
  CHECK_THROWS_AS(clipped_term(-1.0, 1.0, 0.2), Error);
}

TEST_CASE("clipped_term pessimism") {
  SplitMix64 rng(37);
  for (int trial = 0; trial < 500; ++trial) {
    const double rho = 0.01 + 3.0 * rng.next_unit();
    const double advantage = 6.0 * rng.next_unit() - 3.0;
    const double eps = 0.05 + rng.next_unit();
    const double term = clipped_term(rho, advantage, eps);
    const double clipped_rho = std::clamp(rho, 1.0 - eps, 1.0 + eps);
    if (advantage >= 0) {
      CHECK(term <= rho * advantage + 1e-15);
    } else {
      CHECK(term <= clipped_rho * advantage + 1e-15);
    }
  }
}

TEST_CASE("grpo_objective: plug-in evaluation") {
  GrpoConfig cfg;
  cfg.group_size = 2;
  cfg.clip_epsilon = 0.2;
  cfg.kl_coef = 0.1;

  GrpoGroup group;
  group.rewards = {1.0, -1.0};
  group.ratios = {1.5, 0.5};
  group.advantages = {1.0, -1.0};
  group.kl_value = 0.5;
  // (1.2 + (-0.8)) / 2 - 0.1 * 0.5 = 0.15
  CHECK(grpo_objective(group, cfg) == doctest::Approx(0.15).epsilon(1e-12));

  GrpoGroup symmetric;
  symmetric.rewards = {1.0, -1.0};
  symmetric.ratios = {1.0, 1.0};
  symmetric.advantages = {1.0, -1.0};
  symmetric.kl_value = 0.0;
  CHECK(grpo_objective(symmetric, cfg) == doctest::Approx(0.0));

  GrpoGroup wrong_size;
  wrong_size.rewards = {1.0};
  wrong_size.ratios = {1.0};
  wrong_size.advantages = {1.0};
  CHECK_THROWS_AS(grpo_objective(wrong_size, cfg), Error);
}

TEST_CASE("grpo_objective strictly decreases in kl for kl_coef > 0") {
  GrpoConfig cfg;
  cfg.group_size = 3;
  cfg.kl_coef = 0.04;
  GrpoGroup group;
  group.rewards = {1.0, 2.0, 0.5};
  group.ratios = {1.1, 0.9, 1.0};
  group.advantages = {0.5, 1.0, -1.5};
  group.kl_value = 0.0;
  double previous = grpo_objective(group, cfg);
  for (double kl = 0.1; kl < 1.0; kl += 0.1) {
    group.kl_value = kl;
    const double current = grpo_objective(group, cfg);
    CHECK(current < previous);
    previous = current;
  }
}

TEST_CASE("categorical_kl examples") {
  CHECK(categorical_kl(std::vector<double>{0.5, 0.5},
                       std::vector<double>{0.5, 0.5}) == doctest::Approx(0.0));
  CHECK(categorical_kl(std::vector<double>{1.0, 0.0},
                       std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(categorical_kl(std::vector<double>{0.5, 0.5},
                                      std::vector<double>{1.0, 0.0}),
                       doctest::Contains("positive"), Error);
  CHECK_THROWS_AS(categorical_kl(std::vector<double>{0.6, 0.6},
                                 std::vector<double>{0.5, 0.5}),
                  Error);
}

TEST_CASE("categorical_kl is non-negative and zero iff equal") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next_below(8);
    std::vector<double> p(n), q(n);
    double ps = 0.0, qs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = 0.05 + rng.next_unit();
      q[i] = 0.05 + rng.next_unit();
      ps += p[i];
      qs += q[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      p[i] /= ps;
      q[i] /= qs;
    }
    CHECK(categorical_kl(p, q) >= 0.0);
    CHECK(categorical_kl(p, p) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("analytic policy gradient matches central finite differences") {
  SplitMix64 rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 3 + rng.next_below(4);
    std::vector<double> theta(k), theta_old(k);
    for (std::size_t i = 0; i < k; ++i) {
      theta[i] = 2.0 * rng.next_unit() - 1.0;
      theta_old[i] = 2.0 * rng.next_unit() - 1.0;  // ratios far from 1: clip paths hit
    }
    const std::vector<double> ref = softmax(theta_old, 1.0);

    const std::size_t g = 4 + rng.next_below(5);
    std::vector<std::size_t> actions(g);
    std::vector<double> advantages(g);
    for (std::size_t i = 0; i < g; ++i) {
      actions[i] = rng.next_below(k);
      advantages[i] = 4.0 * rng.next_unit() - 2.0;
    }

    PolicyGradientInput input;
    input.theta = theta;
    input.theta_old = theta_old;
    input.ref_probs = ref;
    input.actions = actions;
    input.advantages = advantages;
    input.temperature = 0.7;
    input.clip_epsilon = 0.2;
    input.kl_coef = 0.04;

    const std::vector<double> grad = policy_gradient(input);

    const double h = 1e-6;
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> plus = theta, minus = theta;
      plus[j] += h;
      minus[j] -= h;
      PolicyGradientInput in_plus = input, in_minus = input;
      in_plus.theta = plus;
      in_minus.theta = minus;
      const double fd =
          (surrogate_objective(in_plus) - surrogate_objective(in_minus)) / (2 * h);
      CHECK(grad[j] == doctest::Approx(fd).epsilon(5e-4));
    }
  }
}

TEST_CASE("one step from uniform equals REINFORCE-with-baseline direction") {
  // beta = 0, clip never active at rho = 1: the update direction must be
  // (1/G) sum_i A_i * (1/tau) * (e_{a_i} - pi).
  const std::size_t k = 4;
  const std::vector<double> theta(k, 0.0);
  const std::vector<double> probs = softmax(theta, 0.7);
  const std::vector<std::size_t> actions = {0, 2, 2, 3, 1};
  const std::vector<double> rewards = {5.0, -1.5, -1.5, -1.5, 5.0};
  const std::vector<double> advantages = compute_advantages(rewards);

  PolicyGradientInput input;
  input.theta = theta;
  input.theta_old = theta;
  input.ref_probs = probs;
  input.actions = actions;
  input.advantages = advantages;
  input.temperature = 0.7;
  input.clip_epsilon = 1e9;  // clip disabled
  input.kl_coef = 0.0;

  const std::vector<double> grad = policy_gradient(input);
  for (std::size_t j = 0; j < k; ++j) {
    double reinforce = 0.0;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      reinforce += advantages[i] * ((actions[i] == j ? 1.0 : 0.0) - probs[j]) / 0.7;
    }
    reinforce /= static_cast<double>(actions.size());
    CHECK(grad[j] == doctest::Approx(reinforce).epsilon(1e-12));
  }
}

TEST_CASE("toy env: enumerated per-action rewards match the construction") {
  const TemplateRewriteEnv env(forced_ordering_spec(true), 7);
  REQUIRE(env.action_count() == 4);
  REQUIRE(env.query_count() == 1);

  // dominant template: exact text match -> rank 1 -> +4 + 1
  CHECK(env.rollout_reward(0, 0) == doctest::Approx(5.0));
  // noise templates: gold rank beyond 200 distinct entities -> -2.5 + 1
  CHECK(env.rollout_reward(0, 1) == doctest::Approx(-1.5));
  CHECK(env.rollout_reward(0, 2) == doctest::Approx(-1.5));
  // malformed template: -4 format, retrieval skipped -> -6.5
  CHECK(env.rollout_reward(0, 3) == doctest::Approx(-6.5));

  const RewardRecord best = env.score_rollout(0, 0);
  CHECK(best.hit_rank == 1);
  const RewardRecord miss = env.score_rollout(0, 1);
  CHECK_FALSE(miss.hit_rank.has_value());
}

TEST_CASE("toy env spec parsing and validation") {
  CHECK_THROWS_AS(parse_toy_env_spec("not json"), Error);
  CHECK_THROWS_AS(parse_toy_env_spec("{}"), Error);
  CHECK_THROWS_AS(
      parse_toy_env_spec(
          R"({"templates":[{"name":"only","pattern":"{query}"}],)"
          R"("queries":[{"text":"q","gold_entity":"E"}],)"
          R"("documents":[{"entity_id":"E","text":"t"}]})"),
      Error);

  const ToyEnvSpec spec = parse_toy_env_spec(
      R"({"templates":[{"name":"a","pattern":"{query}"},{"name":"b","pattern":"x {query} y","malformed":true}],)"
      R"("queries":[{"text":"q1","gold_entity":"E"}],)"
      R"("documents":[{"entity_id":"E","text":"doc text"}]})");
  CHECK(spec.templates.size() == 2);
  CHECK(spec.templates[1].malformed);

  const TemplateRewriteEnv env(spec, 1);
  CHECK(env.rewritten_query(0, 1) == "x q1 y");
  CHECK(env.rollout_text(0, 0).find("</answer>") != std::string::npos);
  CHECK(env.rollout_text(0, 1).find("</answer>") == std::string::npos);
}

TEST_CASE("training learns the dominant template and is seed-deterministic") {
  const TemplateRewriteEnv env(forced_ordering_spec(false), 11);
  GrpoConfig cfg;
  cfg.group_size = 5;
  cfg.sample_temperature = 0.7;
  cfg.steps = 200;
  cfg.seed = 123;

  const TrainResult first = train_toy_policy(env, cfg);
  REQUIRE(first.curve.size() == 200);

  const auto probs = first.policy.probabilities(cfg.sample_temperature);
  const std::size_t argmax =
      std::max_element(probs.begin(), probs.end()) - probs.begin();
  CHECK(argmax == 0);

  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 50; ++i) head += first.curve[i].mean_reward;
  for (int i = 150; i < 200; ++i) tail += first.curve[i].mean_reward;
  CHECK(tail / 50.0 > head / 50.0);

  const TrainResult second = train_toy_policy(env, cfg);
  REQUIRE(second.curve.size() == first.curve.size());
  for (std::size_t i = 0; i < first.curve.size(); ++i) {
    CHECK(second.curve[i].mean_reward == first.curve[i].mean_reward);
    CHECK(second.curve[i].objective == first.curve[i].objective);
    CHECK(second.curve[i].kl == first.curve[i].kl);
  }
  CHECK(second.policy.logits == first.policy.logits);

  GrpoConfig other_seed = cfg;
  other_seed.seed = 124;
  const TrainResult third = train_toy_policy(env, other_seed);
  CHECK(third.policy.logits != first.policy.logits);
}

TEST_CASE("training rejects degenerate environments") {
  // Spec with two templates passes construction; a single-action env must
  // be rejected by the trainer.
  class OneActionEnv final : public RewriteEnv {
   public:
    std::size_t action_count() const override { return 1; }
    const std::string& action_name(std::size_t) const override { return name_; }
    std::size_t query_count() const override { return 1; }
    double rollout_reward(std::size_t, std::size_t) const override { return 0.0; }

   private:
    std::string name_ = "only";
  };
  const OneActionEnv env;
  CHECK_THROWS_WITH_AS(train_toy_policy(env, GrpoConfig{}),
                       doctest::Contains("actions"), Error);
}

TEST_CASE("grpo config validation names fields") {
  GrpoConfig cfg;
  cfg.group_size = 1;
  CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("group_size"), Error);
  cfg = GrpoConfig{};
  cfg.sample_temperature = 0.0;
  CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("sample_temperature"), Error);
}
