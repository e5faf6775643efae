#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mmsched/env.hpp"
#include "mmsched/neural.hpp"

namespace mmsched {

struct SacConfig {
  std::vector<int> hidden{256, 256};
  /// Fixed entropy temperature.
  double alpha = 0.2;
  double gamma = 1.0;
  double tau = 0.005;
  AdamConfig optimizer{};
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 1'000'000;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  double action_scale = 1.0;
  int grad_steps_per_env_step = 1;

  void validate() const;
};

struct PolicySample {
  std::vector<double> pre_squash;
  /// tanh(pre_squash), in [-1, 1]; what the environment consumes.
  std::vector<double> squashed;
  /// squashed * action_scale; what the critics see.
  std::vector<double> action;
  /// Log-density of `action`; NaN in deterministic mode.
  double log_prob = 0.0;
};

struct LossReport {
  double q1_loss = 0.0;
  double q2_loss = 0.0;
  double policy_loss = 0.0;
};

/// log(1 - tanh(u)^2) evaluated as 2 (log 2 - u - softplus(-2u)).
double tanh_log_jacobian(double u);

/// Log-density of the squashed Gaussian at pre-squash point `u` for one
/// dimension, excluding the action-scale term.
double squashed_gaussian_log_prob(double mean, double log_std, double u);

/// Polyak average: target <- tau * online + (1 - tau) * target.
void soft_update(Mlp& target, const Mlp& online, double tau);

/// Soft actor-critic with a tanh-squashed Gaussian policy, twin critics and
/// Polyak-averaged target critics. Owns its replay buffer.
class SacAgent {
 public:
  SacAgent(std::size_t k, SacConfig cfg, std::uint64_t seed);

  std::size_t k() const { return k_; }
  const SacConfig& config() const { return cfg_; }

  PolicySample sample_action(std::span<const double> state, Rng& rng,
                             bool deterministic = false) const;

  /// Soft Bellman targets with next actions drawn from the current policy.
  Vector critic_targets(const Batch& batch, Rng& rng) const;
  /// Same, with the reparameterization noise supplied (k x batch).
  Vector critic_targets(const Batch& batch, const Matrix& noise) const;

  /// Mean of alpha * log pi(a|s) - min(Q1, Q2)(s, a) over the batch with
  /// reparameterized actions a = scale * tanh(mean + std * noise). When `grad`
  /// is given it receives the gradient with respect to the policy parameters.
  double policy_loss(const Batch& batch, const Matrix& noise, Vector* grad = nullptr) const;

  /// One critic step, one policy step and a soft target update.
  LossReport update(const Batch& batch, Rng& rng);

  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  const Mlp& policy() const { return policy_; }
  const Mlp& q1() const { return q1_; }
  const Mlp& q2() const { return q2_; }
  const Mlp& target_q1() const { return target_q1_; }
  const Mlp& target_q2() const { return target_q2_; }
  Mlp& policy() { return policy_; }
  Mlp& q1() { return q1_; }
  Mlp& q2() { return q2_; }
  Mlp& target_q1() { return target_q1_; }
  Mlp& target_q2() { return target_q2_; }
  const AdamState& policy_optimizer() const { return policy_opt_; }
  const AdamState& q1_optimizer() const { return q1_opt_; }
  const AdamState& q2_optimizer() const { return q2_opt_; }

  /// Checkpoint: config, the five networks, three optimizers and the replay buffer.
  void save(std::ostream& os) const;
  static SacAgent load(std::istream& is);
  void save_file(const std::string& path) const;
  static SacAgent load_file(const std::string& path);

 private:
  SacAgent(std::size_t k, SacConfig cfg);

  struct PolicyHead {
    Matrix mean;
    Matrix log_std;
    Matrix raw_log_std;
  };
  PolicyHead split_head(const Matrix& out) const;
  Matrix critic_input(const Matrix& states, const Matrix& actions) const;

  std::size_t k_;
  SacConfig cfg_;
  Mlp policy_, q1_, q2_, target_q1_, target_q2_;
  AdamState policy_opt_, q1_opt_, q2_opt_;
  ReplayBuffer buffer_;
};

struct EpisodeStats {
  int episode = 0;
  int steps_taken = 0;
  double episode_reward = 0.0;
  double final_sum_rate = 0.0;
  double desired_rate = 0.0;
  double avg_rate_this_episode = 0.0;
};

struct TrainHooks {
  std::function<void(const SchedulingEnv&, const StepResult&)> on_step;
  /// Runs after each episode, before the next reset.
  std::function<void(const EpisodeStats&)> on_episode;
};

/// Episodes `first_episode .. first_episode + episodes - 1`: reset, act,
/// store transitions, and update once the buffer holds a minibatch.
std::vector<EpisodeStats> train(SacAgent& agent, SchedulingEnv& env, int episodes, Rng& rng,
                                const TrainHooks& hooks = {}, int first_episode = 0);

/// Mean final sum-rate over `repeats` rollouts from the zero state. No
/// transitions are stored, no parameters change, and the network is frozen.
double evaluate(const SacAgent& agent, SchedulingEnv& env, int repeats, Rng& rng,
                bool deterministic = false);

void write_training_log_csv(std::ostream& os, const std::vector<EpisodeStats>& log);

}  // namespace mmsched
