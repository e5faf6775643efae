#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fixtures.hpp"
#include "mmsched/sac.hpp"

using namespace mmsched;
using namespace mmsched::testing;

namespace {

SacConfig small_config(int hidden = 16) {
  SacConfig c;
  c.hidden = {hidden, hidden};
  c.buffer_capacity = 10'000;
  return c;
}

Batch random_batch(std::size_t k, std::size_t n, Rng& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Transition> ts;
  for (std::size_t i = 0; i < n; ++i) {
    Transition t;
    for (std::size_t j = 0; j < k; ++j) {
      t.state.push_back(std::abs(u(rng)) * 3);
      t.action.push_back(scale * u(rng));
      t.next_state.push_back(std::abs(u(rng)) * 3);
    }
    t.reward = u(rng) > 0 ? 1.0 : 0.0;
    t.terminal = i % 3 == 0;
    ts.push_back(t);
  }
  return make_batch(ts);
}

Matrix noise(std::size_t k, std::size_t n, Rng& rng) {
  Matrix m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = g(rng);
  }
  return m;
}

// Output layer of `net` becomes exactly `bias` everywhere.
void make_constant(Mlp& net, const Vector& bias) {
  Vector& p = net.mutable_parameters();
  const std::size_t last = net.layer_count() - 1;
  const auto out = static_cast<Eigen::Index>(net.dims()[last + 1]);
  const auto in = static_cast<Eigen::Index>(net.dims()[last]);
  const Eigen::Index end = p.size();
  p.segment(end - out - out * in, out * in).setZero();
  p.tail(out) = bias;
}

}  // namespace

TEST(SquashedGaussian, HandEvaluatedExample) {
  EXPECT_NEAR(squashed_gaussian_log_prob(0.0, 0.0, 0.5), -0.80362, 1e-4);
  const double closed = -0.5 * 0.25 - 0.5 * std::log(2 * std::numbers::pi) -
                        std::log(1 - std::tanh(0.5) * std::tanh(0.5));
  EXPECT_NEAR(squashed_gaussian_log_prob(0.0, 0.0, 0.5), closed, 1e-12);
}

TEST(SquashedGaussian, StableJacobianForLargeInputs) {
  for (double u : {-40.0, -5.0, 0.0, 3.0, 50.0}) {
    const double j = tanh_log_jacobian(u);
    EXPECT_TRUE(std::isfinite(j));
    if (std::abs(u) < 5) EXPECT_NEAR(j, std::log(1 - std::tanh(u) * std::tanh(u)), 1e-10);
  }
}

TEST(SquashedGaussian, DensityIntegratesToOne) {
  // Change of variables back to a = scale * tanh(u); midpoint rule over (-scale, scale).
  for (double scale : {1.0, 0.3}) {
    for (auto [mean, log_std] : {std::pair{0.0, 0.0}, std::pair{0.7, -1.0}, std::pair{-1.5, 0.5}}) {
      const int cells = 400'000;
      const double h = 2.0 * scale / cells;
      double mass = 0.0;
      for (int i = 0; i < cells; ++i) {
        const double a = -scale + (i + 0.5) * h;
        const double u = std::atanh(a / scale);
        mass += std::exp(squashed_gaussian_log_prob(mean, log_std, u) - std::log(scale)) * h;
      }
      EXPECT_NEAR(mass, 1.0, 1e-3) << "scale " << scale << " mean " << mean;
    }
  }
}

TEST(SacAgent, SampleIsBoundedAndConsistent) {
  SacConfig c = small_config();
  c.action_scale = 0.3;
  const SacAgent agent(3, c, 9);
  Rng rng(1);
  const std::vector<double> s{0.5, 1.0, 2.0};
  for (int i = 0; i < 500; ++i) {
    const auto p = agent.sample_action(s, rng);
    ASSERT_TRUE(std::isfinite(p.log_prob));
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_LE(std::abs(p.action[j]), 0.3);
      EXPECT_DOUBLE_EQ(p.squashed[j], std::tanh(p.pre_squash[j]));
      EXPECT_DOUBLE_EQ(p.action[j], 0.3 * p.squashed[j]);
    }
  }
  const auto d = agent.sample_action(s, rng, true);
  EXPECT_TRUE(std::isnan(d.log_prob));
  EXPECT_EQ(d.action, agent.sample_action(s, rng, true).action);
  EXPECT_THROW(agent.sample_action(std::vector<double>{1.0}, rng), std::invalid_argument);
}

TEST(SacAgent, LogProbMatchesHeadForConstantPolicy) {
  SacConfig c = small_config(4);
  c.action_scale = 0.5;
  SacAgent agent(1, c, 3);
  Vector head(2);
  head << 0.2, -0.4;  // mean, log-std
  make_constant(agent.policy(), head);
  Rng rng(4);
  const auto p = agent.sample_action(std::vector<double>{1.0}, rng);
  const double expect = squashed_gaussian_log_prob(0.2, -0.4, p.pre_squash[0]) - std::log(0.5);
  EXPECT_NEAR(p.log_prob, expect, 1e-12);
}

TEST(SacAgent, LogStdIsClamped) {
  SacAgent agent(1, small_config(4), 3);
  Vector head(2);
  head << 0.0, 50.0;
  make_constant(agent.policy(), head);
  Rng rng(4);
  const auto p = agent.sample_action(std::vector<double>{1.0}, rng);
  EXPECT_NEAR(p.log_prob, squashed_gaussian_log_prob(0.0, 2.0, p.pre_squash[0]), 1e-12);
}

TEST(CriticTargets, TerminalTransitionsKeepOnlyReward) {
  SacAgent agent(2, small_config(), 5);
  Rng rng(1);
  Batch b = random_batch(2, 8, rng);
  b.terminals.setOnes();
  const Vector y = agent.critic_targets(b, rng);
  for (Eigen::Index i = 0; i < y.size(); ++i) EXPECT_DOUBLE_EQ(y[i], b.rewards[i]);
}

TEST(CriticTargets, ZeroDiscountKeepsOnlyReward) {
  SacConfig c = small_config();
  c.gamma = 0.0;
  SacAgent agent(2, c, 5);
  Rng rng(1);
  const Batch b = random_batch(2, 8, rng);
  const Vector y = agent.critic_targets(b, rng);
  for (Eigen::Index i = 0; i < y.size(); ++i) EXPECT_DOUBLE_EQ(y[i], b.rewards[i]);
}

TEST(CriticTargets, ConstantCriticsAndPolicy) {
  SacConfig c = small_config(4);
  c.alpha = 0.2;
  c.action_scale = 0.3;
  SacAgent agent(1, c, 5);
  make_constant(agent.target_q1(), Vector::Constant(1, 2.0));
  make_constant(agent.target_q2(), Vector::Constant(1, 1.5));
  Vector head(2);
  head << 0.1, -0.5;
  make_constant(agent.policy(), head);
  Rng rng(2);
  Batch b = random_batch(1, 6, rng);
  b.terminals.setZero();
  const Matrix eps = noise(1, 6, rng);
  const Vector y = agent.critic_targets(b, eps);
  for (Eigen::Index i = 0; i < 6; ++i) {
    const double u = 0.1 + std::exp(-0.5) * eps(0, i);
    const double lp = squashed_gaussian_log_prob(0.1, -0.5, u) - std::log(0.3);
    EXPECT_NEAR(y[i], b.rewards[i] + 1.5 - 0.2 * lp, 1e-12);
  }
}

TEST(PolicyLoss, GradientMatchesFiniteDifferences) {
  for (std::size_t k : {1u, 3u}) {
    SacConfig c = small_config(k == 1 ? 4 : 16);
    c.action_scale = 0.7;
    SacAgent agent(k, c, 21 + k);
    Rng rng(8);
    const Batch b = random_batch(k, 16, rng);
    const Matrix eps = noise(k, 16, rng);
    Vector grad;
    agent.policy_loss(b, eps, &grad);
    Vector& p = agent.policy().mutable_parameters();
    const double h = 1e-6;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double keep = p[i];
      p[i] = keep + h;
      const double up = agent.policy_loss(b, eps);
      p[i] = keep - h;
      const double down = agent.policy_loss(b, eps);
      p[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max({std::abs(grad[i]), std::abs(numeric), 1e-5});
      worst = std::max(worst, std::abs(grad[i] - numeric) / denom);
    }
    EXPECT_LT(worst, 1e-3) << "k=" << k;
  }
}

TEST(CriticLoss, GradientMatchesFiniteDifferences) {
  // Mean squared error against fixed targets, as used in the critic step.
  Rng rng(3);
  Mlp q({4, 16, 16, 1}, rng);
  const Batch b = random_batch(2, 12, rng);
  Matrix in(4, 12);
  in.topRows(2) = b.states;
  in.bottomRows(2) = b.actions;
  const Vector y = Vector::LinSpaced(12, -1.0, 2.0);
  auto loss = [&](const Mlp& net) {
    return (net.forward(in) - y.transpose()).squaredNorm() / 12.0;
  };
  MlpCache cache;
  const Matrix pred = q.forward(in, &cache);
  const Vector grad = q.backward(cache, (2.0 / 12.0) * (pred - y.transpose())).params;
  const double h = 1e-6;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double keep = q.parameters()[i];
    q.mutable_parameters()[i] = keep + h;
    const double up = loss(q);
    q.mutable_parameters()[i] = keep - h;
    const double down = loss(q);
    q.mutable_parameters()[i] = keep;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(grad[i] - numeric) / std::max({std::abs(grad[i]), std::abs(numeric), 1e-5}));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(SoftUpdate, Examples) {
  auto a = Mlp::zeros({1, 1});
  auto b = Mlp::zeros({1, 1});
  a.set_parameters(Vector::Constant(2, 0.0));
  b.set_parameters(Vector::Constant(2, 10.0));
  soft_update(a, b, 0.005);
  EXPECT_NEAR(a.parameters()[0], 0.05, 1e-15);
  soft_update(a, b, 1.0);
  EXPECT_EQ(a.parameters(), b.parameters());
  const Vector before = a.parameters();
  soft_update(a, a, 0.3);
  EXPECT_EQ(a.parameters(), before);
  EXPECT_THROW(soft_update(a, Mlp::zeros({2, 1}), 0.5), std::invalid_argument);
}

TEST(SacAgent, UpdateIsDeterministicGivenSeeds) {
  SacAgent a(2, small_config(), 17);
  SacAgent b(2, small_config(), 17);
  Rng data(5);
  const Batch batch = random_batch(2, 32, data);
  Rng ra(99), rb(99);
  for (int i = 0; i < 5; ++i) {
    const auto la = a.update(batch, ra);
    const auto lb = b.update(batch, rb);
    EXPECT_EQ(la.q1_loss, lb.q1_loss);
    EXPECT_EQ(la.policy_loss, lb.policy_loss);
  }
  EXPECT_EQ(a.policy().parameters(), b.policy().parameters());
  EXPECT_EQ(a.target_q2().parameters(), b.target_q2().parameters());
}

TEST(SacAgent, UpdateMovesTargetsSlowly) {
  SacAgent agent(2, small_config(), 17);
  const Vector before = agent.target_q1().parameters();
  Rng rng(5);
  agent.update(random_batch(2, 32, rng), rng);
  const Vector online = agent.q1().parameters();
  const Vector expect = 0.005 * online + 0.995 * before;
  EXPECT_LE((agent.target_q1().parameters() - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SacAgent, InvalidConfigRejected) {
  SacConfig c = small_config();
  c.alpha = 0.0;
  EXPECT_THROW(SacAgent(2, c, 1), std::invalid_argument);
  c = small_config();
  c.buffer_capacity = 4;
  EXPECT_THROW(SacAgent(2, c, 1), std::invalid_argument);
  EXPECT_THROW(SacAgent(0, small_config(), 1), std::invalid_argument);
}

TEST(Train, ZeroEpisodesIsNoOp) {
  SacAgent agent(2, small_config(), 1);
  SchedulingEnv env(diamond(1, 1, 1, 1), diamond_paths(), EnvConfig{}, 1);
  Rng rng(1);
  const Vector before = agent.policy().parameters();
  EXPECT_TRUE(train(agent, env, 0, rng).empty());
  EXPECT_EQ(agent.policy().parameters(), before);
  EXPECT_EQ(agent.buffer().size(), 0u);
}

TEST(Train, LearnsSinglePathToy) {
  // One path of capacity 2, desired rate 1.2: the policy must learn to push
  // the rate up and never overshoot 2.
  EnvConfig ec;
  ec.horizon = 60;
  ec.action_scale = 0.3;
  SacConfig c = small_config(32);
  c.action_scale = 0.3;
  c.optimizer.learning_rate = 1e-3;
  SacAgent agent(1, c, 7);
  SchedulingEnv env(line({2.0}), PathSet({line_path(1)}), ec, 7);
  Rng rng(7);
  const auto log = train(agent, env, 40, rng);
  ASSERT_EQ(log.size(), 40u);
  int reached = 0;
  for (std::size_t e = 30; e < 40; ++e) reached += log[e].episode_reward > 0 ? 1 : 0;
  EXPECT_GE(reached, 8);
  Rng erng(1);
  EXPECT_GE(evaluate(agent, env, 5, erng), 1.2);
}

TEST(Train, HooksSeeEveryStep) {
  SacAgent agent(2, small_config(), 1);
  EnvConfig ec;
  ec.horizon = 20;
  SchedulingEnv env(diamond(1, 1, 1, 1), diamond_paths(), ec, 1);
  Rng rng(1);
  int steps = 0;
  int episodes = 0;
  TrainHooks hooks;
  hooks.on_step = [&](const SchedulingEnv&, const StepResult&) { ++steps; };
  hooks.on_episode = [&](const EpisodeStats&) { ++episodes; };
  const auto log = train(agent, env, 3, rng, hooks);
  int total = 0;
  for (const auto& s : log) total += s.steps_taken;
  EXPECT_EQ(steps, total);
  EXPECT_EQ(episodes, 3);
  EXPECT_EQ(agent.buffer().size(), static_cast<std::size_t>(total));
}

TEST(Train, ActionScaleMismatchRejected) {
  SacConfig c = small_config();
  c.action_scale = 0.5;
  SacAgent agent(2, c, 1);
  SchedulingEnv env(diamond(1, 1, 1, 1), diamond_paths(), EnvConfig{}, 1);
  Rng rng(1);
  EXPECT_THROW(train(agent, env, 1, rng), std::invalid_argument);
}

TEST(Evaluate, AllZeroPolicyGivesZeroRate) {
  // Mean 0 with tiny spread: every scaled action is below the clip threshold.
  SacAgent agent(2, small_config(4), 1);
  Vector head(4);
  head << 0, 0, -20, -20;
  make_constant(agent.policy(), head);
  EnvConfig ec;
  ec.horizon = 25;
  SchedulingEnv env(diamond(1, 1, 1, 1), diamond_paths(), ec, 1);
  env.reset(0);
  Rng rng(1);
  EXPECT_EQ(evaluate(agent, env, 3, rng), 0.0);
  EXPECT_EQ(evaluate(agent, env, 1, rng, true), 0.0);
}

TEST(Evaluate, LeavesAgentUntouched) {
  SacAgent agent(2, small_config(), 1);
  EnvConfig ec;
  ec.horizon = 25;
  SchedulingEnv env(diamond(1, 1, 1, 1), diamond_paths(), ec, 1);
  env.reset(0);
  const Vector before = agent.policy().parameters();
  Rng rng(1);
  evaluate(agent, env, 2, rng);
  EXPECT_EQ(agent.policy().parameters(), before);
  EXPECT_EQ(agent.buffer().size(), 0u);
}

TEST(Checkpoint, ResumeIsBitExact) {
  EnvConfig ec;
  ec.horizon = 30;
  ec.action_scale = 0.3;
  SacConfig c = small_config();
  c.action_scale = 0.3;
  const Network net = diamond(1, 1, 1, 1);

  // Straight run: 4 episodes.
  SacAgent a(2, c, 3);
  SchedulingEnv env_a(net, diamond_paths(), ec, 3);
  Rng ra(3);
  train(a, env_a, 4, ra);

  // Interrupted run: 2 episodes, save agent and RNG, reload, 2 more.
  SacAgent b(2, c, 3);
  SchedulingEnv env_b(net, diamond_paths(), ec, 3);
  Rng rb(3);
  train(b, env_b, 2, rb);
  std::stringstream ckpt;
  b.save(ckpt);
  std::stringstream rng_state;
  rng_state << rb;
  SacAgent b2 = SacAgent::load(ckpt);
  Rng rb2;
  rng_state >> rb2;
  train(b2, env_b, 2, rb2, {}, 2);

  EXPECT_EQ(a.policy().parameters(), b2.policy().parameters());
  EXPECT_EQ(a.q1().parameters(), b2.q1().parameters());
  EXPECT_EQ(a.target_q2().parameters(), b2.target_q2().parameters());
  EXPECT_EQ(a.policy_optimizer().step_count, b2.policy_optimizer().step_count);
  EXPECT_EQ(a.buffer().size(), b2.buffer().size());
}

TEST(Checkpoint, BadMagicRejected) {
  std::stringstream ss("definitely not a checkpoint");
  EXPECT_THROW(SacAgent::load(ss), std::runtime_error);
}
