#include "mmsched/sac.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mmsched/metrics.hpp"

namespace mmsched {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = std::normal_distribution<double>(0.0, 1.0)(rng);
  }
  return m;
}

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

constexpr char kCheckpointMagic[8] = {'M', 'M', 'S', 'A', 'C', 'C', 'K', '1'};

}  // namespace

void SacConfig::validate() const {
  if (hidden.empty()) throw std::invalid_argument("SAC needs at least one hidden layer");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in (0, 1]");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (buffer_capacity < batch_size) throw std::invalid_argument("buffer smaller than a minibatch");
  if (!(log_std_min < log_std_max)) throw std::invalid_argument("log-std bounds out of order");
  if (!(action_scale > 0.0)) throw std::invalid_argument("action_scale must be > 0");
  if (grad_steps_per_env_step < 0) throw std::invalid_argument("grad steps must be >= 0");
}

double tanh_log_jacobian(double u) { return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u)); }

double squashed_gaussian_log_prob(double mean, double log_std, double u) {
  const double z = (u - mean) / std::exp(log_std);
  return -0.5 * z * z - log_std - kHalfLog2Pi - tanh_log_jacobian(u);
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (!target.same_shape(online)) throw std::invalid_argument("soft_update: shape mismatch");
  auto& t = target.mutable_parameters();
  t = tau * online.parameters() + (1.0 - tau) * t;
}

// ---------------------------------------------------------------------------
// SacAgent

SacAgent::SacAgent(std::size_t k, SacConfig cfg)
    : k_(k), cfg_(std::move(cfg)), buffer_(cfg_.buffer_capacity) {
  if (k == 0) throw std::invalid_argument("SAC needs k >= 1");
  cfg_.validate();
}

SacAgent::SacAgent(std::size_t k, SacConfig cfg, std::uint64_t seed) : SacAgent(k, std::move(cfg)) {
  Rng init(seed);
  const int ki = static_cast<int>(k_);
  std::vector<int> pdims{ki};
  std::vector<int> qdims{2 * ki};
  for (int h : cfg_.hidden) {
    pdims.push_back(h);
    qdims.push_back(h);
  }
  pdims.push_back(2 * ki);
  qdims.push_back(1);
  policy_ = Mlp(pdims, init);
  q1_ = Mlp(qdims, init);
  q2_ = Mlp(qdims, init);
  target_q1_ = q1_;
  target_q2_ = q2_;
  policy_opt_ = AdamState(policy_.parameter_count(), cfg_.optimizer);
  q1_opt_ = AdamState(q1_.parameter_count(), cfg_.optimizer);
  q2_opt_ = AdamState(q2_.parameter_count(), cfg_.optimizer);
}

SacAgent::PolicyHead SacAgent::split_head(const Matrix& out) const {
  const auto k = static_cast<Eigen::Index>(k_);
  if (!out.allFinite()) throw std::domain_error("policy network produced non-finite outputs");
  PolicyHead h;
  h.mean = out.topRows(k);
  h.raw_log_std = out.bottomRows(k);
  h.log_std = h.raw_log_std.cwiseMax(cfg_.log_std_min).cwiseMin(cfg_.log_std_max);
  return h;
}

Matrix SacAgent::critic_input(const Matrix& states, const Matrix& actions) const {
  Matrix in(states.rows() + actions.rows(), states.cols());
  in.topRows(states.rows()) = states;
  in.bottomRows(actions.rows()) = actions;
  return in;
}

PolicySample SacAgent::sample_action(std::span<const double> state, Rng& rng,
                                     bool deterministic) const {
  if (state.size() != k_) throw std::invalid_argument("sample_action: state size mismatch");
  const auto k = static_cast<Eigen::Index>(k_);
  Matrix s = Eigen::Map<const Matrix>(state.data(), k, 1);
  const auto head = split_head(policy_.forward(s));

  PolicySample out;
  out.pre_squash.resize(k_);
  out.squashed.resize(k_);
  out.action.resize(k_);
  double lp = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double mu = head.mean(j, 0);
    double u = mu;
    if (!deterministic) {
      u = mu + std::exp(head.log_std(j, 0)) * std::normal_distribution<double>(0.0, 1.0)(rng);
      lp += squashed_gaussian_log_prob(mu, head.log_std(j, 0), u);
    }
    const auto ju = static_cast<std::size_t>(j);
    out.pre_squash[ju] = u;
    out.squashed[ju] = std::tanh(u);
    out.action[ju] = cfg_.action_scale * out.squashed[ju];
  }
  out.log_prob = deterministic ? std::numeric_limits<double>::quiet_NaN()
                               : lp - static_cast<double>(k_) * std::log(cfg_.action_scale);
  return out;
}

Vector SacAgent::critic_targets(const Batch& batch, Rng& rng) const {
  return critic_targets(batch, standard_normal(static_cast<Eigen::Index>(k_),
                                               static_cast<Eigen::Index>(batch.size()), rng));
}

Vector SacAgent::critic_targets(const Batch& batch, const Matrix& noise) const {
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto head = split_head(policy_.forward(batch.next_states));
  const Matrix u = head.mean.array() + head.log_std.array().exp() * noise.array();
  Matrix a = cfg_.action_scale * u.array().tanh();
  Vector logp(n);
  const double scale_term = static_cast<double>(k_) * std::log(cfg_.action_scale);
  for (Eigen::Index c = 0; c < n; ++c) {
    double lp = -scale_term;
    for (Eigen::Index j = 0; j < u.rows(); ++j) {
      lp += -0.5 * noise(j, c) * noise(j, c) - head.log_std(j, c) - kHalfLog2Pi -
            tanh_log_jacobian(u(j, c));
    }
    logp[c] = lp;
  }
  const Matrix in = critic_input(batch.next_states, a);
  const Matrix t1 = target_q1_.forward(in);
  const Matrix t2 = target_q2_.forward(in);
  Vector y(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const double soft_v = std::min(t1(0, c), t2(0, c)) - cfg_.alpha * logp[c];
    y[c] = batch.rewards[c] + cfg_.gamma * (1.0 - batch.terminals[c]) * soft_v;
  }
  return y;
}

double SacAgent::policy_loss(const Batch& batch, const Matrix& noise, Vector* grad) const {
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto k = static_cast<Eigen::Index>(k_);
  if (noise.rows() != k || noise.cols() != n) throw std::invalid_argument("noise shape mismatch");
  const double inv_n = 1.0 / static_cast<double>(n);

  MlpCache pcache;
  const auto head = split_head(policy_.forward(batch.states, &pcache));
  const Matrix sigma = head.log_std.array().exp();
  const Matrix u = head.mean.array() + sigma.array() * noise.array();
  const Matrix t = u.array().tanh();
  const Matrix a = cfg_.action_scale * t;

  MlpCache c1;
  MlpCache c2;
  const Matrix in = critic_input(batch.states, a);
  const Matrix v1 = q1_.forward(in, &c1);
  const Matrix v2 = q2_.forward(in, &c2);

  const double scale_term = static_cast<double>(k_) * std::log(cfg_.action_scale);
  double loss = 0.0;
  Matrix g1 = Matrix::Zero(1, n);
  Matrix g2 = Matrix::Zero(1, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    double lp = -scale_term;
    for (Eigen::Index j = 0; j < k; ++j) {
      lp += -0.5 * noise(j, c) * noise(j, c) - head.log_std(j, c) - kHalfLog2Pi -
            tanh_log_jacobian(u(j, c));
    }
    const bool first = v1(0, c) <= v2(0, c);
    loss += cfg_.alpha * lp - (first ? v1(0, c) : v2(0, c));
    (first ? g1 : g2)(0, c) = -inv_n;
  }
  loss *= inv_n;
  if (!std::isfinite(loss)) throw std::domain_error("policy loss is not finite");
  if (!grad) return loss;

  // Gradient flows to the actions through whichever critic was the minimum.
  const Matrix da = q1_.backward(c1, g1, false).input.bottomRows(k) +
                    q2_.backward(c2, g2, false).input.bottomRows(k);
  // d(-log(1 - tanh^2 u))/du = 2 tanh u.
  const Matrix du = cfg_.alpha * inv_n * 2.0 * t.array() +
                    da.array() * cfg_.action_scale * (1.0 - t.array().square());
  Matrix dout(2 * k, n);
  dout.topRows(k) = du;
  const Matrix dlog_std = -cfg_.alpha * inv_n + du.array() * sigma.array() * noise.array();
  const auto inside = (head.raw_log_std.array() >= cfg_.log_std_min &&
                       head.raw_log_std.array() <= cfg_.log_std_max);
  dout.bottomRows(k) = inside.select(dlog_std, 0.0);
  *grad = policy_.backward(pcache, dout).params;
  return loss;
}

LossReport SacAgent::update(const Batch& batch, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto k = static_cast<Eigen::Index>(k_);
  if (batch.states.rows() != k || batch.actions.rows() != k) {
    throw std::invalid_argument("update: batch dimension does not match agent");
  }
  LossReport rep;
  const Vector y = critic_targets(batch, rng);
  const Matrix in = critic_input(batch.states, batch.actions);
  auto critic_step = [&](Mlp& q, AdamState& opt) {
    MlpCache cache;
    const Matrix pred = q.forward(in, &cache);
    const Matrix resid = pred - y.transpose();
    const double loss = resid.squaredNorm() / static_cast<double>(n);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "critic loss is not finite (loss=" << loss << ", max |target|=" << y.cwiseAbs().maxCoeff()
          << ")";
      throw std::domain_error(msg.str());
    }
    const Matrix g = (2.0 / static_cast<double>(n)) * resid;
    opt.step(q, q.backward(cache, g).params);
    return loss;
  };
  rep.q1_loss = critic_step(q1_, q1_opt_);
  rep.q2_loss = critic_step(q2_, q2_opt_);

  Vector pgrad;
  rep.policy_loss = policy_loss(batch, standard_normal(k, n, rng), &pgrad);
  policy_opt_.step(policy_, pgrad);

  soft_update(target_q1_, q1_, cfg_.tau);
  soft_update(target_q2_, q2_, cfg_.tau);
  return rep;
}

// ---------------------------------------------------------------------------
// Checkpoints

void SacAgent::save(std::ostream& os) const {
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint64_t>(os, k_);
  put<std::uint64_t>(os, cfg_.hidden.size());
  for (int h : cfg_.hidden) put<std::int32_t>(os, h);
  for (double v : {cfg_.alpha, cfg_.gamma, cfg_.tau, cfg_.optimizer.learning_rate,
                   cfg_.optimizer.beta1, cfg_.optimizer.beta2, cfg_.optimizer.epsilon,
                   cfg_.log_std_min, cfg_.log_std_max, cfg_.action_scale}) {
    put<double>(os, v);
  }
  put<std::uint64_t>(os, cfg_.batch_size);
  put<std::uint64_t>(os, cfg_.buffer_capacity);
  put<std::int32_t>(os, cfg_.grad_steps_per_env_step);

  for (const Mlp* m : {&policy_, &q1_, &q2_, &target_q1_, &target_q2_}) write_mlp(os, *m);
  for (const AdamState* a : {&policy_opt_, &q1_opt_, &q2_opt_}) write_adam(os, *a);
  write_buffer(os, buffer_);
  if (!os) throw std::runtime_error("checkpoint write failed");
}

SacAgent SacAgent::load(std::istream& is) {
  char magic[sizeof(kCheckpointMagic)];
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(magic, magic + sizeof(magic), kCheckpointMagic)) {
    throw std::runtime_error("not an agent checkpoint (bad magic)");
  }
  const auto k = get<std::uint64_t>(is);
  SacConfig cfg;
  cfg.hidden.resize(get<std::uint64_t>(is));
  for (auto& h : cfg.hidden) h = get<std::int32_t>(is);
  for (double* v : {&cfg.alpha, &cfg.gamma, &cfg.tau, &cfg.optimizer.learning_rate,
                    &cfg.optimizer.beta1, &cfg.optimizer.beta2, &cfg.optimizer.epsilon,
                    &cfg.log_std_min, &cfg.log_std_max, &cfg.action_scale}) {
    *v = get<double>(is);
  }
  cfg.batch_size = get<std::uint64_t>(is);
  cfg.buffer_capacity = get<std::uint64_t>(is);
  cfg.grad_steps_per_env_step = get<std::int32_t>(is);

  SacAgent agent(k, cfg);
  for (Mlp* m : {&agent.policy_, &agent.q1_, &agent.q2_, &agent.target_q1_, &agent.target_q2_}) {
    *m = read_mlp(is);
  }
  for (AdamState* a : {&agent.policy_opt_, &agent.q1_opt_, &agent.q2_opt_}) *a = read_adam(is);
  agent.buffer_ = read_buffer(is);
  if (agent.policy_.input_dim() != static_cast<int>(k) ||
      agent.q1_.input_dim() != 2 * static_cast<int>(k) ||
      agent.policy_opt_.m.size() != static_cast<Eigen::Index>(agent.policy_.parameter_count())) {
    throw std::runtime_error("checkpoint: inconsistent network shapes");
  }
  return agent;
}

void SacAgent::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  save(os);
}

SacAgent SacAgent::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return load(is);
}

// ---------------------------------------------------------------------------
// Loops

std::vector<EpisodeStats> train(SacAgent& agent, SchedulingEnv& env, int episodes, Rng& rng,
                                const TrainHooks& hooks, int first_episode) {
  if (agent.k() != env.k()) throw std::invalid_argument("agent and environment disagree on k");
  if (agent.config().action_scale != env.config().action_scale) {
    throw std::invalid_argument("agent and environment disagree on action_scale");
  }
  const auto& cfg = agent.config();
  std::vector<EpisodeStats> log;
  log.reserve(static_cast<std::size_t>(std::max(episodes, 0)));
  std::vector<double> step_rates;
  for (int e = first_episode; e < first_episode + episodes; ++e) {
    State s = env.reset(e);
    step_rates.clear();
    EpisodeStats st;
    st.episode = e;
    st.desired_rate = env.desired_rate();
    for (;;) {
      const auto pick = agent.sample_action(s.rates, rng);
      const auto res = env.step(pick.squashed);
      agent.buffer().push(
          Transition{s.rates, pick.action, res.reward, res.next_state.rates, res.terminal});
      if (hooks.on_step) hooks.on_step(env, res);
      if (agent.buffer().size() >= cfg.batch_size) {
        for (int g = 0; g < cfg.grad_steps_per_env_step; ++g) {
          agent.update(agent.buffer().sample(cfg.batch_size, rng), rng);
        }
      }
      step_rates.push_back(res.info.sum_rate);
      st.episode_reward += res.reward;
      s = res.next_state;
      if (res.done) break;
    }
    st.steps_taken = static_cast<int>(step_rates.size());
    st.final_sum_rate = step_rates.back();
    st.avg_rate_this_episode = average_training_rate(step_rates, env.config().horizon);
    log.push_back(st);
    if (hooks.on_episode) hooks.on_episode(st);
  }
  return log;
}

double evaluate(const SacAgent& agent, SchedulingEnv& env, int repeats, Rng& rng,
                bool deterministic) {
  if (repeats < 1) throw std::invalid_argument("evaluate: repeats must be >= 1");
  if (agent.k() != env.k()) throw std::invalid_argument("agent and environment disagree on k");
  double total = 0.0;
  for (int r = 0; r < repeats; ++r) {
    State s = env.restart();
    double final_rate = 0.0;
    for (;;) {
      const auto pick = agent.sample_action(s.rates, rng, deterministic);
      const auto res = env.step(pick.squashed);
      final_rate = res.info.sum_rate;
      s = res.next_state;
      if (res.done) break;
    }
    total += final_rate;
  }
  return total / static_cast<double>(repeats);
}

void write_training_log_csv(std::ostream& os, const std::vector<EpisodeStats>& log) {
  const auto old = os.precision(9);
  os << "episode,steps_taken,episode_reward,final_sum_rate,desired_rate,avg_rate_this_episode\n";
  for (const auto& s : log) {
    os << s.episode << ',' << s.steps_taken << ',' << s.episode_reward << ',' << s.final_sum_rate
       << ',' << s.desired_rate << ',' << s.avg_rate_this_episode << '\n';
  }
  os.precision(old);
}

}  // namespace mmsched
