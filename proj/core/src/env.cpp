#include "mmsched/env.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace mmsched {

void EnvConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(rate_fraction > 0.0 && rate_fraction <= 1.0)) {
    throw std::invalid_argument("rate_fraction must lie in (0, 1]");
  }
  if (!(action_scale > 0.0)) throw std::invalid_argument("action_scale must be > 0");
  if (!(clip_threshold >= 0.0)) throw std::invalid_argument("clip_threshold must be >= 0");
  if (!(drift.lo <= drift.hi) || !(clamp.lo <= clamp.hi)) {
    throw std::invalid_argument("drift and clamp intervals must be nonempty");
  }
  if (blockage) {
    if (!(blockage->lambda >= 0.0)) throw std::invalid_argument("blockage lambda must be >= 0");
    if (blockage->epoch < 1) throw std::invalid_argument("blockage epoch must be >= 1");
  }
  if (!(validity_tol >= 0.0)) throw std::invalid_argument("validity_tol must be >= 0");
}

std::vector<double> clip_action(std::span<const double> raw, double threshold) {
  std::vector<double> out(raw.begin(), raw.end());
  for (double& v : out) {
    if (std::abs(v) < threshold) v = 0.0;
  }
  return out;
}

double sum_rate(const RateVector& rates) { return std::accumulate(rates.begin(), rates.end(), 0.0); }

SchedulingEnv::SchedulingEnv(Network net, PathSet paths, EnvConfig cfg, std::uint64_t seed,
                             std::optional<PathSet> reference_paths)
    : net_(std::move(net)),
      paths_(std::move(paths)),
      reference_(std::move(reference_paths)),
      cfg_(cfg),
      rng_(seed) {
  cfg_.validate();
  if (paths_.empty()) throw std::invalid_argument("environment needs at least one path");
  paths_.validate(net_);
  if (reference_) reference_->validate(net_);
  state_.rates.assign(paths_.size(), 0.0);
}

State SchedulingEnv::reset(int episode_index) {
  if (cfg_.dynamics == DynamicsMode::time_varying && resets_ > 0) {
    step_capacities(net_, cfg_.drift, cfg_.clamp, rng_);
  }
  if (cfg_.blockage && episode_index % cfg_.blockage->epoch == 0) {
    resample_blockage(net_, cfg_.blockage->lambda, rng_);
  }
  ++resets_;
  capacity_ = restricted_capacity(net_, reference_ ? *reference_ : paths_).value;
  desired_ = cfg_.rate_fraction * capacity_;
  return restart();
}

State SchedulingEnv::restart() {
  if (!desired_) throw std::logic_error("restart() before the first reset()");
  state_.rates.assign(paths_.size(), 0.0);
  state_.step_index = 0;
  done_ = false;
  return state_;
}

StepResult SchedulingEnv::step(std::span<const double> raw_action) {
  if (done_) throw std::logic_error("step() on a finished episode; call reset() first");
  if (raw_action.size() != paths_.size()) {
    throw std::invalid_argument("action has " + std::to_string(raw_action.size()) +
                                " entries for " + std::to_string(paths_.size()) + " paths");
  }
  for (double a : raw_action) {
    if (!(std::abs(a) <= 1.0)) throw std::invalid_argument("raw action entries must lie in [-1, 1]");
  }
  std::vector<double> scaled(raw_action.begin(), raw_action.end());
  for (double& a : scaled) a *= cfg_.action_scale;
  const auto delta = clip_action(scaled, cfg_.clip_threshold);

  RateVector candidate = state_.rates;
  for (std::size_t i = 0; i < candidate.size(); ++i) candidate[i] += delta[i];

  StepResult r;
  r.info.valid_move = is_feasible(net_, paths_, candidate, cfg_.validity_tol);
  if (r.info.valid_move) {
    // Entries within tolerance below zero are snapped to 0; lowering a rate keeps feasibility.
    for (double& v : candidate) v = std::max(v, 0.0);
    state_.rates = std::move(candidate);
  }
  ++state_.step_index;

  r.info.sum_rate = sum_rate(state_.rates);
  r.info.desired_rate = *desired_;
  if (r.info.sum_rate >= *desired_) {
    r.reward = 1.0;
    r.terminal = true;
    r.done = true;
  } else {
    r.done = state_.step_index >= cfg_.horizon;
  }
  done_ = r.done;
  r.next_state = state_;
  return r;
}

double SchedulingEnv::desired_rate() const {
  if (!desired_) throw std::logic_error("desired_rate() before the first reset()");
  return *desired_;
}

double SchedulingEnv::capacity() const {
  if (!desired_) throw std::logic_error("capacity() before the first reset()");
  return capacity_;
}

TraceCsvWriter::TraceCsvWriter(std::ostream& os, std::size_t k) : os_(os), k_(k) {
  os_ << "episode,step";
  for (std::size_t i = 0; i < k_; ++i) os_ << ",rate_" << (i + 1);
  os_ << ",sum_rate,reward,valid_move\n";
}

void TraceCsvWriter::write(int episode, const StepResult& r) {
  const auto old = os_.precision(9);
  os_ << episode << ',' << r.next_state.step_index;
  for (double v : r.next_state.rates) os_ << ',' << v;
  os_ << ',' << r.info.sum_rate << ',' << r.reward << ',' << (r.info.valid_move ? 1 : 0) << '\n';
  os_.precision(old);
}

}  // namespace mmsched
