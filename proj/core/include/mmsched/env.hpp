#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mmsched/flowlp.hpp"
#include "mmsched/topology.hpp"

namespace mmsched {

enum class DynamicsMode { static_network, time_varying };

struct BlockageConfig {
  double lambda = 1.0 / 500.0;
  /// Blockage is resampled at every reset whose episode index is a multiple of this.
  int epoch = 10;
};

struct EnvConfig {
  int horizon = 500;
  /// Desired rate as a fraction of the restricted capacity.
  double rate_fraction = 0.6;
  /// Rate units per unit of squashed (tanh) action.
  double action_scale = 1.0;
  /// Scaled action entries with magnitude strictly below this become exactly 0.
  double clip_threshold = 1e-3;
  DynamicsMode dynamics = DynamicsMode::static_network;
  Interval drift{-1.0, 1.0};
  Interval clamp{0.0, 10.0};
  std::optional<BlockageConfig> blockage;
  double validity_tol = kValidityTolerance;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

struct State {
  RateVector rates;
  int step_index = 0;
};

struct StepInfo {
  bool valid_move = true;
  double sum_rate = 0.0;
  double desired_rate = 0.0;
};

struct StepResult {
  State next_state;
  double reward = 0.0;
  bool done = false;
  /// True only when the desired rate was reached (not on horizon truncation).
  bool terminal = false;
  StepInfo info;
};

/// Zeroes entries whose magnitude is strictly below `threshold`.
std::vector<double> clip_action(std::span<const double> raw, double threshold);

double sum_rate(const RateVector& rates);

/// Episodic multi-path rate MDP.
///
/// The observation is the rate vector of the selected paths. An action adds a
/// bounded delta to every rate; moves that would break the scheduling
/// constraints are refused and the state stays put. Reaching the desired rate
/// ends the episode with reward 1. The network only changes inside reset().
class SchedulingEnv {
 public:
  /// `reference_paths`, when given, is the path set whose restricted capacity
  /// sets the desired rate (used to hold R* fixed while varying the agent's k).
  SchedulingEnv(Network net, PathSet paths, EnvConfig cfg, std::uint64_t seed,
                std::optional<PathSet> reference_paths = std::nullopt);

  /// Applies the episode's network dynamics, recomputes the desired rate and
  /// returns the zero state.
  State reset(int episode_index);
  /// Zero state without touching the network or the desired rate.
  State restart();

  /// `raw_action` entries are squashed actions in [-1, 1].
  StepResult step(std::span<const double> raw_action);

  double desired_rate() const;
  double capacity() const;
  const State& state() const { return state_; }
  bool done() const { return done_; }
  std::size_t k() const { return paths_.size(); }
  const Network& network() const { return net_; }
  const PathSet& paths() const { return paths_; }
  const EnvConfig& config() const { return cfg_; }
  int resets() const { return resets_; }

 private:
  Network net_;
  PathSet paths_;
  std::optional<PathSet> reference_;
  EnvConfig cfg_;
  Rng rng_;
  State state_;
  int resets_ = 0;
  bool done_ = true;
  std::optional<double> desired_;
  double capacity_ = 0.0;
};

/// Per-step episode trace: episode, step, rate_1..rate_k, sum_rate, reward, valid_move.
class TraceCsvWriter {
 public:
  TraceCsvWriter(std::ostream& os, std::size_t k);
  void write(int episode, const StepResult& r);

 private:
  std::ostream& os_;
  std::size_t k_;
};

}  // namespace mmsched
