#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmsched/baselines.hpp"
#include "mmsched/env.hpp"
#include "mmsched/sac.hpp"

namespace mmsched {

struct PathSpec {
  int k = 15;
  int n_widest = 2;
  /// Explicit path file; overrides k / n_widest when set.
  std::optional<std::string> file;
};

/// Everything needed to reproduce a multi-seed run. The network is fixed for
/// the whole experiment; seeds vary agent initialisation, exploration and
/// network dynamics.
struct ExperimentConfig {
  std::string name = "experiment";
  NetworkSpec network{};
  std::optional<std::string> network_file;
  std::uint64_t network_seed = 1;
  PathSpec paths{};
  EnvConfig env{};
  SacConfig sac{};
  int episodes = 200;
  int eval_repeats = 5;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out_dir = "out";
  /// Also write a per-step trace CSV for every seed.
  bool traces = false;
  /// Seeds run concurrently on up to this many threads (0: hardware concurrency).
  int jobs = 1;

  void validate() const;
};

/// Action scale of both presets. EnvConfig keeps 1.0; at that scale a random
/// policy almost never leaves the zero state on the preset networks.
inline constexpr double kPresetActionScale = 0.3;

/// Full-size defaults: N = 15, k = 15, 200 episodes, five seeds.
ExperimentConfig default_config();
/// Small instance for quick runs: N = 6, k = 6, 100 episodes.
ExperimentConfig desk_preset();

/// Overlays the keys present in a JSON document onto `base`. Unknown keys are
/// rejected with std::invalid_argument.
ExperimentConfig parse_config(const std::string& json_text, ExperimentConfig base);
ExperimentConfig load_config(const std::string& path, ExperimentConfig base);
/// Canonical JSON rendering; parse_config(config_json(c), any) reproduces c.
std::string config_json(const ExperimentConfig& cfg);

struct EpisodeMetrics {
  int episode = 0;
  double avg_training_rate = 0.0;
  double evaluation_rate = 0.0;
  double desired_rate = 0.0;
  double restricted_capacity = 0.0;
  int blocked_path_count = 0;
  double es_rate = 0.0;
  double sp_rate = 0.0;
};

void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const EpisodeMetrics& m);
std::vector<EpisodeMetrics> read_metrics_csv(std::istream& is);

/// Paths in `ps` that traverse at least one blocked link.
int count_blocked_paths(const Network& net, const PathSet& ps);

/// SP rate with idle slots when fewer than two paths exist (k = 1 gives C/2).
double sp_sum_rate(const Network& net, const PathSet& ps);

/// The network and path set an experiment runs on.
struct Instance {
  Network network;
  PathSet paths;
  /// Path set whose restricted capacity defines R*; the paths themselves if empty.
  std::optional<PathSet> reference;
};
Instance build_instance(const ExperimentConfig& cfg);

/// Independent 64-bit seed for a named stream of a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct SeedObserver {
  std::function<void(const SchedulingEnv&, const StepResult&)> on_step;
  std::function<void(const EpisodeMetrics&)> on_episode;
  /// Receives the trained agent after the last episode of a seed.
  std::function<void(std::uint64_t seed, const SacAgent&)> on_finish;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<EpisodeMetrics> metrics;
  std::vector<EpisodeStats> training_log;
};

/// Trains one agent for cfg.episodes and evaluates it after every episode.
/// Writes nothing to disk unless `metrics_out` / `trace_out` are given.
SeedResult run_seed(const ExperimentConfig& cfg, const Instance& inst, std::uint64_t seed,
                    const SeedObserver& observer = {}, std::ostream* metrics_out = nullptr,
                    std::ostream* trace_out = nullptr);

struct ExperimentResult {
  std::vector<SeedResult> seeds;
  std::string out_dir;
};

/// Writes, under cfg.out_dir:
///   seed_<s>.csv            EpisodeMetrics rows
///   aggregate.csv           per-episode means across seeds plus per-seed evaluation curves
///   logs/seed_<s>_train.csv training log; logs/seed_<s>_baselines.csv; optional traces
///   manifest.json           config snapshot, hash, seeds, version, timestamps
/// On failure, error.json is written next to whatever has been flushed and the
/// exception is rethrown.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const SeedObserver& observer = {});

void write_aggregate_csv(std::ostream& os, const std::vector<SeedResult>& seeds);

/// One experiment per k in `k_values` (ascending) on nested path sets. The
/// largest set is selected once and ordered by ascending path capacity, so the
/// k = 1 set holds the weakest path; R* always comes from the largest set.
/// Each run goes to <out_dir>/k_<k>/ and sweep.csv compares mean evaluation curves.
std::vector<ExperimentResult> run_k_sweep(const ExperimentConfig& base,
                                          const std::vector<int>& k_values,
                                          const SeedObserver& observer = {});

std::string version_string();
std::string utc_timestamp();

/// Writes <dir>/manifest.json for a run of `command`: config snapshot and hash,
/// seeds, version and timestamps, plus `extra` string fields.
void write_run_manifest(const std::string& dir, const ExperimentConfig& cfg,
                        const std::string& command, const std::string& started_utc,
                        const std::vector<std::pair<std::string, std::string>>& extra = {});

}  // namespace mmsched
