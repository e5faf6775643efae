#include "mmsched/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "mmsched/version.hpp"

namespace mmsched {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// JSON <-> config

[[noreturn]] void bad_key(const std::string& where, const std::string& key) {
  throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
}

template <typename T>
T as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: bad value for '" + key + "': " + e.what());
  }
}

Interval as_interval(const json& j, const std::string& key) {
  const auto v = as<std::vector<double>>(j, key);
  if (v.size() != 2) throw std::invalid_argument("config: '" + key + "' must be [lo, hi]");
  return {v[0], v[1]};
}

json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

void apply_network(const json& j, ExperimentConfig& cfg) {
  for (const auto& [key, v] : j.items()) {
    if (key == "file") cfg.network_file = as<std::string>(v, key);
    else if (key == "seed") cfg.network_seed = as<std::uint64_t>(v, key);
    else if (key == "n_relays") cfg.network.n_relays = as<int>(v, key);
    else if (key == "capacity") cfg.network.capacity = as_interval(v, key);
    else if (key == "weight") cfg.network.weight = as_interval(v, key);
    else if (key == "fully_connected") cfg.network.fully_connected = as<bool>(v, key);
    else if (key == "link_probability") cfg.network.link_probability = as<double>(v, key);
    else bad_key("network", key);
  }
}

void apply_paths(const json& j, ExperimentConfig& cfg) {
  for (const auto& [key, v] : j.items()) {
    if (key == "k") cfg.paths.k = as<int>(v, key);
    else if (key == "n_widest") cfg.paths.n_widest = as<int>(v, key);
    else if (key == "file") cfg.paths.file = as<std::string>(v, key);
    else bad_key("paths", key);
  }
}

void apply_env(const json& j, ExperimentConfig& cfg) {
  bool fraction_given = false;
  for (const auto& [key, v] : j.items()) {
    if (key == "horizon") cfg.env.horizon = as<int>(v, key);
    else if (key == "rate_fraction") {
      cfg.env.rate_fraction = as<double>(v, key);
      fraction_given = true;
    } else if (key == "action_scale") cfg.env.action_scale = as<double>(v, key);
    else if (key == "clip_threshold") cfg.env.clip_threshold = as<double>(v, key);
    else if (key == "dynamics") {
      const auto s = as<std::string>(v, key);
      if (s == "static") cfg.env.dynamics = DynamicsMode::static_network;
      else if (s == "time_varying") cfg.env.dynamics = DynamicsMode::time_varying;
      else throw std::invalid_argument("config: dynamics must be 'static' or 'time_varying'");
    } else if (key == "drift") cfg.env.drift = as_interval(v, key);
    else if (key == "clamp") cfg.env.clamp = as_interval(v, key);
    else if (key == "validity_tol") cfg.env.validity_tol = as<double>(v, key);
    else if (key == "blockage") {
      if (v.is_null()) {
        cfg.env.blockage.reset();
        continue;
      }
      BlockageConfig b = cfg.env.blockage.value_or(BlockageConfig{});
      for (const auto& [bk, bv] : v.items()) {
        if (bk == "lambda") b.lambda = as<double>(bv, bk);
        else if (bk == "epoch") b.epoch = as<int>(bv, bk);
        else bad_key("env.blockage", bk);
      }
      cfg.env.blockage = b;
    } else bad_key("env", key);
  }
  if (!fraction_given && j.contains("dynamics")) {
    cfg.env.rate_fraction = cfg.env.dynamics == DynamicsMode::time_varying ? 0.5 : 0.6;
  }
}

void apply_sac(const json& j, ExperimentConfig& cfg) {
  auto& s = cfg.sac;
  for (const auto& [key, v] : j.items()) {
    if (key == "hidden") s.hidden = as<std::vector<int>>(v, key);
    else if (key == "alpha") s.alpha = as<double>(v, key);
    else if (key == "gamma") s.gamma = as<double>(v, key);
    else if (key == "tau") s.tau = as<double>(v, key);
    else if (key == "learning_rate") s.optimizer.learning_rate = as<double>(v, key);
    else if (key == "beta1") s.optimizer.beta1 = as<double>(v, key);
    else if (key == "beta2") s.optimizer.beta2 = as<double>(v, key);
    else if (key == "epsilon") s.optimizer.epsilon = as<double>(v, key);
    else if (key == "batch_size") s.batch_size = as<std::size_t>(v, key);
    else if (key == "buffer_capacity") s.buffer_capacity = as<std::size_t>(v, key);
    else if (key == "log_std_min") s.log_std_min = as<double>(v, key);
    else if (key == "log_std_max") s.log_std_max = as<double>(v, key);
    else if (key == "grad_steps_per_env_step") s.grad_steps_per_env_step = as<int>(v, key);
    else bad_key("sac", key);
  }
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  json net;
  if (c.network_file) net["file"] = *c.network_file;
  net["seed"] = c.network_seed;
  net["n_relays"] = c.network.n_relays;
  net["capacity"] = interval_json(c.network.capacity);
  net["weight"] = interval_json(c.network.weight);
  net["fully_connected"] = c.network.fully_connected;
  net["link_probability"] = c.network.link_probability;
  j["network"] = net;
  json paths;
  paths["k"] = c.paths.k;
  paths["n_widest"] = c.paths.n_widest;
  if (c.paths.file) paths["file"] = *c.paths.file;
  j["paths"] = paths;
  json env;
  env["horizon"] = c.env.horizon;
  env["rate_fraction"] = c.env.rate_fraction;
  env["action_scale"] = c.env.action_scale;
  env["clip_threshold"] = c.env.clip_threshold;
  env["dynamics"] = c.env.dynamics == DynamicsMode::time_varying ? "time_varying" : "static";
  env["drift"] = interval_json(c.env.drift);
  env["clamp"] = interval_json(c.env.clamp);
  env["validity_tol"] = c.env.validity_tol;
  if (c.env.blockage) {
    env["blockage"] = json{{"lambda", c.env.blockage->lambda}, {"epoch", c.env.blockage->epoch}};
  } else {
    env["blockage"] = nullptr;
  }
  j["env"] = env;
  const auto& s = c.sac;
  j["sac"] = json{{"hidden", s.hidden},
                  {"alpha", s.alpha},
                  {"gamma", s.gamma},
                  {"tau", s.tau},
                  {"learning_rate", s.optimizer.learning_rate},
                  {"beta1", s.optimizer.beta1},
                  {"beta2", s.optimizer.beta2},
                  {"epsilon", s.optimizer.epsilon},
                  {"batch_size", s.batch_size},
                  {"buffer_capacity", s.buffer_capacity},
                  {"log_std_min", s.log_std_min},
                  {"log_std_max", s.log_std_max},
                  {"grad_steps_per_env_step", s.grad_steps_per_env_step}};
  j["episodes"] = c.episodes;
  j["eval_repeats"] = c.eval_repeats;
  j["seeds"] = c.seeds;
  j["out"] = c.out_dir;
  j["traces"] = c.traces;
  j["jobs"] = c.jobs;
  return j;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void write_json_file(const fs::path& p, const json& j) {
  auto os = open_out(p);
  os << j.dump(2) << '\n';
}

std::string seed_file(std::uint64_t seed, const std::string& suffix) {
  return "seed_" + std::to_string(seed) + suffix;
}

// Runs f(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr failure;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(mu);
          if (next >= n || failure) return;
          i = next++;
        }
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

void write_manifest_file(const fs::path& dir, const ExperimentConfig& cfg,
                         const std::string& command, const std::string& started,
                         const json& extra) {
  const std::string text = config_json(cfg);
  json m;
  m["command"] = command;
  m["version"] = version_string();
  m["config_hash"] = [&] {
    std::ostringstream os;
    os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a(text);
    return os.str();
  }();
  m["seeds"] = cfg.seeds;
  m["started_utc"] = started;
  m["finished_utc"] = utc_now();
  m["config"] = json::parse(text);
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_json_file(dir / "manifest.json", m);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  env.validate();
  SacConfig s = sac;
  s.action_scale = env.action_scale;
  s.validate();
  if (!network_file && network.n_relays < 0) throw std::invalid_argument("n_relays must be >= 0");
  if (network_file && !fs::exists(*network_file)) {
    throw std::invalid_argument("network file not found: " + *network_file);
  }
  if (paths.file && !fs::exists(*paths.file)) {
    throw std::invalid_argument("path file not found: " + *paths.file);
  }
  if (!paths.file && (paths.k < 1 || paths.n_widest < 0 || paths.n_widest > paths.k)) {
    throw std::invalid_argument("paths: need k >= 1 and 0 <= n_widest <= k");
  }
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (eval_repeats < 1) throw std::invalid_argument("eval_repeats must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw std::invalid_argument("seeds must be distinct");
  }
  if (jobs < 0) throw std::invalid_argument("jobs must be >= 0");
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.env.action_scale = kPresetActionScale;
  return c;
}

ExperimentConfig desk_preset() {
  ExperimentConfig c = default_config();
  c.name = "desk";
  c.network.n_relays = 6;
  c.paths.k = 6;
  c.episodes = 100;
  return c;
}

ExperimentConfig parse_config(const std::string& json_text, ExperimentConfig cfg) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "name") cfg.name = as<std::string>(v, key);
    else if (key == "network") apply_network(v, cfg);
    else if (key == "paths") apply_paths(v, cfg);
    else if (key == "env") apply_env(v, cfg);
    else if (key == "sac") apply_sac(v, cfg);
    else if (key == "episodes") cfg.episodes = as<int>(v, key);
    else if (key == "eval_repeats") cfg.eval_repeats = as<int>(v, key);
    else if (key == "seeds") cfg.seeds = as<std::vector<std::uint64_t>>(v, key);
    else if (key == "out") cfg.out_dir = as<std::string>(v, key);
    else if (key == "traces") cfg.traces = as<bool>(v, key);
    else if (key == "jobs") cfg.jobs = as<int>(v, key);
    else bad_key("config", key);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string config_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2); }

// ---------------------------------------------------------------------------
// Metrics CSV

void write_metrics_header(std::ostream& os) {
  os << "episode,avg_training_rate,evaluation_rate,desired_rate,restricted_capacity,"
        "blocked_path_count,es_rate,sp_rate\n";
}

void write_metrics_row(std::ostream& os, const EpisodeMetrics& m) {
  const auto old = os.precision(9);
  os << m.episode << ',' << m.avg_training_rate << ',' << m.evaluation_rate << ','
     << m.desired_rate << ',' << m.restricted_capacity << ',' << m.blocked_path_count << ','
     << m.es_rate << ',' << m.sp_rate << '\n';
  os.precision(old);
}

std::vector<EpisodeMetrics> read_metrics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("metrics csv: missing header");
  std::vector<EpisodeMetrics> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw std::runtime_error("metrics csv: expected 8 columns: " + line);
    EpisodeMetrics m;
    m.episode = std::stoi(cells[0]);
    m.avg_training_rate = std::stod(cells[1]);
    m.evaluation_rate = std::stod(cells[2]);
    m.desired_rate = std::stod(cells[3]);
    m.restricted_capacity = std::stod(cells[4]);
    m.blocked_path_count = std::stoi(cells[5]);
    m.es_rate = std::stod(cells[6]);
    m.sp_rate = std::stod(cells[7]);
    rows.push_back(m);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Instance construction

int count_blocked_paths(const Network& net, const PathSet& ps) {
  int count = 0;
  for (const auto& p : ps) {
    const auto& nodes = p.nodes();
    for (std::size_t h = 0; h + 1 < nodes.size(); ++h) {
      if (net.link(nodes[h], nodes[h + 1]).blocked) {
        ++count;
        break;
      }
    }
  }
  return count;
}

double sp_sum_rate(const Network& net, const PathSet& ps) {
  if (ps.size() >= 2) return sp_rates(net, ps).sum_rate();
  if (ps.size() == 1) return path_capacity(net, ps[0]) / 2.0;
  throw std::invalid_argument("sp_sum_rate: empty path set");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {
constexpr std::uint64_t kStreamPaths = 1;
constexpr std::uint64_t kStreamAgent = 11;
constexpr std::uint64_t kStreamEnv = 12;
constexpr std::uint64_t kStreamTrain = 13;
constexpr std::uint64_t kStreamEval = 14;
}  // namespace

Instance build_instance(const ExperimentConfig& cfg) {
  Network net = cfg.network_file ? load_network(*cfg.network_file)
                                 : generate_network(cfg.network, cfg.network_seed);
  if (cfg.paths.file) {
    PathSet ps = load_paths(*cfg.paths.file);
    ps.validate(net);
    return Instance{std::move(net), std::move(ps), std::nullopt};
  }
  Rng rng(derive_seed(cfg.network_seed, kStreamPaths));
  PathSet ps = select_paths(net, cfg.paths.k, cfg.paths.n_widest, rng);
  return Instance{std::move(net), std::move(ps), std::nullopt};
}

// ---------------------------------------------------------------------------
// Runs

SeedResult run_seed(const ExperimentConfig& cfg, const Instance& inst, std::uint64_t seed,
                    const SeedObserver& observer, std::ostream* metrics_out,
                    std::ostream* trace_out) {
  SchedulingEnv env(inst.network, inst.paths, cfg.env, derive_seed(seed, kStreamEnv),
                    inst.reference);
  SacConfig sc = cfg.sac;
  sc.action_scale = cfg.env.action_scale;
  SacAgent agent(inst.paths.size(), sc, derive_seed(seed, kStreamAgent));
  Rng train_rng(derive_seed(seed, kStreamTrain));
  Rng eval_rng(derive_seed(seed, kStreamEval));

  SeedResult out;
  out.seed = seed;
  out.metrics.reserve(static_cast<std::size_t>(cfg.episodes));
  std::optional<TraceCsvWriter> trace;
  if (trace_out) trace.emplace(*trace_out, inst.paths.size());
  if (metrics_out) write_metrics_header(*metrics_out);

  int episode = 0;
  TrainHooks hooks;
  hooks.on_step = [&](const SchedulingEnv& e, const StepResult& r) {
    if (trace) trace->write(episode, r);
    if (observer.on_step) observer.on_step(e, r);
  };
  hooks.on_episode = [&](const EpisodeStats& st) {
    EpisodeMetrics m;
    m.episode = st.episode;
    m.avg_training_rate = st.avg_rate_this_episode;
    m.evaluation_rate = evaluate(agent, env, cfg.eval_repeats, eval_rng);
    m.desired_rate = st.desired_rate;
    m.restricted_capacity = env.capacity();
    m.blocked_path_count = count_blocked_paths(env.network(), env.paths());
    m.es_rate = es_rates(env.network(), env.paths()).sum_rate();
    m.sp_rate = sp_sum_rate(env.network(), env.paths());
    out.metrics.push_back(m);
    if (metrics_out) {
      write_metrics_row(*metrics_out, m);
      metrics_out->flush();
    }
    if (observer.on_episode) observer.on_episode(m);
    ++episode;
  };
  out.training_log = train(agent, env, cfg.episodes, train_rng, hooks);
  if (observer.on_finish) observer.on_finish(seed, agent);
  return out;
}

void write_aggregate_csv(std::ostream& os, const std::vector<SeedResult>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("aggregate: no seeds");
  const std::size_t n = seeds.front().metrics.size();
  for (const auto& s : seeds) {
    if (s.metrics.size() != n) throw std::invalid_argument("aggregate: seeds differ in length");
  }
  os << "episode,avg_training_rate,evaluation_rate,desired_rate,restricted_capacity,"
        "blocked_path_count,es_rate,sp_rate";
  for (const auto& s : seeds) os << ",evaluation_rate_seed_" << s.seed;
  os << '\n';
  const auto old = os.precision(9);
  const double count = static_cast<double>(seeds.size());
  for (std::size_t e = 0; e < n; ++e) {
    auto mean = [&](auto field) {
      double total = 0.0;
      for (const auto& s : seeds) total += static_cast<double>(s.metrics[e].*field);
      return total / count;
    };
    os << seeds.front().metrics[e].episode << ',' << mean(&EpisodeMetrics::avg_training_rate)
       << ',' << mean(&EpisodeMetrics::evaluation_rate) << ','
       << mean(&EpisodeMetrics::desired_rate) << ',' << mean(&EpisodeMetrics::restricted_capacity)
       << ',' << mean(&EpisodeMetrics::blocked_path_count) << ','
       << mean(&EpisodeMetrics::es_rate) << ',' << mean(&EpisodeMetrics::sp_rate);
    for (const auto& s : seeds) os << ',' << s.metrics[e].evaluation_rate;
    os << '\n';
  }
  os.precision(old);
}

namespace {

ExperimentResult run_on_instance(const ExperimentConfig& cfg, const Instance& inst,
                                 const SeedObserver& observer, const std::string& command,
                                 const json& extra) {
  cfg.validate();
  const std::string started = utc_now();
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir / "logs");
  fs::remove(dir / "error.json");
  save_network((dir / "network.txt").string(), inst.network);
  save_paths((dir / "paths.txt").string(), inst.paths);

  ExperimentResult result;
  result.out_dir = cfg.out_dir;
  result.seeds.resize(cfg.seeds.size());
  std::mutex observer_mu;
  SeedObserver shared;
  if (observer.on_step) {
    shared.on_step = [&](const SchedulingEnv& e, const StepResult& r) {
      std::lock_guard lock(observer_mu);
      observer.on_step(e, r);
    };
  }
  if (observer.on_episode) {
    shared.on_episode = [&](const EpisodeMetrics& m) {
      std::lock_guard lock(observer_mu);
      observer.on_episode(m);
    };
  }
  if (observer.on_finish) {
    shared.on_finish = [&](std::uint64_t seed, const SacAgent& agent) {
      std::lock_guard lock(observer_mu);
      observer.on_finish(seed, agent);
    };
  }
  try {
    parallel_for(cfg.seeds.size(), cfg.jobs, [&](std::size_t i) {
      const auto seed = cfg.seeds[i];
      auto metrics = open_out(dir / seed_file(seed, ".csv"));
      std::optional<std::ofstream> trace;
      if (cfg.traces) trace.emplace(open_out(dir / "logs" / seed_file(seed, "_trace.csv")));
      result.seeds[i] = run_seed(cfg, inst, seed, shared, &metrics, trace ? &*trace : nullptr);

      auto train_log = open_out(dir / "logs" / seed_file(seed, "_train.csv"));
      write_training_log_csv(train_log, result.seeds[i].training_log);
      auto base = open_out(dir / "logs" / seed_file(seed, "_baselines.csv"));
      write_baseline_header(base);
      for (const auto& m : result.seeds[i].metrics) {
        write_baseline_row(base, m.episode, m.es_rate, m.sp_rate, m.desired_rate);
      }
    });
    auto agg = open_out(dir / "aggregate.csv");
    write_aggregate_csv(agg, result.seeds);
  } catch (const std::exception& e) {
    write_json_file(dir / "error.json",
                    json{{"error", e.what()}, {"started_utc", started}, {"failed_utc", utc_now()}});
    write_manifest_file(dir, cfg, command, started, json{{"status", "failed"}});
    throw;
  }
  json info = extra;
  info["status"] = "ok";
  write_manifest_file(dir, cfg, command, started, info);
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const SeedObserver& observer) {
  cfg.validate();
  return run_on_instance(cfg, build_instance(cfg), observer, "experiment", json::object());
}

std::vector<ExperimentResult> run_k_sweep(const ExperimentConfig& base,
                                          const std::vector<int>& k_values,
                                          const SeedObserver& observer) {
  if (k_values.empty()) throw std::invalid_argument("k-sweep: no k values");
  if (!std::is_sorted(k_values.begin(), k_values.end()) ||
      std::adjacent_find(k_values.begin(), k_values.end()) != k_values.end() ||
      k_values.front() < 1) {
    throw std::invalid_argument("k-sweep: k values must be positive and strictly ascending");
  }
  ExperimentConfig full = base;
  full.paths.k = k_values.back();
  full.paths.n_widest = std::min(full.paths.n_widest, full.paths.k);
  full.validate();
  Instance inst = build_instance(full);
  if (inst.paths.size() < static_cast<std::size_t>(k_values.back())) {
    throw std::invalid_argument("k-sweep: path file has fewer paths than the largest k");
  }

  std::vector<Path> ordered(inst.paths.begin(), inst.paths.end());
  std::vector<double> caps = path_capacities(inst.network, inst.paths);
  std::vector<std::size_t> idx(ordered.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return caps[a] < caps[b]; });
  std::vector<Path> sorted;
  for (std::size_t i : idx) sorted.push_back(ordered[i]);
  const PathSet reference(std::vector<Path>(sorted.begin(), sorted.begin() + k_values.back()));

  const fs::path root(base.out_dir);
  fs::create_directories(root);
  const std::string started = utc_now();
  std::vector<ExperimentResult> results;
  try {
    for (int k : k_values) {
      ExperimentConfig c = full;
      c.paths.k = k;
      c.paths.n_widest = std::min(full.paths.n_widest, k);
      c.out_dir = (root / ("k_" + std::to_string(k))).string();
      Instance ik{inst.network, reference.prefix(static_cast<std::size_t>(k)), reference};
      results.push_back(run_on_instance(c, ik, observer, "k-sweep", json{{"k", k}}));
    }

    auto os = open_out(root / "sweep.csv");
    os << "episode,desired_rate";
    for (int k : k_values) os << ",evaluation_rate_k_" << k;
    os << '\n';
    os.precision(9);
    const std::size_t n = results.front().seeds.front().metrics.size();
    for (std::size_t e = 0; e < n; ++e) {
      os << e << ',' << results.front().seeds.front().metrics[e].desired_rate;
      for (const auto& r : results) {
        double total = 0.0;
        for (const auto& s : r.seeds) total += s.metrics[e].evaluation_rate;
        os << ',' << total / static_cast<double>(r.seeds.size());
      }
      os << '\n';
    }
  } catch (const std::exception&) {
    write_manifest_file(root, full, "k-sweep", started, json{{"status", "failed"}, {"k_values", k_values}});
    throw;
  }
  write_manifest_file(root, full, "k-sweep", started, json{{"status", "ok"}, {"k_values", k_values}});
  return results;
}

std::string version_string() { return kVersionString; }

std::string utc_timestamp() { return utc_now(); }

void write_run_manifest(const std::string& dir, const ExperimentConfig& cfg,
                        const std::string& command, const std::string& started_utc,
                        const std::vector<std::pair<std::string, std::string>>& extra) {
  fs::create_directories(dir);
  json info = json::object();
  for (const auto& [k, v] : extra) info[k] = v;
  write_manifest_file(dir, cfg, command, started_utc, info);
}

}  // namespace mmsched
