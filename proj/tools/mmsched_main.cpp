// mmsched: command-line front end for network generation, path selection,
// capacity and baseline queries, and SAC training / evaluation runs.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmsched/baselines.hpp"
#include "mmsched/flowlp.hpp"
#include "mmsched/harness.hpp"
#include "mmsched/sac.hpp"
#include "mmsched/topology.hpp"

namespace fs = std::filesystem;
using namespace mmsched;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_file;
  std::optional<std::string> out_dir;
  bool desk = false;
  std::optional<int> jobs;
};

ExperimentConfig resolve(const Globals& g) {
  ExperimentConfig cfg = g.desk ? desk_preset() : default_config();
  if (!g.config_file.empty()) cfg = load_config(g.config_file, cfg);
  if (g.out_dir) cfg.out_dir = *g.out_dir;
  if (g.jobs) cfg.jobs = *g.jobs;
  return cfg;
}

std::uint64_t run_seed_of(const Globals& g, const ExperimentConfig& cfg) {
  return g.seed ? *g.seed : cfg.seeds.front();
}

void print_rates(std::ostream& os, const char* label, const RateVector& rates) {
  os << label;
  for (double r : rates) os << ' ' << r;
  os << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multipath rate scheduling over 1-2-1 mmWave networks with soft actor-critic"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", version_string());

  Globals g;
  app.add_option("--seed", g.seed, "Run seed (network seed for gen-net / select-paths)");
  app.add_option("--config", g.config_file, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_flag("--desk", g.desk, "Small preset: 6 relays, 6 paths, 100 episodes");
  app.add_option("--jobs", g.jobs, "Seeds trained concurrently (0: all cores)");

  // gen-net -----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-net", "Generate a random network file");
  std::optional<int> relays;
  std::optional<double> link_p;
  gen->add_option("--relays", relays, "Number of relays N");
  gen->add_option("--link-probability", link_p, "Link probability (implies a sparse network)");

  // select-paths ------------------------------------------------------------
  auto* sel = app.add_subcommand("select-paths", "Pick k paths: widest first, then random");
  std::string net_file;
  std::optional<int> k_opt;
  std::optional<int> widest_opt;
  sel->add_option("--network", net_file, "Network file")->required()->check(CLI::ExistingFile);
  sel->add_option("-k", k_opt, "Number of paths");
  sel->add_option("--widest", widest_opt, "How many of them are widest paths");

  // capacity / baseline -----------------------------------------------------
  auto* cap = app.add_subcommand("capacity", "Restricted capacity and its schedule");
  std::string paths_file;
  bool all_paths = false;
  cap->add_option("--network", net_file, "Network file")->required()->check(CLI::ExistingFile);
  cap->add_option("--paths", paths_file, "Path file")->check(CLI::ExistingFile);
  cap->add_flag("--all-paths", all_paths, "Use every simple path instead of a path file");

  auto* base = app.add_subcommand("baseline", "Equal-share and shortest-path schedules");
  base->add_option("--network", net_file, "Network file")->required()->check(CLI::ExistingFile);
  base->add_option("--paths", paths_file, "Path file")->required()->check(CLI::ExistingFile);

  // train / eval ------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "Train one agent (one seed) and save a checkpoint");
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the configured instance");
  std::string checkpoint;
  int repeats = 5;
  bool deterministic = false;
  ev->add_option("--checkpoint", checkpoint, "Agent checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--repeats", repeats, "Rollouts to average");
  ev->add_flag("--deterministic", deterministic, "Act with the policy mean");

  // experiment / k-sweep ----------------------------------------------------
  auto* ex = app.add_subcommand("experiment", "Multi-seed training run with per-episode metrics");
  auto* ks = app.add_subcommand("k-sweep", "One experiment per k on nested path sets");
  std::vector<int> k_values;
  ks->add_option("--k", k_values, "Ascending k values")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = resolve(g);
    const std::string started = utc_timestamp();
    std::cout << std::setprecision(17);

    if (*gen) {
      if (relays) cfg.network.n_relays = *relays;
      if (link_p) {
        cfg.network.fully_connected = false;
        cfg.network.link_probability = *link_p;
      }
      if (g.seed) cfg.network_seed = *g.seed;
      const Network net = generate_network(cfg.network, cfg.network_seed);
      fs::create_directories(cfg.out_dir);
      const auto file = (fs::path(cfg.out_dir) / "network.txt").string();
      save_network(file, net);
      write_run_manifest(cfg.out_dir, cfg, "gen-net", started, {{"network_file", file}});
      std::cout << file << '\n';
    } else if (*sel) {
      if (k_opt) cfg.paths.k = *k_opt;
      if (widest_opt) cfg.paths.n_widest = *widest_opt;
      if (g.seed) cfg.network_seed = *g.seed;
      cfg.network_file = net_file;
      const Instance inst = build_instance(cfg);
      fs::create_directories(cfg.out_dir);
      const auto file = (fs::path(cfg.out_dir) / "paths.txt").string();
      save_paths(file, inst.paths);
      write_run_manifest(cfg.out_dir, cfg, "select-paths", started,
                         {{"network_file", net_file}, {"paths_file", file}});
      const auto caps = path_capacities(inst.network, inst.paths);
      for (std::size_t i = 0; i < inst.paths.size(); ++i) {
        std::cout << inst.paths[i].to_string() << " capacity " << caps[i] << '\n';
      }
    } else if (*cap) {
      const Network net = load_network(net_file);
      if (paths_file.empty() && !all_paths) throw CLI::ValidationError("--paths or --all-paths");
      const PathSet ps = all_paths ? PathSet(enumerate_simple_paths(net)) : load_paths(paths_file);
      const auto sol = restricted_capacity(net, ps);
      write_solution(std::cout, sol);
      write_run_manifest(cfg.out_dir, cfg, "capacity", started,
                         {{"network_file", net_file}, {"paths_file", paths_file}});
    } else if (*base) {
      const Network net = load_network(net_file);
      const PathSet ps = load_paths(paths_file);
      const auto es = es_rates(net, ps);
      std::cout << "es_sum_rate " << es.sum_rate() << '\n';
      print_rates(std::cout, "es_rates", es.rates);
      if (ps.size() >= 2) {
        const auto sp = sp_rates(net, ps);
        std::cout << "sp_sum_rate " << sp.sum_rate() << '\n';
        print_rates(std::cout, "sp_rates", sp.rates);
      } else {
        std::cout << "sp_sum_rate " << sp_sum_rate(net, ps) << '\n';
      }
      write_run_manifest(cfg.out_dir, cfg, "baseline", started,
                         {{"network_file", net_file}, {"paths_file", paths_file}});
    } else if (*tr) {
      const auto seed = run_seed_of(g, cfg);
      cfg.seeds = {seed};
      cfg.validate();
      const Instance inst = build_instance(cfg);
      const fs::path dir(cfg.out_dir);
      fs::create_directories(dir);
      std::ofstream metrics(dir / ("seed_" + std::to_string(seed) + ".csv"));
      std::optional<std::ofstream> trace;
      if (cfg.traces) trace.emplace(dir / ("seed_" + std::to_string(seed) + "_trace.csv"));
      const auto ckpt = (dir / ("agent_seed_" + std::to_string(seed) + ".ckpt")).string();
      SeedObserver obs;
      obs.on_finish = [&](std::uint64_t, const SacAgent& agent) { agent.save_file(ckpt); };
      const auto res = run_seed(cfg, inst, seed, obs, &metrics, trace ? &*trace : nullptr);
      std::ofstream log(dir / ("seed_" + std::to_string(seed) + "_train.csv"));
      write_training_log_csv(log, res.training_log);
      save_network((dir / "network.txt").string(), inst.network);
      save_paths((dir / "paths.txt").string(), inst.paths);
      write_run_manifest(cfg.out_dir, cfg, "train", started, {{"checkpoint", ckpt}});
      const auto& last = res.metrics.back();
      std::cout << "episodes " << res.metrics.size() << " final_evaluation_rate "
                << last.evaluation_rate << " desired_rate " << last.desired_rate << '\n';
    } else if (*ev) {
      const auto seed = run_seed_of(g, cfg);
      const Instance inst = build_instance(cfg);
      const SacAgent agent = SacAgent::load_file(checkpoint);
      EnvConfig ec = cfg.env;
      ec.action_scale = agent.config().action_scale;
      SchedulingEnv env(inst.network, inst.paths, ec, derive_seed(seed, 12), inst.reference);
      env.reset(0);
      Rng rng(derive_seed(seed, 14));
      const double rate = evaluate(agent, env, repeats, rng, deterministic);
      std::cout << "evaluation_rate " << rate << " desired_rate " << env.desired_rate()
                << " restricted_capacity " << env.capacity() << '\n';
      write_run_manifest(cfg.out_dir, cfg, "eval", started, {{"checkpoint", checkpoint}});
    } else if (*ex) {
      if (g.seed) cfg.seeds = {*g.seed};
      const auto res = run_experiment(cfg);
      for (const auto& s : res.seeds) {
        std::cout << "seed " << s.seed << " final_evaluation_rate "
                  << s.metrics.back().evaluation_rate << " desired_rate "
                  << s.metrics.back().desired_rate << '\n';
      }
      std::cout << "wrote " << res.out_dir << '\n';
    } else if (*ks) {
      if (g.seed) cfg.seeds = {*g.seed};
      const auto res = run_k_sweep(cfg, k_values);
      for (std::size_t i = 0; i < res.size(); ++i) {
        double best = 0.0;
        for (const auto& s : res[i].seeds) {
          for (const auto& m : s.metrics) best = std::max(best, m.evaluation_rate);
        }
        std::cout << "k " << k_values[i] << " best_evaluation_rate " << best << '\n';
      }
      std::cout << "wrote " << cfg.out_dir << '\n';
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "mmsched: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
