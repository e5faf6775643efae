#include <benchmark/benchmark.h>

#include "mmsched/baselines.hpp"
#include "mmsched/env.hpp"
#include "mmsched/flowlp.hpp"
#include "mmsched/sac.hpp"

using namespace mmsched;

namespace {

struct Instance {
  Network net;
  PathSet paths;
};

Instance make_instance(int relays, int k) {
  NetworkSpec spec;
  spec.n_relays = relays;
  Instance inst{generate_network(spec, 7), {}};
  Rng rng(7);
  inst.paths = select_paths(inst.net, k, 2, rng);
  return inst;
}

Batch random_batch(std::size_t k, std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Transition> ts(n);
  for (auto& t : ts) {
    for (std::size_t j = 0; j < k; ++j) {
      t.state.push_back(u(rng));
      t.action.push_back(u(rng) - 0.5);
      t.next_state.push_back(u(rng));
    }
  }
  return make_batch(ts);
}

}  // namespace

static void BM_RestrictedCapacity(benchmark::State& state) {
  const auto inst = make_instance(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(restricted_capacity(inst.net, inst.paths).value);
}
BENCHMARK(BM_RestrictedCapacity)->Args({6, 6})->Args({15, 15});

static void BM_AllPathsCapacity(benchmark::State& state) {
  NetworkSpec spec;
  spec.n_relays = static_cast<int>(state.range(0));
  const Network net = generate_network(spec, 3);
  const PathSet ps(enumerate_simple_paths(net));
  state.counters["paths"] = static_cast<double>(ps.size());
  for (auto _ : state) benchmark::DoNotOptimize(restricted_capacity(net, ps).value);
}
BENCHMARK(BM_AllPathsCapacity)->Arg(3)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);

static void BM_IsFeasible(benchmark::State& state) {
  const auto inst = make_instance(15, 15);
  const auto lp = restricted_capacity(inst.net, inst.paths);
  for (auto _ : state) benchmark::DoNotOptimize(is_feasible(inst.net, inst.paths, lp.rates));
}
BENCHMARK(BM_IsFeasible);

static void BM_EnvStep(benchmark::State& state) {
  const auto inst = make_instance(6, 6);
  EnvConfig cfg;
  cfg.action_scale = 0.3;
  cfg.horizon = 1'000'000;
  SchedulingEnv env(inst.net, inst.paths, cfg, 1);
  env.reset(0);
  Rng rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> a(6);
  for (auto _ : state) {
    for (auto& x : a) x = u(rng);
    if (env.step(a).done) env.reset(0);
  }
}
BENCHMARK(BM_EnvStep);

static void BM_MlpForwardBackward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  Rng rng(1);
  const Mlp net({12, width, width, 1}, rng);
  const Matrix x = Matrix::Random(12, 32);
  const Matrix g = Matrix::Ones(1, 32);
  MlpCache cache;
  for (auto _ : state) {
    net.forward(x, &cache);
    benchmark::DoNotOptimize(net.backward(cache, g).params.data());
  }
}
BENCHMARK(BM_MlpForwardBackward)->Arg(64)->Arg(256);

static void BM_SampleAction(benchmark::State& state) {
  SacConfig cfg;
  cfg.buffer_capacity = 1000;
  const SacAgent agent(6, cfg, 1);
  Rng rng(1);
  const std::vector<double> s(6, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(agent.sample_action(s, rng).log_prob);
}
BENCHMARK(BM_SampleAction);

static void BM_SacUpdate(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  SacConfig cfg;
  cfg.buffer_capacity = 1000;
  SacAgent agent(k, cfg, 1);
  Rng rng(1);
  const Batch batch = random_batch(k, cfg.batch_size, rng);
  for (auto _ : state) benchmark::DoNotOptimize(agent.update(batch, rng).q1_loss);
}
BENCHMARK(BM_SacUpdate)->Arg(6)->Arg(15)->Unit(benchmark::kMillisecond);

static void BM_Baselines(benchmark::State& state) {
  const auto inst = make_instance(15, 15);
  for (auto _ : state) {
    benchmark::DoNotOptimize(es_rates(inst.net, inst.paths).sum_rate());
    benchmark::DoNotOptimize(sp_rates(inst.net, inst.paths).sum_rate());
  }
}
BENCHMARK(BM_Baselines);
