#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "mmsched/topology.hpp"

using namespace mmsched;
using mmsched::testing::diamond;
using mmsched::testing::line;
using mmsched::testing::line_path;

namespace {

NetworkSpec spec_with(int n) {
  NetworkSpec s;
  s.n_relays = n;
  return s;
}

}  // namespace

TEST(Network, AdmissiblePairsExcludeSelfLinksAndWrongDirections) {
  Network net(3);
  EXPECT_TRUE(net.admissible(0, 4));
  EXPECT_TRUE(net.admissible(1, 2));
  EXPECT_FALSE(net.admissible(1, 1));
  EXPECT_FALSE(net.admissible(2, 0));  // into the source
  EXPECT_FALSE(net.admissible(4, 1));  // out of the destination
  EXPECT_THROW(net.add_link(1, 0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(net.add_link(0, 1, -1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(net.link(0, 1), std::out_of_range);
}

TEST(Network, BlockedLinkKeepsBaseCapacity) {
  Network net = diamond(5, 2, 3, 4);
  net.set_blocked(0, 1, true);
  EXPECT_TRUE(net.link(0, 1).blocked);
  EXPECT_EQ(net.link(0, 1).effective_capacity(), 0.0);
  EXPECT_EQ(net.link(0, 1).base_capacity, 5.0);
  net.set_blocked(0, 1, false);
  EXPECT_EQ(net.link(0, 1).effective_capacity(), 5.0);
}

TEST(GenerateNetwork, SeededDeterminism) {
  const auto a = generate_network(spec_with(15), 7);
  const auto b = generate_network(spec_with(15), 7);
  EXPECT_TRUE(a == b);
  std::ostringstream sa, sb;
  write_network(sa, a);
  write_network(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_FALSE(a == generate_network(spec_with(15), 8));
}

TEST(GenerateNetwork, FullyConnectedRangesAndSymmetricWeights) {
  const auto net = generate_network(spec_with(15), 7);
  const int n = net.n_nodes();
  std::size_t expected = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!net.admissible(i, j)) continue;
      ++expected;
      ASSERT_TRUE(net.has_link(i, j));
      const auto& l = net.link(i, j);
      EXPECT_GE(l.base_capacity, 0.0);
      EXPECT_LE(l.base_capacity, 10.0);
      EXPECT_GE(l.weight, 0.0);
      EXPECT_LE(l.weight, 250.0);
      if (net.has_link(j, i)) EXPECT_EQ(l.weight, net.link(j, i).weight);
    }
  }
  EXPECT_EQ(net.link_count(), expected);
}

TEST(GenerateNetwork, RejectsInvertedIntervals) {
  NetworkSpec s = spec_with(3);
  s.capacity = {5.0, 1.0};
  EXPECT_THROW(generate_network(s, 1), std::invalid_argument);
  s = spec_with(3);
  s.weight = {-1.0, 1.0};
  EXPECT_THROW(generate_network(s, 1), std::invalid_argument);
}

TEST(GenerateNetwork, SparseModeDropsLinks) {
  NetworkSpec s = spec_with(8);
  s.fully_connected = false;
  s.link_probability = 0.3;
  const auto net = generate_network(s, 3);
  const auto full = generate_network(spec_with(8), 3);
  EXPECT_LT(net.link_count(), full.link_count());
}

TEST(PathCapacity, MinimumOverLinks) {
  const auto net = line({5, 3});
  EXPECT_EQ(path_capacity(net, line_path(2)), 3.0);
  Network single(0);
  single.add_link(0, 1, 4.2, 1.0);
  EXPECT_EQ(path_capacity(single, Path({0, 1})), 4.2);
}

TEST(PathCapacity, BlockedLinkGivesZero) {
  auto net = line({5, 3});
  net.set_blocked(1, 2, true);
  EXPECT_EQ(path_capacity(net, line_path(2)), 0.0);
}

TEST(PathCapacity, MissingLinkRejected) {
  const auto net = diamond();
  EXPECT_THROW(path_capacity(net, Path({0, 1, 2, 3})), std::out_of_range);
}

TEST(PathCapacity, MinPropertyOnRandomNetworks) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto net = generate_network(spec_with(5), seed);
    for (const auto& p : enumerate_simple_paths(net, 1000)) {
      const double c = path_capacity(net, p);
      bool equals_one = false;
      for (std::size_t h = 0; h + 1 < p.nodes().size(); ++h) {
        const double l = net.link(p.nodes()[h], p.nodes()[h + 1]).effective_capacity();
        EXPECT_LE(c, l);
        equals_one = equals_one || c == l;
      }
      EXPECT_TRUE(equals_one);
    }
  }
}

TEST(Path, Accessors) {
  const Path p({0, 2, 1, 3});
  EXPECT_EQ(p.next(2), 1);
  EXPECT_EQ(p.previous(2), 0);
  EXPECT_EQ(p.next(3), -1);
  EXPECT_EQ(p.previous(0), -1);
  EXPECT_EQ(p.hop_count(), 3u);
  EXPECT_EQ(p.to_string(), "0-2-1-3");
}

TEST(Path, ValidationRejectsLoopsAndWrongEndpoints) {
  const auto net = generate_network(spec_with(3), 1);
  EXPECT_TRUE(Path({0, 1, 4}).is_valid(net));
  EXPECT_FALSE(Path({0, 1, 2, 1, 4}).is_valid(net));
  EXPECT_FALSE(Path({1, 4}).is_valid(net));
  EXPECT_FALSE(Path({0, 1}).is_valid(net));
  EXPECT_THROW(PathSet({Path({0, 4}), Path({0, 4})}), std::invalid_argument);
}

TEST(StepCapacities, ZeroDriftLeavesNetworkUnchanged) {
  auto net = generate_network(spec_with(6), 2);
  const auto before = net;
  Rng rng(1);
  step_capacities(net, {0.0, 0.0}, {0.0, 10.0}, rng);
  EXPECT_TRUE(net == before);
}

TEST(StepCapacities, ClampsAtBothEnds) {
  Network net(0);
  net.add_link(0, 1, 9.8, 1.0);
  Rng rng(1);
  step_capacities(net, {0.7, 0.7}, {0.0, 10.0}, rng);
  EXPECT_EQ(net.link(0, 1).base_capacity, 10.0);

  Network low(0);
  low.add_link(0, 1, 0.3, 1.0);
  step_capacities(low, {-0.9, -0.9}, {0.0, 10.0}, rng);
  EXPECT_EQ(low.link(0, 1).base_capacity, 0.0);
}

TEST(StepCapacities, StaysInRangeAndKeepsBlockage) {
  auto net = generate_network(spec_with(6), 4);
  net.set_blocked(0, 1, true);
  Rng rng(9);
  for (int i = 0; i < 200; ++i) step_capacities(net, {-1.0, 1.0}, {0.0, 10.0}, rng);
  for (const auto& [a, b] : net.links()) {
    EXPECT_GE(net.link(a, b).base_capacity, 0.0);
    EXPECT_LE(net.link(a, b).base_capacity, 10.0);
  }
  EXPECT_TRUE(net.link(0, 1).blocked);
}

TEST(Blockage, ProbabilityFormula) {
  EXPECT_EQ(blockage_probability(1.0 / 500, 0.0), 0.0);
  EXPECT_EQ(blockage_probability(0.0, 250.0), 0.0);
  EXPECT_NEAR(blockage_probability(1.0 / 500, 250.0), 1.0 - std::exp(-0.5), 1e-15);
  EXPECT_NEAR(blockage_probability(1.0 / 500, 250.0), 0.3935, 1e-4);
}

TEST(Blockage, ZeroLambdaOrZeroWeightNeverBlocks) {
  auto net = generate_network(spec_with(5), 1);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    resample_blockage(net, 0.0, rng);
    EXPECT_FALSE(net.any_blocked());
  }
  Network zero(1);
  zero.add_link(0, 1, 1.0, 0.0);
  zero.add_link(1, 2, 1.0, 0.0);
  zero.add_link(0, 2, 1.0, 0.0);
  for (int i = 0; i < 100; ++i) {
    resample_blockage(zero, 1.0, rng);
    EXPECT_FALSE(zero.any_blocked());
  }
  EXPECT_THROW(resample_blockage(net, -1.0, rng), std::invalid_argument);
}

TEST(Blockage, SymmetricAndClearedOnResample) {
  auto net = generate_network(spec_with(6), 5);
  Rng rng(11);
  bool saw_block = false;
  for (int t = 0; t < 50; ++t) {
    resample_blockage(net, 1.0 / 100, rng);
    for (const auto& [a, b] : net.links()) {
      if (net.has_link(b, a)) EXPECT_EQ(net.link(a, b).blocked, net.link(b, a).blocked);
      saw_block = saw_block || net.link(a, b).blocked;
    }
  }
  EXPECT_TRUE(saw_block);
  resample_blockage(net, 0.0, rng);
  EXPECT_FALSE(net.any_blocked());
}

TEST(Blockage, MonteCarloFrequencyMatchesFormula) {
  Network net(0);
  net.add_link(0, 1, 1.0, 250.0);
  Rng rng(2024);
  const int trials = 100000;
  int blocked = 0;
  for (int t = 0; t < trials; ++t) {
    resample_blockage(net, 1.0 / 500, rng);
    blocked += net.link(0, 1).blocked ? 1 : 0;
  }
  const double p = 1.0 - std::exp(-0.5);
  const double se = std::sqrt(p * (1 - p) / trials);
  EXPECT_NEAR(static_cast<double>(blocked) / trials, p, 3 * se);
}

TEST(WidestPath, DiamondPicksLargerBottleneck) {
  const auto net = diamond(5, 2, 6, 9);
  EXPECT_EQ(widest_path(net), Path({0, 1, 3}));
  const auto net2 = diamond(1, 7, 6, 9);
  EXPECT_EQ(widest_path(net2), Path({0, 2, 3}));
}

TEST(WidestPath, TiesGoToLowerIndex) {
  const auto net = diamond(3, 3, 3, 3);
  EXPECT_EQ(widest_path(net), Path({0, 1, 3}));
}

TEST(WidestPath, MatchesBruteForceBottleneck) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto net = generate_network(spec_with(4), seed);
    double best = 0.0;
    for (const auto& p : enumerate_simple_paths(net)) best = std::max(best, path_capacity(net, p));
    EXPECT_EQ(path_capacity(net, widest_path(net)), best) << "seed " << seed;
  }
}

TEST(SelectPaths, SinglePathLine) {
  const auto net = line({4, 2, 5});
  Rng rng(1);
  const auto ps = select_paths(net, 1, 1, rng);
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_EQ(ps[0], line_path(3));
  Rng rng2(1);
  const auto random_only = select_paths(net, 1, 0, rng2);
  EXPECT_EQ(random_only[0], line_path(3));
}

TEST(SelectPaths, DiamondWidestFirst) {
  const auto net = diamond(5, 2, 6, 9);
  Rng rng(1);
  const auto ps = select_paths(net, 2, 1, rng);
  EXPECT_EQ(ps[0], Path({0, 1, 3}));
  EXPECT_EQ(ps[1], Path({0, 2, 3}));
}

TEST(SelectPaths, DistinctValidPathsAndRngIndependentWidestPart) {
  const auto net = generate_network(spec_with(15), 7);
  Rng a(1), b(99);
  const auto pa = select_paths(net, 15, 4, a);
  const auto pb = select_paths(net, 15, 4, b);
  ASSERT_EQ(pa.size(), 15u);
  std::set<Path> seen(pa.begin(), pa.end());
  EXPECT_EQ(seen.size(), 15u);
  for (const auto& p : pa) EXPECT_TRUE(p.is_valid(net));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(pa[i], pb[i]);
  EXPECT_EQ(pa[0], widest_path(net));
}

TEST(SelectPaths, FailsWhenTooFewPathsExist) {
  const auto net = diamond();
  Rng rng(1);
  EXPECT_THROW(select_paths(net, 3, 0, rng), std::runtime_error);
}

TEST(EnumeratePaths, CountsOnCompleteGraphs) {
  // Fully connected with N relays: sum over m of N!/(N-m)! simple paths.
  const std::size_t expected[] = {1, 2, 5, 16, 65, 326};
  for (int n = 0; n <= 5; ++n) {
    const auto net = generate_network(spec_with(n), 1);
    const auto paths = enumerate_simple_paths(net);
    EXPECT_EQ(paths.size(), expected[n]) << "N=" << n;
    std::set<Path> uniq(paths.begin(), paths.end());
    EXPECT_EQ(uniq.size(), paths.size());
  }
}

TEST(NetworkFile, RoundTripIsExact) {
  auto net = generate_network(spec_with(6), 13);
  net.set_blocked(2, 3, true);
  std::stringstream ss;
  write_network(ss, net);
  const auto back = read_network(ss);
  EXPECT_TRUE(back == net);
  for (const auto& [a, b] : net.links()) {
    EXPECT_EQ(back.link(a, b).base_capacity, net.link(a, b).base_capacity);
  }
}

TEST(NetworkFile, RejectsBadHeader) {
  std::istringstream in("not-a-network 1\n");
  EXPECT_THROW(read_network(in), std::runtime_error);
}

TEST(PathFile, RoundTrip) {
  const PathSet ps({Path({0, 1, 3}), Path({0, 2, 1, 3}), Path({0, 3})});
  std::stringstream ss;
  write_paths(ss, ps);
  EXPECT_EQ(read_paths(ss), ps);
}
