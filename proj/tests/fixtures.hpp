#pragma once

#include <vector>

#include "mmsched/topology.hpp"

namespace mmsched::testing {

/// 0 -> {1, 2} -> 3 with the given four link capacities (0-1, 0-2, 1-3, 2-3).
inline Network diamond(double c01 = 1, double c02 = 1, double c13 = 1, double c23 = 1) {
  Network net(2);
  net.add_link(0, 1, c01, 10);
  net.add_link(0, 2, c02, 20);
  net.add_link(1, 3, c13, 30);
  net.add_link(2, 3, c23, 40);
  return net;
}

inline PathSet diamond_paths() { return PathSet({Path({0, 1, 3}), Path({0, 2, 3})}); }

/// Source and destination joined through `caps.size() - 1` relays in a chain.
inline Network line(const std::vector<double>& caps) {
  Network net(static_cast<int>(caps.size()) - 1);
  for (std::size_t i = 0; i < caps.size(); ++i) {
    net.add_link(static_cast<NodeId>(i), static_cast<NodeId>(i + 1), caps[i], 1.0);
  }
  return net;
}

inline Path line_path(std::size_t hops) {
  std::vector<NodeId> nodes(hops + 1);
  for (std::size_t i = 0; i <= hops; ++i) nodes[i] = static_cast<NodeId>(i);
  return Path(nodes);
}

}  // namespace mmsched::testing
