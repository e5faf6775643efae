#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace mmsched {

using Rng = std::mt19937_64;

/// Node index in a 1-2-1 network: 0 is the source, n_relays + 1 the destination.
using NodeId = int;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  double clamp(double v) const;
};

/// One directed link. A blocked link keeps its base capacity but carries nothing.
struct Link {
  double base_capacity = 0.0;
  double weight = 0.0;
  bool blocked = false;

  double effective_capacity() const { return blocked ? 0.0 : base_capacity; }
};

/// Directed Gaussian 1-2-1 network over nodes [0, n_relays + 1].
///
/// Links exist only for ordered pairs (i, j) with i in [0:N], j in [1:N+1], i != j.
/// Weights are kept symmetric per unordered node pair by `set_weight`.
class Network {
 public:
  Network() = default;
  explicit Network(int n_relays);

  int n_relays() const { return n_relays_; }
  int n_nodes() const { return n_relays_ + 2; }
  NodeId source() const { return 0; }
  NodeId destination() const { return n_relays_ + 1; }

  /// True when (from, to) is an ordered pair that may carry a link at all.
  bool admissible(NodeId from, NodeId to) const;
  bool has_link(NodeId from, NodeId to) const;

  const Link& link(NodeId from, NodeId to) const;
  Link& link(NodeId from, NodeId to);

  void add_link(NodeId from, NodeId to, double base_capacity, double weight);
  void remove_link(NodeId from, NodeId to);

  /// Sets the weight on both directions of the pair (where links exist).
  void set_weight(NodeId a, NodeId b, double weight);
  /// Sets the blocked flag on both directions of the pair (where links exist).
  void set_blocked(NodeId a, NodeId b, bool blocked);

  /// Existing links in (from, to) lexicographic order.
  std::vector<std::pair<NodeId, NodeId>> links() const;
  /// Outgoing neighbours of `from`, ascending.
  std::vector<NodeId> successors(NodeId from) const;

  std::size_t link_count() const;
  bool any_blocked() const;

  friend bool operator==(const Network& a, const Network& b);

 private:
  std::size_t index(NodeId from, NodeId to) const;
  void check_node(NodeId n) const;

  int n_relays_ = 0;
  std::vector<Link> links_;
  std::vector<char> present_;
};

bool operator==(const Link& a, const Link& b);

/// Simple source-to-destination node sequence.
class Path {
 public:
  Path() = default;
  explicit Path(std::vector<NodeId> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<NodeId>& nodes() const { return nodes_; }
  std::size_t hop_count() const { return nodes_.empty() ? 0 : nodes_.size() - 1; }

  /// Node after / before `node` on this path, or -1 if none.
  NodeId next(NodeId node) const;
  NodeId previous(NodeId node) const;
  bool visits(NodeId node) const;

  /// Throws std::invalid_argument unless the path is a simple source-destination
  /// path whose every hop is a link of `net`.
  void validate(const Network& net) const;
  bool is_valid(const Network& net) const;

  std::string to_string() const;

  friend bool operator==(const Path&, const Path&) = default;
  friend auto operator<=>(const Path&, const Path&) = default;

 private:
  std::vector<NodeId> nodes_;
};

/// Ordered list of distinct paths; index i is the i-th coordinate of the rate vector.
class PathSet {
 public:
  PathSet() = default;
  explicit PathSet(std::vector<Path> paths);

  std::size_t size() const { return paths_.size(); }
  bool empty() const { return paths_.empty(); }
  const Path& operator[](std::size_t i) const { return paths_[i]; }
  const std::vector<Path>& paths() const { return paths_; }
  auto begin() const { return paths_.begin(); }
  auto end() const { return paths_.end(); }

  bool contains(const Path& p) const;
  /// First `k` paths (k <= size()).
  PathSet prefix(std::size_t k) const;
  void validate(const Network& net) const;

  friend bool operator==(const PathSet&, const PathSet&) = default;

 private:
  std::vector<Path> paths_;
};

struct NetworkSpec {
  int n_relays = 15;
  Interval capacity{0.0, 10.0};
  Interval weight{0.0, 250.0};
  bool fully_connected = true;
  /// Probability that an admissible ordered pair gets a link when not fully connected.
  double link_probability = 0.5;
};

Network generate_network(const NetworkSpec& spec, std::uint64_t seed);

/// Minimum effective capacity along `p`; 0 if any hop is blocked.
double path_capacity(const Network& net, const Path& p);
std::vector<double> path_capacities(const Network& net, const PathSet& ps);

/// Sum of link weights along `p`.
double path_length(const Network& net, const Path& p);

/// Per-episode capacity drift: each base capacity gets an independent uniform
/// delta from `delta`, then is clamped into `clamp`. Blocked flags untouched.
void step_capacities(Network& net, const Interval& delta, const Interval& clamp, Rng& rng);

/// Clears every blocked flag, then blocks each node pair (both directions)
/// independently with probability 1 - exp(-lambda * weight).
void resample_blockage(Network& net, double lambda, Rng& rng);

double blockage_probability(double lambda, double weight);

/// Maximum-bottleneck path under effective capacities, ties to lowest node index.
/// Returns an empty path when the destination is unreachable.
Path widest_path(const Network& net);

/// First `n_widest` paths are successive widest paths (removing each found
/// path's bottleneck link before the next search); the rest are distinct
/// loop-erased random walks.
PathSet select_paths(const Network& net, int k, int n_widest, Rng& rng);

/// Every simple source-destination path, depth-first in ascending node order.
std::vector<Path> enumerate_simple_paths(const Network& net, std::size_t limit = 1'000'000);

// Text formats.
void write_network(std::ostream& os, const Network& net);
Network read_network(std::istream& is);
void save_network(const std::string& file, const Network& net);
Network load_network(const std::string& file);

void write_paths(std::ostream& os, const PathSet& ps);
PathSet read_paths(std::istream& is);
void save_paths(const std::string& file, const PathSet& ps);
PathSet load_paths(const std::string& file);

}  // namespace mmsched
