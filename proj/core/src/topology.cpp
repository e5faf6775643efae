#include "mmsched/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mmsched {

namespace {

constexpr const char* kNetworkMagic = "mmsched-network";
constexpr int kNetworkVersion = 1;

void check_interval(const Interval& iv, const char* what) {
  if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
    throw std::invalid_argument(std::string("invalid ") + what + " interval [" +
                                std::to_string(iv.lo) + ", " + std::to_string(iv.hi) + "]");
  }
}

double uniform(Rng& rng, const Interval& iv) {
  return std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng);
}

}  // namespace

double Interval::clamp(double v) const { return std::clamp(v, lo, hi); }

bool operator==(const Link& a, const Link& b) {
  return a.base_capacity == b.base_capacity && a.weight == b.weight && a.blocked == b.blocked;
}

// ---------------------------------------------------------------------------
// Network

Network::Network(int n_relays) : n_relays_(n_relays) {
  if (n_relays < 0) throw std::invalid_argument("n_relays must be >= 0");
  const auto n = static_cast<std::size_t>(n_nodes());
  links_.assign(n * n, Link{});
  present_.assign(n * n, 0);
}

void Network::check_node(NodeId n) const {
  if (n < 0 || n >= n_nodes()) {
    throw std::out_of_range("node " + std::to_string(n) + " outside [0, " +
                            std::to_string(n_nodes() - 1) + "]");
  }
}

std::size_t Network::index(NodeId from, NodeId to) const {
  check_node(from);
  check_node(to);
  return static_cast<std::size_t>(from) * static_cast<std::size_t>(n_nodes()) +
         static_cast<std::size_t>(to);
}

bool Network::admissible(NodeId from, NodeId to) const {
  return from >= 0 && from <= n_relays_ && to >= 1 && to <= n_relays_ + 1 && from != to;
}

bool Network::has_link(NodeId from, NodeId to) const {
  if (from < 0 || to < 0 || from >= n_nodes() || to >= n_nodes()) return false;
  return present_[index(from, to)] != 0;
}

const Link& Network::link(NodeId from, NodeId to) const {
  if (!has_link(from, to)) {
    throw std::out_of_range("no link " + std::to_string(from) + "->" + std::to_string(to));
  }
  return links_[index(from, to)];
}

Link& Network::link(NodeId from, NodeId to) {
  if (!has_link(from, to)) {
    throw std::out_of_range("no link " + std::to_string(from) + "->" + std::to_string(to));
  }
  return links_[index(from, to)];
}

void Network::add_link(NodeId from, NodeId to, double base_capacity, double weight) {
  if (!admissible(from, to)) {
    throw std::invalid_argument("inadmissible link " + std::to_string(from) + "->" +
                                std::to_string(to));
  }
  if (!(base_capacity >= 0.0) || !std::isfinite(base_capacity)) {
    throw std::invalid_argument("link capacity must be finite and >= 0");
  }
  const auto i = index(from, to);
  present_[i] = 1;
  links_[i] = Link{base_capacity, weight, false};
}

void Network::remove_link(NodeId from, NodeId to) {
  const auto i = index(from, to);
  present_[i] = 0;
  links_[i] = Link{};
}

void Network::set_weight(NodeId a, NodeId b, double weight) {
  if (has_link(a, b)) link(a, b).weight = weight;
  if (has_link(b, a)) link(b, a).weight = weight;
}

void Network::set_blocked(NodeId a, NodeId b, bool blocked) {
  if (has_link(a, b)) link(a, b).blocked = blocked;
  if (has_link(b, a)) link(b, a).blocked = blocked;
}

std::vector<std::pair<NodeId, NodeId>> Network::links() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (NodeId i = 0; i < n_nodes(); ++i) {
    for (NodeId j = 0; j < n_nodes(); ++j) {
      if (present_[index(i, j)]) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<NodeId> Network::successors(NodeId from) const {
  std::vector<NodeId> out;
  for (NodeId j = 0; j < n_nodes(); ++j) {
    if (present_[index(from, j)]) out.push_back(j);
  }
  return out;
}

std::size_t Network::link_count() const {
  return static_cast<std::size_t>(std::count(present_.begin(), present_.end(), char{1}));
}

bool Network::any_blocked() const {
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (present_[i] && links_[i].blocked) return true;
  }
  return false;
}

bool operator==(const Network& a, const Network& b) {
  return a.n_relays_ == b.n_relays_ && a.present_ == b.present_ && a.links_ == b.links_;
}

// ---------------------------------------------------------------------------
// Path / PathSet

NodeId Path::next(NodeId node) const {
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    if (nodes_[i] == node) return nodes_[i + 1];
  }
  return -1;
}

NodeId Path::previous(NodeId node) const {
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (nodes_[i] == node) return nodes_[i - 1];
  }
  return -1;
}

bool Path::visits(NodeId node) const {
  return std::find(nodes_.begin(), nodes_.end(), node) != nodes_.end();
}

void Path::validate(const Network& net) const {
  if (nodes_.size() < 2) throw std::invalid_argument("path needs at least two nodes");
  if (nodes_.front() != net.source()) {
    throw std::invalid_argument("path " + to_string() + " does not start at the source");
  }
  if (nodes_.back() != net.destination()) {
    throw std::invalid_argument("path " + to_string() + " does not end at the destination");
  }
  std::vector<char> seen(static_cast<std::size_t>(net.n_nodes()), 0);
  for (NodeId n : nodes_) {
    if (n < 0 || n >= net.n_nodes()) {
      throw std::invalid_argument("path " + to_string() + " has an out-of-range node");
    }
    if (seen[static_cast<std::size_t>(n)]++) {
      throw std::invalid_argument("path " + to_string() + " is not simple");
    }
  }
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    if (!net.has_link(nodes_[i], nodes_[i + 1])) {
      throw std::invalid_argument("path " + to_string() + " uses missing link " +
                                  std::to_string(nodes_[i]) + "->" +
                                  std::to_string(nodes_[i + 1]));
    }
  }
}

bool Path::is_valid(const Network& net) const {
  try {
    validate(net);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

std::string Path::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (i) s += "-";
    s += std::to_string(nodes_[i]);
  }
  return s;
}

PathSet::PathSet(std::vector<Path> paths) : paths_(std::move(paths)) {
  for (std::size_t i = 0; i < paths_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (paths_[i] == paths_[j]) {
        throw std::invalid_argument("duplicate path " + paths_[i].to_string() + " in path set");
      }
    }
  }
}

bool PathSet::contains(const Path& p) const {
  return std::find(paths_.begin(), paths_.end(), p) != paths_.end();
}

PathSet PathSet::prefix(std::size_t k) const {
  if (k > paths_.size()) throw std::out_of_range("prefix longer than path set");
  return PathSet(std::vector<Path>(paths_.begin(), paths_.begin() + static_cast<long>(k)));
}

void PathSet::validate(const Network& net) const {
  for (const auto& p : paths_) p.validate(net);
}

// ---------------------------------------------------------------------------
// Generation and dynamics

Network generate_network(const NetworkSpec& spec, std::uint64_t seed) {
  check_interval(spec.capacity, "capacity");
  check_interval(spec.weight, "weight");
  if (spec.capacity.lo < 0.0 || spec.weight.lo < 0.0) {
    throw std::invalid_argument("capacity and weight ranges must be nonnegative");
  }
  if (!spec.fully_connected && !(spec.link_probability >= 0.0 && spec.link_probability <= 1.0)) {
    throw std::invalid_argument("link_probability must lie in [0, 1]");
  }
  Rng rng(seed);
  Network net(spec.n_relays);
  const int n = net.n_nodes();
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = 0; j < n; ++j) {
      if (!net.admissible(i, j)) continue;
      const double cap = uniform(rng, spec.capacity);
      bool keep = true;
      if (!spec.fully_connected) {
        keep = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < spec.link_probability;
      }
      if (keep) net.add_link(i, j, cap, 0.0);
    }
  }
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      if (!net.admissible(i, j) && !net.admissible(j, i)) continue;
      const double w = uniform(rng, spec.weight);
      net.set_weight(i, j, w);
    }
  }
  return net;
}

double path_capacity(const Network& net, const Path& p) {
  const auto& nodes = p.nodes();
  if (nodes.size() < 2) throw std::invalid_argument("path needs at least one hop");
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    c = std::min(c, net.link(nodes[i], nodes[i + 1]).effective_capacity());
  }
  return c;
}

std::vector<double> path_capacities(const Network& net, const PathSet& ps) {
  std::vector<double> out;
  out.reserve(ps.size());
  for (const auto& p : ps) out.push_back(path_capacity(net, p));
  return out;
}

double path_length(const Network& net, const Path& p) {
  const auto& nodes = p.nodes();
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) len += net.link(nodes[i], nodes[i + 1]).weight;
  return len;
}

void step_capacities(Network& net, const Interval& delta, const Interval& clamp, Rng& rng) {
  check_interval(delta, "drift");
  check_interval(clamp, "clamp");
  for (auto [i, j] : net.links()) {
    auto& l = net.link(i, j);
    l.base_capacity = clamp.clamp(l.base_capacity + uniform(rng, delta));
  }
}

double blockage_probability(double lambda, double weight) {
  return -std::expm1(-lambda * weight);
}

void resample_blockage(Network& net, double lambda, Rng& rng) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("blockage rate lambda must be finite and >= 0");
  }
  const int n = net.n_nodes();
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const bool forward = net.has_link(i, j);
      const bool backward = net.has_link(j, i);
      if (!forward && !backward) continue;
      const double w = forward ? net.link(i, j).weight : net.link(j, i).weight;
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      net.set_blocked(i, j, u < blockage_probability(lambda, w));
    }
  }
}

// ---------------------------------------------------------------------------
// Path search

Path widest_path(const Network& net) {
  const int n = net.n_nodes();
  std::vector<double> width(static_cast<std::size_t>(n), -1.0);
  std::vector<NodeId> parent(static_cast<std::size_t>(n), -1);
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  width[0] = std::numeric_limits<double>::infinity();

  for (;;) {
    NodeId u = -1;
    for (NodeId v = 0; v < n; ++v) {
      if (done[v] || width[v] < 0.0) continue;
      if (u < 0 || width[v] > width[u]) u = v;
    }
    if (u < 0) break;
    done[u] = 1;
    if (u == net.destination()) break;
    for (NodeId v : net.successors(u)) {
      if (done[v]) continue;
      const double cand = std::min(width[u], net.link(u, v).effective_capacity());
      if (cand > width[v]) {
        width[v] = cand;
        parent[v] = u;
      }
    }
  }
  if (!done[net.destination()]) return Path{};
  std::vector<NodeId> nodes;
  for (NodeId v = net.destination(); v != -1; v = parent[v]) nodes.push_back(v);
  std::reverse(nodes.begin(), nodes.end());
  return Path(std::move(nodes));
}

namespace {

// Loop-erased random walk from the source; empty on exceeding the step budget.
Path loop_erased_walk(const Network& net, Rng& rng, int max_steps) {
  std::vector<NodeId> walk{net.source()};
  for (int step = 0; step < max_steps; ++step) {
    const auto succ = net.successors(walk.back());
    if (succ.empty()) return Path{};
    const auto pick = std::uniform_int_distribution<std::size_t>(0, succ.size() - 1)(rng);
    const NodeId next = succ[pick];
    auto it = std::find(walk.begin(), walk.end(), next);
    if (it != walk.end()) {
      walk.erase(it + 1, walk.end());
    } else {
      walk.push_back(next);
    }
    if (next == net.destination()) return Path(std::move(walk));
  }
  return Path{};
}

}  // namespace

PathSet select_paths(const Network& net, int k, int n_widest, Rng& rng) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (n_widest < 0 || n_widest > k) throw std::invalid_argument("n_widest must lie in [0, k]");

  std::vector<Path> chosen;
  Network work = net;
  for (int i = 0; i < n_widest; ++i) {
    Path p = widest_path(work);
    if (p.nodes().empty()) break;
    const auto& nodes = p.nodes();
    double bottleneck = std::numeric_limits<double>::infinity();
    std::size_t at = 0;
    for (std::size_t h = 0; h + 1 < nodes.size(); ++h) {
      const double c = work.link(nodes[h], nodes[h + 1]).effective_capacity();
      if (c < bottleneck) {
        bottleneck = c;
        at = h;
      }
    }
    work.remove_link(nodes[at], nodes[at + 1]);
    chosen.push_back(std::move(p));
  }

  const int max_steps = 100 * net.n_nodes();
  const int budget = 1000 * k;
  int attempts = 0;
  while (static_cast<int>(chosen.size()) < k) {
    if (attempts++ >= budget) {
      throw std::runtime_error("select_paths: found only " + std::to_string(chosen.size()) +
                               " distinct simple paths of the requested " + std::to_string(k) +
                               " after " + std::to_string(budget) + " random walks");
    }
    Path p = loop_erased_walk(net, rng, max_steps);
    if (p.nodes().empty()) continue;
    if (std::find(chosen.begin(), chosen.end(), p) != chosen.end()) continue;
    chosen.push_back(std::move(p));
  }
  return PathSet(std::move(chosen));
}

std::vector<Path> enumerate_simple_paths(const Network& net, std::size_t limit) {
  std::vector<Path> out;
  std::vector<NodeId> stack{net.source()};
  std::vector<char> on_path(static_cast<std::size_t>(net.n_nodes()), 0);
  on_path[0] = 1;
  // Iterative DFS: next_child[d] is the successor index to try at depth d.
  std::vector<std::vector<NodeId>> succ(static_cast<std::size_t>(net.n_nodes()));
  for (NodeId v = 0; v < net.n_nodes(); ++v) succ[v] = net.successors(v);
  std::vector<std::size_t> next_child{0};
  while (!stack.empty()) {
    const NodeId u = stack.back();
    auto& idx = next_child.back();
    if (u == net.destination() || idx >= succ[u].size()) {
      on_path[u] = 0;
      stack.pop_back();
      next_child.pop_back();
      continue;
    }
    const NodeId v = succ[u][idx++];
    if (on_path[v]) continue;
    if (v == net.destination()) {
      auto nodes = stack;
      nodes.push_back(v);
      out.emplace_back(std::move(nodes));
      if (out.size() >= limit) {
        throw std::length_error("enumerate_simple_paths: more than " + std::to_string(limit) +
                                " paths");
      }
      continue;
    }
    on_path[v] = 1;
    stack.push_back(v);
    next_child.push_back(0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text formats

void write_network(std::ostream& os, const Network& net) {
  os << kNetworkMagic << ' ' << kNetworkVersion << '\n';
  os << "n_relays " << net.n_relays() << '\n';
  const auto links = net.links();
  os << "links " << links.size() << '\n';
  os << "# from to base_capacity weight blocked\n";
  os << std::setprecision(17);
  for (auto [i, j] : links) {
    const auto& l = net.link(i, j);
    os << i << ' ' << j << ' ' << l.base_capacity << ' ' << l.weight << ' ' << (l.blocked ? 1 : 0)
       << '\n';
  }
}

Network read_network(std::istream& is) {
  std::string line;
  auto next_line = [&]() -> std::string {
    while (std::getline(is, line)) {
      if (!line.empty() && line[0] != '#') return line;
    }
    throw std::runtime_error("network file truncated");
  };
  std::istringstream header(next_line());
  std::string magic;
  int version = 0;
  header >> magic >> version;
  if (magic != kNetworkMagic) throw std::runtime_error("not a network file (bad header)");
  if (version != kNetworkVersion) {
    throw std::runtime_error("unsupported network file version " + std::to_string(version));
  }
  std::string key;
  int n_relays = -1;
  std::istringstream(next_line()) >> key >> n_relays;
  if (key != "n_relays" || n_relays < 0) throw std::runtime_error("network file: bad n_relays");
  std::size_t count = 0;
  std::istringstream(next_line()) >> key >> count;
  if (key != "links") throw std::runtime_error("network file: missing link count");
  Network net(n_relays);
  for (std::size_t r = 0; r < count; ++r) {
    std::istringstream rec(next_line());
    NodeId i = -1;
    NodeId j = -1;
    double cap = 0.0;
    double w = 0.0;
    int blocked = 0;
    if (!(rec >> i >> j >> cap >> w >> blocked)) {
      throw std::runtime_error("network file: malformed link record '" + line + "'");
    }
    net.add_link(i, j, cap, w);
    net.link(i, j).blocked = blocked != 0;
  }
  return net;
}

void save_network(const std::string& file, const Network& net) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot write " + file);
  write_network(os, net);
}

Network load_network(const std::string& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot read " + file);
  return read_network(is);
}

void write_paths(std::ostream& os, const PathSet& ps) {
  os << "# one path per line: node ids from source to destination\n";
  for (const auto& p : ps) {
    const auto& nodes = p.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) os << (i ? " " : "") << nodes[i];
    os << '\n';
  }
}

PathSet read_paths(std::istream& is) {
  std::vector<Path> paths;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream rec(line);
    std::vector<NodeId> nodes;
    NodeId n = 0;
    while (rec >> n) nodes.push_back(n);
    if (!rec.eof()) throw std::runtime_error("path file: malformed line '" + line + "'");
    if (nodes.empty()) continue;
    paths.emplace_back(std::move(nodes));
  }
  return PathSet(std::move(paths));
}

void save_paths(const std::string& file, const PathSet& ps) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot write " + file);
  write_paths(os, ps);
}

PathSet load_paths(const std::string& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot read " + file);
  return read_paths(is);
}

}  // namespace mmsched
