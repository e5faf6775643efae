#include "mmsched/flowlp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "mmsched/simplex.hpp"

namespace mmsched {

namespace {

void check_lengths(const PathSet& ps, const RateVector& rates) {
  if (ps.size() != rates.size()) {
    throw std::invalid_argument("rate vector has " + std::to_string(rates.size()) +
                                " entries for " + std::to_string(ps.size()) + " paths");
  }
}

// Adds rate / capacity of every hop of `p` to the tx side of the sender and the
// rx side of the receiver.
void accumulate(const Network& net, const Path& p, double rate, NodeUsage& u) {
  const auto& nodes = p.nodes();
  for (std::size_t h = 0; h + 1 < nodes.size(); ++h) {
    const double l = net.link(nodes[h], nodes[h + 1]).effective_capacity();
    const double share = rate / l;
    u.tx[nodes[h]] += share;
    u.rx[nodes[h + 1]] += share;
  }
}

}  // namespace

double NodeUsage::max_usage() const {
  double m = 0.0;
  for (double v : tx) m = std::max(m, v);
  for (double v : rx) m = std::max(m, v);
  return m;
}

double activation_fraction(const Network& net, const Path& p, NodeId from, NodeId to) {
  if (p.next(from) != to) {
    throw std::invalid_argument("link " + std::to_string(from) + "->" + std::to_string(to) +
                                " is not on path " + p.to_string());
  }
  const double l = net.link(from, to).effective_capacity();
  if (!(l > 0.0)) {
    throw InfeasibleInput("link " + std::to_string(from) + "->" + std::to_string(to) +
                          " has zero effective capacity");
  }
  return path_capacity(net, p) / l;
}

NodeUsage node_usage(const Network& net, const PathSet& ps, const RateVector& rates) {
  check_lengths(ps, rates);
  const auto n = static_cast<std::size_t>(net.n_nodes());
  NodeUsage u{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (rates[i] == 0.0) continue;
    if (!(path_capacity(net, ps[i]) > 0.0)) {
      throw InfeasibleInput("positive rate on zero-capacity path " + ps[i].to_string());
    }
    accumulate(net, ps[i], rates[i], u);
  }
  return u;
}

bool is_feasible(const Network& net, const PathSet& ps, const RateVector& rates, double tol) {
  check_lengths(ps, rates);
  const auto n = static_cast<std::size_t>(net.n_nodes());
  NodeUsage u{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double r = rates[i];
    if (!std::isfinite(r) || r < -tol) return false;
    const bool usable = path_capacity(net, ps[i]) > 0.0;
    if (!usable) {
      if (r > tol) return false;
      continue;
    }
    accumulate(net, ps[i], r, u);
  }
  return u.max_usage() <= 1.0 + tol;
}

LpSolution restricted_capacity(const Network& net, const PathSet& ps) {
  LpSolution sol;
  sol.rates.assign(ps.size(), 0.0);
  if (ps.empty()) {
    sol.status = LpStatus::infeasible_input;
    return sol;
  }
  ps.validate(net);

  // Zero-capacity paths are fixed at rate 0 and dropped from the LP.
  std::vector<std::size_t> vars;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (path_capacity(net, ps[i]) > 0.0) vars.push_back(i);
  }
  if (vars.empty()) {
    sol.status = LpStatus::degenerate_ok;
    return sol;
  }

  // Row i is the tx constraint of node i, row n + i the rx constraint.
  const auto n = static_cast<std::size_t>(net.n_nodes());
  DenseLp lp(2 * n, vars.size());
  for (std::size_t v = 0; v < vars.size(); ++v) {
    const auto& nodes = ps[vars[v]].nodes();
    for (std::size_t h = 0; h + 1 < nodes.size(); ++h) {
      const double share = 1.0 / net.link(nodes[h], nodes[h + 1]).effective_capacity();
      lp.at(static_cast<std::size_t>(nodes[h]), v) += share;
      lp.at(n + static_cast<std::size_t>(nodes[h + 1]), v) += share;
    }
    lp.c[v] = 1.0;
  }
  std::fill(lp.b.begin(), lp.b.end(), 1.0);

  const std::size_t m = vars.size();
  DenseLp rotated(lp.rows, m);
  rotated.b = lp.b;
  std::fill(rotated.c.begin(), rotated.c.end(), 1.0);
  // Up to kMaxRotations column rotations, spread evenly over the path order.
  constexpr std::size_t kMaxRotations = 16;
  const std::size_t solves = std::min(m, kMaxRotations);
  for (std::size_t s = 0; s < solves; ++s) {
    const std::size_t rot = s * m / solves;
    for (std::size_t r = 0; r < lp.rows; ++r) {
      for (std::size_t v = 0; v < m; ++v) rotated.at(r, v) = lp.at(r, (v + rot) % m);
    }
    const auto res = simplex_maximize(rotated);
    if (res.status != SimplexStatus::optimal) {
      // Cannot happen for this LP: every variable is bounded by its path capacity.
      throw std::logic_error("restricted_capacity: simplex did not reach an optimum");
    }
    for (std::size_t v = 0; v < m; ++v) sol.rates[vars[(v + rot) % m]] += res.x[v];
    if (s == 0) sol.duals = res.duals;
  }
  for (double& r : sol.rates) r /= static_cast<double>(solves);
  sol.value = 0.0;
  for (double r : sol.rates) sol.value += r;
  sol.status = LpStatus::optimal;
  return sol;
}

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal:
      return "optimal";
    case LpStatus::infeasible_input:
      return "infeasible_input";
    case LpStatus::degenerate_ok:
      return "degenerate_ok";
  }
  return "unknown";
}

void write_solution(std::ostream& os, const LpSolution& sol) {
  const auto old = os.precision(17);
  os << "status " << to_string(sol.status) << '\n';
  os << "value " << sol.value << '\n';
  os << "rates";
  for (double r : sol.rates) os << ' ' << r;
  os << '\n';
  os.precision(old);
}

}  // namespace mmsched
