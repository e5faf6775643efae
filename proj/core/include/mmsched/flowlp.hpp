#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmsched/topology.hpp"

namespace mmsched {

/// Per-path rates; entry i is the rate on the i-th path of a PathSet.
/// A rate r_p corresponds to time fraction x_p = r_p / C_p.
using RateVector = std::vector<double>;

inline constexpr double kLpTolerance = 1e-9;
inline constexpr double kValidityTolerance = 1e-12;

/// Fractions of time each node spends transmitting / receiving, indexed by node id.
/// tx[destination] and rx[source] are always 0.
struct NodeUsage {
  std::vector<double> tx;
  std::vector<double> rx;

  double max_usage() const;
};

enum class LpStatus { optimal, infeasible_input, degenerate_ok };

struct LpSolution {
  double value = 0.0;
  RateVector rates;
  LpStatus status = LpStatus::optimal;
  /// Shadow prices of the node constraints: entry i for tx of node i, entry
  /// n_nodes + i for rx of node i. Empty unless status is optimal.
  std::vector<double> duals;
};

/// Thrown when a positive rate is asked of a path with a zero-capacity hop.
class InfeasibleInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Share of time link (from -> to) must be active to carry path p at full capacity: C_p / l.
/// Throws InfeasibleInput for a zero-capacity (e.g. blocked) link.
double activation_fraction(const Network& net, const Path& p, NodeId from, NodeId to);

NodeUsage node_usage(const Network& net, const PathSet& ps, const RateVector& rates);

/// Rates are nonnegative (to within tol), no positive rate rides a dead path,
/// and no node transmits or receives more than 100% of the time (to within tol).
bool is_feasible(const Network& net, const PathSet& ps, const RateVector& rates,
                 double tol = kLpTolerance);

/// Maximum total rate over `ps` under the per-node scheduling constraints.
/// When the optimum is not unique the returned rates are the mean of the
/// Bland-rule vertices found under cyclic rotations of the path order (at
/// most 16, evenly spaced), so symmetric paths receive equal rates.
LpSolution restricted_capacity(const Network& net, const PathSet& ps);

std::string to_string(LpStatus s);
void write_solution(std::ostream& os, const LpSolution& sol);

}  // namespace mmsched
