#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "mmsched/flowlp.hpp"

namespace mmsched {

struct BaselineSchedule {
  RateVector rates;
  std::vector<std::size_t> active_paths;
  std::vector<double> time_fractions;

  double sum_rate() const;
};

/// Equal time sharing: every path runs 1/k of the time.
BaselineSchedule es_rates(const Network& net, const PathSet& ps);

/// The two paths with the smallest summed link weight (ties to the lower index)
/// share time equally. A blocked pick keeps its half of the time idle.
/// Requires k >= 2.
BaselineSchedule sp_rates(const Network& net, const PathSet& ps);

/// Writes `episode,es_sum_rate,sp_sum_rate,desired_rate`.
void write_baseline_header(std::ostream& os);
void write_baseline_row(std::ostream& os, int episode, double es, double sp, double desired);

}  // namespace mmsched
