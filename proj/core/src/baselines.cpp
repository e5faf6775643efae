#include "mmsched/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace mmsched {

double BaselineSchedule::sum_rate() const {
  return std::accumulate(rates.begin(), rates.end(), 0.0);
}

BaselineSchedule es_rates(const Network& net, const PathSet& ps) {
  if (ps.empty()) throw std::invalid_argument("es_rates: empty path set");
  const auto k = ps.size();
  const double share = 1.0 / static_cast<double>(k);
  BaselineSchedule s;
  s.time_fractions.assign(k, share);
  s.rates.resize(k);
  s.active_paths.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    s.rates[i] = path_capacity(net, ps[i]) / static_cast<double>(k);
    s.active_paths[i] = i;
  }
  return s;
}

BaselineSchedule sp_rates(const Network& net, const PathSet& ps) {
  if (ps.size() < 2) throw std::invalid_argument("sp_rates: needs at least two paths");
  std::vector<std::size_t> order(ps.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> len(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) len[i] = path_length(net, ps[i]);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return len[a] < len[b]; });

  BaselineSchedule s;
  s.rates.assign(ps.size(), 0.0);
  s.time_fractions.assign(ps.size(), 0.0);
  s.active_paths = {std::min(order[0], order[1]), std::max(order[0], order[1])};
  for (std::size_t i : s.active_paths) {
    s.time_fractions[i] = 0.5;
    s.rates[i] = path_capacity(net, ps[i]) / 2.0;
  }
  return s;
}

void write_baseline_header(std::ostream& os) { os << "episode,es_sum_rate,sp_sum_rate,desired_rate\n"; }

void write_baseline_row(std::ostream& os, int episode, double es, double sp, double desired) {
  const auto old = os.precision(9);
  os << episode << ',' << es << ',' << sp << ',' << desired << '\n';
  os.precision(old);
}

}  // namespace mmsched
