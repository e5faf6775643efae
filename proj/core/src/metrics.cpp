#include "mmsched/metrics.hpp"

#include <stdexcept>

namespace mmsched {

double average_training_rate(std::span<const double> step_rates, int horizon) {
  if (step_rates.empty()) throw std::invalid_argument("average_training_rate: empty trace");
  if (horizon < 1 || step_rates.size() > static_cast<std::size_t>(horizon)) {
    throw std::invalid_argument("average_training_rate: trace longer than the horizon");
  }
  double total = 0.0;
  for (double r : step_rates) total += r;
  total += static_cast<double>(static_cast<std::size_t>(horizon) - step_rates.size()) *
           step_rates.back();
  return total / static_cast<double>(horizon);
}

}  // namespace mmsched
