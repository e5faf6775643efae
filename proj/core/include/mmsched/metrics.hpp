#pragma once

#include <span>

namespace mmsched {

/// Mean per-step sum-rate over a horizon of `horizon` steps. If the episode
/// ended early, its final rate is carried forward for the remaining steps.
/// Throws std::invalid_argument for an empty trace or one longer than the horizon.
double average_training_rate(std::span<const double> step_rates, int horizon);

}  // namespace mmsched
