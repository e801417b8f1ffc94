#pragma once

#include "cuqds/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace cuqds {

// Within a regime every trajectory is a constant-speed, constant-turn-rate
// rollout; per-sample speed and turn rate are drawn uniformly from the ranges
// below, and i.i.d. Gaussian observation noise is added to every coordinate.
struct MotionRegime {
  double speed_min = 0.8;  // m / step
  double speed_max = 1.2;
  double turn_rate_min = -0.05;  // rad / step, applied in the first two dims
  double turn_rate_max = 0.05;
  double noise_std = 0.05;  // m
};

struct ShiftPoint {
  double start_fraction = 0.0;  // position within the test stream, in [0, 1)
  std::size_t regime = 0;
};

struct ScenarioConfig {
  std::size_t n_train = 2000;
  std::size_t n_val = 1000;
  std::size_t n_test = 4000;
  std::size_t observed_len = 10;  // L
  std::size_t future_len = 10;    // J
  std::size_t dims = 2;           // D
  std::vector<MotionRegime> regimes = {MotionRegime{}};
  // Train/validation always draw from regime 0; the test stream switches
  // regimes at the given fractions. Empty means regime 0 throughout.
  std::vector<ShiftPoint> shift_schedule = {};
  std::uint64_t seed = 1;
};

struct ScenarioData {
  Dataset train;
  Dataset validation;
  Dataset test;
};

void validate_config(const ScenarioConfig& config);

// Pure function of the config (replay equality). Train and validation are
// drawn from regime 0; test follows the shift schedule. Timestamps are
// consecutive across the three splits so their time spans are disjoint.
ScenarioData generate_scenario(const ScenarioConfig& config);

// Contiguous in-time split preserving order; sizes floor(N * first_ratio)
// and the remainder. Ratios must be positive and sum to 1.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds,
                                          double first_ratio,
                                          double second_ratio);

// Per-dimension mean and scale over the time axis. `scale` is the divisor
// actually applied: the population std, or 1 where the std is below 1e-9.
struct Standardization {
  Eigen::VectorXd mean;   // D
  Eigen::VectorXd scale;  // D
};

Standardization compute_standardization(const Trajectory& x);
Trajectory apply_standardization(const Trajectory& x,
                                 const Standardization& s);
Trajectory standardize_trajectory(const Trajectory& x);

}  // namespace cuqds
