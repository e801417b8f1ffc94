#include "cuqds/scenario.hpp"

#include "cuqds/rng.hpp"

#include <cmath>

namespace cuqds {

namespace {

constexpr double kStdFloor = 1e-9;

Sample roll_sample(const MotionRegime& regime, std::size_t observed_len,
                   std::size_t future_len, std::size_t dims,
                   rng::Stream& stream) {
  const std::size_t total = observed_len + future_len;
  const double speed = stream.uniform(regime.speed_min, regime.speed_max);
  const double turn =
      stream.uniform(regime.turn_rate_min, regime.turn_rate_max);

  Eigen::VectorXd pos(dims);
  for (std::size_t d = 0; d < dims; ++d) pos(d) = stream.uniform(-10.0, 10.0);
  double heading = stream.uniform(0.0, 2.0 * 3.14159265358979323846);

  Trajectory points(total, dims);
  for (std::size_t t = 0; t < total; ++t) {
    points.row(t) = pos.transpose();
    if (dims >= 2) {
      pos(0) += speed * std::cos(heading);
      pos(1) += speed * std::sin(heading);
      heading += turn;  // turn rotates the velocity in the (0, 1) plane
    } else {
      pos(0) += speed;
    }
  }
  if (regime.noise_std > 0.0) {
    for (std::size_t t = 0; t < total; ++t)
      for (std::size_t d = 0; d < dims; ++d)
        points(t, d) += stream.normal(0.0, regime.noise_std);
  }

  Sample s;
  s.observed = points.topRows(static_cast<Eigen::Index>(observed_len));
  s.future = points.bottomRows(static_cast<Eigen::Index>(future_len));
  return s;
}

std::size_t regime_at(const std::vector<ShiftPoint>& schedule,
                      double fraction) {
  std::size_t regime = 0;
  for (const ShiftPoint& p : schedule) {
    if (p.start_fraction <= fraction) regime = p.regime;
  }
  return regime;
}

}  // namespace

void validate_config(const ScenarioConfig& config) {
  if (config.observed_len < 1 || config.future_len < 1)
    throw ConfigError("scenario: observed and future lengths must be >= 1");
  if (config.dims < 1) throw ConfigError("scenario: dims must be >= 1");
  if (config.regimes.empty()) throw ConfigError("scenario: no motion regimes");
  if (config.n_train < 1 || config.n_val < 1 || config.n_test < 1)
    throw ConfigError("scenario: every split needs at least one sample");
  for (const MotionRegime& r : config.regimes) {
    if (r.speed_min > r.speed_max || r.turn_rate_min > r.turn_rate_max)
      throw ConfigError("scenario: regime range is inverted");
    if (r.noise_std < 0.0)
      throw ConfigError("scenario: negative observation noise");
  }
  double prev = -1.0;
  for (const ShiftPoint& p : config.shift_schedule) {
    if (p.start_fraction < 0.0 || p.start_fraction >= 1.0)
      throw ConfigError("scenario: shift fraction outside [0, 1)");
    if (p.start_fraction <= prev)
      throw ConfigError("scenario: shift fractions must strictly increase");
    if (p.regime >= config.regimes.size())
      throw ConfigError("scenario: shift references unknown regime");
    prev = p.start_fraction;
  }
}

ScenarioData generate_scenario(const ScenarioConfig& config) {
  validate_config(config);
  rng::Stream stream(config.seed);

  ScenarioData out;
  out.train.role = DatasetRole::train;
  out.validation.role = DatasetRole::validation;
  out.test.role = DatasetRole::test;

  long long t = 0;
  auto emit = [&](Dataset& ds, const MotionRegime& regime, std::size_t i) {
    Sample s = roll_sample(regime, config.observed_len, config.future_len,
                           config.dims, stream);
    s.id = std::string(role_name(ds.role)) + "-" + std::to_string(i);
    s.t = t++;
    ds.samples.push_back(std::move(s));
  };

  for (std::size_t i = 0; i < config.n_train; ++i)
    emit(out.train, config.regimes[0], i);
  for (std::size_t i = 0; i < config.n_val; ++i)
    emit(out.validation, config.regimes[0], i);
  for (std::size_t i = 0; i < config.n_test; ++i) {
    const double fraction =
        static_cast<double>(i) / static_cast<double>(config.n_test);
    const std::size_t r = regime_at(config.shift_schedule, fraction);
    emit(out.test, config.regimes[r], i);
  }
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds,
                                          double first_ratio,
                                          double second_ratio) {
  if (ds.empty()) throw DataError("split_dataset: empty dataset");
  if (!(first_ratio > 0.0) ||
      std::abs(first_ratio + second_ratio - 1.0) > 1e-9)
    throw ConfigError("split_dataset: ratios must be positive and sum to 1");
  const auto n_first = static_cast<std::size_t>(
      std::floor(static_cast<double>(ds.size()) * first_ratio));
  Dataset first, second;
  first.role = DatasetRole::train;
  second.role = DatasetRole::validation;
  first.samples.assign(ds.samples.begin(),
                       ds.samples.begin() + static_cast<long>(n_first));
  second.samples.assign(ds.samples.begin() + static_cast<long>(n_first),
                        ds.samples.end());
  return {std::move(first), std::move(second)};
}

Standardization compute_standardization(const Trajectory& x) {
  const auto steps = static_cast<double>(x.rows());
  Standardization s;
  s.mean = x.colwise().mean();
  s.scale.resize(x.cols());
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    const double var =
        (x.col(d).array() - s.mean(d)).square().sum() / steps;  // population
    const double std = std::sqrt(var);
    s.scale(d) = std < kStdFloor ? 1.0 : std;
  }
  return s;
}

Trajectory apply_standardization(const Trajectory& x,
                                 const Standardization& s) {
  Trajectory z(x.rows(), x.cols());
  for (Eigen::Index d = 0; d < x.cols(); ++d)
    z.col(d) = (x.col(d).array() - s.mean(d)) / s.scale(d);
  return z;
}

Trajectory standardize_trajectory(const Trajectory& x) {
  return apply_standardization(x, compute_standardization(x));
}

}  // namespace cuqds
