#include "cuqds/conformal.hpp"

#include "cuqds/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cuqds {

ConformalState::ConformalState(ConformalConfig config) : config_(config) {
  if (!(config_.target_rate > 0.0) || !(config_.target_rate < 1.0))
    throw ConfigError("target rate must lie in (0, 1)");
  if (!(config_.gain > 0.0)) throw ConfigError("gain must be positive");
}

ConformalState ConformalState::restore(ConformalConfig config,
                                       double quantile,
                                       std::vector<double> scores,
                                       std::vector<int> errors,
                                       long long steps) {
  if (scores.size() != errors.size())
    throw DataError("restore: score and error sets differ in length");
  ConformalState state(config);
  if (!(quantile >= 0.0)) throw DataError("restore: negative quantile");
  state.quantile_ = quantile;
  state.steps_ = steps;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (errors[i] != 0 && errors[i] != 1)
      throw DataError("restore: coverage errors must be 0 or 1");
    state.scores_.push_back(scores[i]);
    state.errors_.push_back(errors[i]);
    state.error_sum_ += errors[i];
    state.max_score_ =
        i == 0 ? scores[i] : std::max(state.max_score_, scores[i]);
  }
  return state;
}

double ConformalState::max_score() const {
  if (scores_.empty()) throw DataError("max_score: empty score set");
  return max_score_;
}

double ConformalState::mean_error() const {
  if (errors_.empty()) throw DataError("mean_error: empty error set");
  return error_sum_ / static_cast<double>(errors_.size());
}

void ConformalState::reset_sets() {
  scores_.clear();
  errors_.clear();
  max_score_ = 0.0;
  error_sum_ = 0.0;
  steps_ = 0;
}

void ConformalState::observe(double score, int error) {
  if (!(score >= 0.0) || !std::isfinite(score))
    throw DataError("observe: score must be finite and non-negative");
  if (error != 0 && error != 1)
    throw DataError("observe: coverage error must be 0 or 1");

  scores_.push_back(score);
  errors_.push_back(error);
  if (config_.window > 0 && scores_.size() > config_.window) {
    scores_.pop_front();
    errors_.pop_front();
  }
  if (config_.window == 0) {
    max_score_ = scores_.size() == 1 ? score : std::max(max_score_, score);
    error_sum_ += error;
  } else {
    max_score_ = *std::max_element(scores_.begin(), scores_.end());
    error_sum_ = 0.0;
    for (int e : errors_) error_sum_ += e;
  }
  ++steps_;

  const double eta = config_.gain * max_score_;
  const double next = quantile_ + eta * (mean_error() - config_.target_rate);
  quantile_ = next < 0.0 ? 0.0 : next;
}

double conformal_score(const Trajectory& truth, const Trajectory& predicted,
                       double sigma) {
  if (truth.rows() != predicted.rows() || truth.cols() != predicted.cols())
    throw DataError("conformal_score: shape mismatch");
  if (!(sigma >= kVarianceFloor))
    throw NumericError("conformal_score: sigma below the variance floor");
  const double mean_abs =
      (truth - predicted).cwiseAbs().sum() / static_cast<double>(truth.size());
  return mean_abs / sigma;
}

Interval make_interval(const Trajectory& predicted, double sigma,
                       double quantile) {
  if (!(sigma > 0.0)) throw NumericError("make_interval: sigma must be > 0");
  if (!(quantile >= 0.0))
    throw DataError("make_interval: quantile must be >= 0");
  Interval band;
  band.center = predicted;
  band.sigma = sigma;
  band.quantile = quantile;
  const double half_width = quantile * sigma;
  band.lower = predicted.array() - half_width;
  band.upper = predicted.array() + half_width;
  return band;
}

int coverage_error(double score, double quantile) {
  return score > quantile ? 1 : 0;
}

void update_quantile(ConformalState& state, double score, int error) {
  state.observe(score, error);
}

namespace {

StreamRecord process_step(const Sample& sample, const PredictorFn& predict,
                          const GprSurrogate& gpr, double quantile_used) {
  StreamRecord rec;
  rec.id = sample.id;
  rec.t = sample.t;
  rec.prediction = predict(sample.observed);
  rec.sigma = gpr.predictive_std(standardize_trajectory(sample.observed));
  rec.quantile_used = quantile_used;
  rec.interval =
      make_interval(rec.prediction.modes.front(), rec.sigma, quantile_used);
  // Ground truth is revealed only after the interval is committed.
  rec.truth = sample.future;
  rec.score = conformal_score(rec.truth, rec.prediction.modes.front(),
                              rec.sigma);
  rec.error = coverage_error(rec.score, quantile_used);
  return rec;
}

}  // namespace

void warmup_validation(ConformalState& state, const Dataset& val,
                       const PredictorFn& predict, const GprSurrogate& gpr,
                       int epochs) {
  if (val.empty()) throw DataError("warm-up requires a non-empty stream");
  if (epochs < 1) throw ConfigError("warm-up needs at least one epoch");
  validate_dataset(val);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    state.reset_sets();
    for (const Sample& sample : val.samples) {
      const StreamRecord rec =
          process_step(sample, predict, gpr, state.quantile());
      state.observe(rec.score, rec.error);
    }
  }
}

std::vector<StreamRecord> run_stream(ConformalState& state,
                                     const Dataset& test,
                                     const PredictorFn& predict,
                                     const GprSurrogate& gpr) {
  validate_dataset(test);
  bool first = true;
  long long prev_t = 0;
  std::vector<StreamRecord> records;
  records.reserve(test.size());
  long long misses = 0;
  for (const Sample& sample : test.samples) {
    if (!first && sample.t <= prev_t)
      throw DataError("stream out of order at sample '" + sample.id + "'");
    prev_t = sample.t;
    first = false;

    StreamRecord rec = process_step(sample, predict, gpr, state.quantile());
    state.observe(rec.score, rec.error);
    misses += rec.error;
    rec.running_coverage =
        1.0 - static_cast<double>(misses) /
                  static_cast<double>(records.size() + 1);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<StreamRecord> run_stream_fixed(double quantile,
                                           const Dataset& test,
                                           const PredictorFn& predict,
                                           const GprSurrogate& gpr) {
  if (!(quantile >= 0.0))
    throw ConfigError("fixed-quantile stream needs quantile >= 0");
  validate_dataset(test);
  bool first = true;
  long long prev_t = 0;
  std::vector<StreamRecord> records;
  records.reserve(test.size());
  long long misses = 0;
  for (const Sample& sample : test.samples) {
    if (!first && sample.t <= prev_t)
      throw DataError("stream out of order at sample '" + sample.id + "'");
    prev_t = sample.t;
    first = false;

    StreamRecord rec = process_step(sample, predict, gpr, quantile);
    misses += rec.error;
    rec.running_coverage =
        1.0 - static_cast<double>(misses) /
                  static_cast<double>(records.size() + 1);
    records.push_back(std::move(rec));
  }
  return records;
}

double split_cp_quantile(std::vector<double> scores, double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw ConfigError("split-CP: alpha must lie in (0, 1)");
  if (scores.empty()) throw DataError("split-CP: empty score set");
  const double n = static_cast<double>(scores.size());
  // Knock an epsilon off before the ceiling so exact-integer products such
  // as (9 + 1) * 0.9 do not round up through floating-point noise.
  const double raw = (n + 1.0) * (1.0 - alpha);
  const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  if (k > scores.size()) return std::numeric_limits<double>::infinity();
  std::nth_element(scores.begin(), scores.begin() + static_cast<long>(k - 1),
                   scores.end());
  return scores[k - 1];
}

}  // namespace cuqds
