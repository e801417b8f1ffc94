#pragma once

#include "cuqds/gpr.hpp"
#include "cuqds/predictor.hpp"
#include "cuqds/types.hpp"

#include <deque>
#include <vector>

namespace cuqds {

struct ConformalConfig {
  double target_rate = 0.1;  // miscoverage target alpha
  double gain = 0.05;        // proportional gain beta
  // Sliding-window length for the score/error history; 0 keeps the full
  // history, in which case max(S) and the error average never forget.
  std::size_t window = 0;
};

// Online quantile state. The control law is strictly sequential: append the
// new (score, error) pair first, then move the quantile by
// gain * max(S) * (mean(E) - alpha), clamped at zero.
class ConformalState {
 public:
  explicit ConformalState(ConformalConfig config);

  static ConformalState restore(ConformalConfig config, double quantile,
                                std::vector<double> scores,
                                std::vector<int> errors, long long steps);

  double quantile() const { return quantile_; }
  const ConformalConfig& config() const { return config_; }
  const std::deque<double>& scores() const { return scores_; }
  const std::deque<int>& errors() const { return errors_; }
  long long steps() const { return steps_; }
  double max_score() const;
  double mean_error() const;

  // Re-initializes the score and error sets (used between warm-up epochs);
  // the quantile itself is retained.
  void reset_sets();

  void observe(double score, int error);

 private:
  ConformalConfig config_;
  double quantile_ = 1.0;
  std::deque<double> scores_;
  std::deque<int> errors_;
  double max_score_ = 0.0;
  double error_sum_ = 0.0;
  long long steps_ = 0;
};

struct Interval {
  Trajectory lower;   // J x D
  Trajectory upper;   // J x D
  Trajectory center;  // the mode-0 prediction the band is built around
  double sigma = 0.0;
  double quantile = 0.0;
};

struct StreamRecord {
  std::string id;
  long long t = 0;
  PredictorOutput prediction;
  Trajectory truth;
  double sigma = 0.0;
  double quantile_used = 0.0;  // the quantile the interval was built with
  double score = 0.0;
  int error = 0;
  double running_coverage = 0.0;  // over the emitted stream so far
  Interval interval;
};

// Normalized residual: mean absolute error over all future coordinates,
// divided by the predictive std.
double conformal_score(const Trajectory& truth, const Trajectory& predicted,
                       double sigma);

// Coordinatewise band predicted +- quantile * sigma.
Interval make_interval(const Trajectory& predicted, double sigma,
                       double quantile);

// Membership is defined through the score: covered iff score <= quantile,
// with the boundary counting as covered.
int coverage_error(double score, double quantile);

// Append-then-update, exactly the sequential control law.
void update_quantile(ConformalState& state, double score, int error);

// One calibration pass per epoch over the validation stream in time order;
// the score/error sets restart each epoch and the final epoch's state is the
// warm-started state. A standalone warm-up is one epoch.
void warmup_validation(ConformalState& state, const Dataset& val,
                       const PredictorFn& predict, const GprSurrogate& gpr,
                       int epochs = 1);

// Streaming calibration: each step builds its interval with the previous
// quantile, then reveals the ground truth and updates. Emits one record per
// step; the state argument carries the final quantile out.
std::vector<StreamRecord> run_stream(ConformalState& state,
                                     const Dataset& test,
                                     const PredictorFn& predict,
                                     const GprSurrogate& gpr);

// Fixed-quantile variant used by the split-CP baseline and the
// no-calibration mode; records scores and errors but never updates.
std::vector<StreamRecord> run_stream_fixed(double quantile,
                                           const Dataset& test,
                                           const PredictorFn& predict,
                                           const GprSurrogate& gpr);

// k-th smallest calibration score with k = ceil((N+1)(1-alpha)); +infinity
// when k exceeds N (the interval must then cover everything).
double split_cp_quantile(std::vector<double> scores, double alpha);

}  // namespace cuqds
