#pragma once

#include "cuqds/gpr.hpp"
#include "cuqds/types.hpp"

#include <functional>
#include <vector>

namespace cuqds {

// K candidate futures with mode weights. Mode 0 is the designated mean used
// by the surrogate and the calibrator, and must carry the largest weight.
struct PredictorOutput {
  std::vector<Trajectory> modes;  // each J x D
  Eigen::VectorXd probs;          // K entries summing to 1
};

void validate_output(const PredictorOutput& out);

using PredictorFn = std::function<PredictorOutput(const Trajectory&)>;

// Extrapolates the last observed displacement: y_j = x_L + j (x_L - x_{L-1}).
PredictorOutput predict_constant_velocity(const Trajectory& observed,
                                          std::size_t future_len);

// Affine map on the standardized flattened input, de-standardized back to
// absolute coordinates using the input's own per-dimension mean and scale.
struct LinearPredictor {
  std::size_t observed_len = 0;
  std::size_t future_len = 0;
  std::size_t dims = 0;
  Eigen::MatrixXd weights;  // (J*D) x (L*D)
  Eigen::VectorXd bias;     // J*D

  static LinearPredictor zeros(std::size_t observed_len,
                               std::size_t future_len, std::size_t dims);
};

PredictorOutput predict_linear(const LinearPredictor& model,
                               const Trajectory& observed);

// Mean squared error over all future coordinates of mode 0.
double loss_l1(const PredictorOutput& pred, const Trajectory& truth);

struct TrainOptions {
  double base_loss_weight = 1.0;  // w1
  double gpr_loss_weight = 0.1;   // w2
  double learning_rate = 0.05;
  int epochs = 200;
  double init_output_scale = 1.0;
  // 0 selects a scale-aware init: sqrt(mean squared distance to the
  // inducing set / 2), so the kernel starts in its responsive range.
  double init_length_scale = 0.0;
  double init_noise_std = 0.5;
};

struct TrainResult {
  std::vector<double> train_loss;  // combined loss per epoch, after the step
  std::vector<double> val_loss;
  int best_epoch = -1;
  KernelParams init_kernel;  // surrogate parameters actually used at epoch 0
  double init_noise_std = 0.0;
};

// Full-batch gradient descent on w1 * L1 + w2 * L2 over the predictor
// parameters and (output_scale, length_scale, noise_std) jointly, with step
// halving whenever a step would increase the training loss. The surrogate's
// scales are optimized through a softplus map floored at 1e-4. Returns the
// parameters with the lowest validation loss.
TrainResult train_joint(LinearPredictor& model, GprSurrogate& gpr,
                        const Dataset& train, const Dataset& val,
                        const TrainOptions& options);

// Surrogate-only variant for predictors without trainable parameters:
// residuals come from `predict` and stay fixed while the three surrogate
// parameters are optimized.
TrainResult fit_surrogate_params(GprSurrogate& gpr, const PredictorFn& predict,
                                 const Dataset& train, const Dataset& val,
                                 const TrainOptions& options);

}  // namespace cuqds
