#pragma once

#include "cuqds/types.hpp"

#include <Eigen/Cholesky>

#include <vector>

namespace cuqds {

// Lower bound for the kernel scales and the trained noise std.
inline constexpr double kScaleFloor = 1e-4;
// Predictive variance clamp applied before the square root, so the
// downstream score s = |residual| / sigma never divides by zero.
inline constexpr double kVarianceFloor = 1e-6;

struct KernelParams {
  double output_scale = 1.0;  // the kernel's maximum is output_scale^2
  double length_scale = 1.0;
};

double frobenius_dist_sq(const Trajectory& a, const Trajectory& b);

// RBF kernel on standardized L x D inputs; the scalar distance is the
// squared Frobenius distance.
double kernel(const Trajectory& a, const Trajectory& b,
              const KernelParams& p);
double kernel_from_dist_sq(double dist_sq, const KernelParams& p);

// Top-M principal directions of the standardized, flattened training inputs,
// reshaped back to L x D. Unit norm, sign fixed so the largest-magnitude
// component is positive; eigenvalues in non-increasing order.
struct InducingBasis {
  std::vector<Trajectory> vars;
  Eigen::VectorXd eigenvalues;
};

InducingBasis fit_inducing(const Dataset& train, std::size_t m);

// Sparse surrogate attached to a point predictor: M inducing trajectories
// plus (output_scale, length_scale, noise_std). Queries are const and
// thread-safe; set_params refits the cached factorization.
class GprSurrogate {
 public:
  GprSurrogate(KernelParams params, double noise_std,
               std::vector<Trajectory> inducing);

  const KernelParams& kernel_params() const { return params_; }
  double noise_std() const { return noise_std_; }
  const std::vector<Trajectory>& inducing() const { return inducing_; }
  std::size_t num_inducing() const { return inducing_.size(); }

  // Re-derives the Cholesky factor of K_MM + noise^2 I; throws NumericError
  // if that system is not positive definite.
  void set_params(KernelParams params, double noise_std);

  // Predictive std for one standardized input. The variance is clamped at
  // kVarianceFloor before the square root.
  double predictive_std(const Trajectory& x_std) const;
  double predictive_std_from_dists(const Eigen::VectorXd& dist_sq) const;

  Eigen::VectorXd dist_sq_to_inducing(const Trajectory& x_std) const;
  // Mean kernel value between one sample and the inducing set.
  double mean_kernel_from_dists(const Eigen::VectorXd& dist_sq) const;

 private:
  void refit();

  KernelParams params_;
  double noise_std_;
  std::vector<Trajectory> inducing_;
  Eigen::MatrixXd inducing_dist_sq_;  // M x M, fixed at construction
  Eigen::LLT<Eigen::MatrixXd> chol_;  // of K_MM + noise^2 I
};

// Training-loss inputs for one full batch. dist_sq(i, j) is the squared
// Frobenius distance between standardized input i and inducing variable j;
// it is fixed for a whole training run. resid_sq_mean[i] is the mean squared
// prediction residual of sample i over all future coordinates.
struct L2Batch {
  Eigen::MatrixXd dist_sq;
  std::vector<double> resid_sq_mean;
};

struct L2Gradients {
  double loss = 0.0;
  double d_output_scale = 0.0;
  double d_length_scale = 0.0;
  double d_noise_std = 0.0;
  // dL2 / d resid_sq_mean[i], for backprop into the predictor.
  std::vector<double> d_resid_sq_mean;
};

// Per-sample Gaussian NLL with variance (mean kernel + noise^2):
//   L2 = (1/N) sum_i [ resid_sq_mean_i / (2 v_i) + log(v_i) / 2 + log(2 pi) / 2 ]
double loss_l2(const GprSurrogate& g,
               const std::vector<double>& resid_sq_mean,
               const std::vector<double>& mean_kernel);

// Closed-form partials of loss_l2; checked against central differences.
L2Gradients grad_l2(const GprSurrogate& g, const L2Batch& batch);

}  // namespace cuqds
