#include "cuqds/gpr.hpp"

#include "cuqds/scenario.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cuqds {

namespace {

void check_params(const KernelParams& p) {
  if (!(p.output_scale >= kScaleFloor) || !(p.length_scale >= kScaleFloor))
    throw ConfigError("kernel scales must be >= 1e-4");
}

}  // namespace

double frobenius_dist_sq(const Trajectory& a, const Trajectory& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DataError("kernel inputs have mismatched shapes");
  return (a - b).squaredNorm();
}

double kernel_from_dist_sq(double dist_sq, const KernelParams& p) {
  check_params(p);
  return p.output_scale * p.output_scale *
         std::exp(-dist_sq / (2.0 * p.length_scale * p.length_scale));
}

double kernel(const Trajectory& a, const Trajectory& b,
              const KernelParams& p) {
  return kernel_from_dist_sq(frobenius_dist_sq(a, b), p);
}

InducingBasis fit_inducing(const Dataset& train, std::size_t m) {
  if (train.size() < 2)
    throw DataError("fit_inducing: need at least 2 training samples");
  const Eigen::Index obs_len = train.samples.front().observed.rows();
  const Eigen::Index dims = train.samples.front().observed.cols();
  const Eigen::Index feat = obs_len * dims;
  if (m < 1 || m > std::min<std::size_t>(train.size(),
                                         static_cast<std::size_t>(feat)))
    throw ConfigError("fit_inducing: M must be in [1, min(N, L*D)]");

  const auto n = static_cast<Eigen::Index>(train.size());
  Eigen::MatrixXd z(n, feat);
  for (Eigen::Index i = 0; i < n; ++i)
    z.row(i) =
        flatten_trajectory(standardize_trajectory(train.samples[i].observed))
            .transpose();

  const Eigen::RowVectorXd mean = z.colwise().mean();
  z.rowwise() -= mean;
  const Eigen::MatrixXd cov =
      (z.transpose() * z) / static_cast<double>(n);  // population covariance

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw NumericError("fit_inducing: eigendecomposition failed");

  InducingBasis basis;
  basis.eigenvalues.resize(static_cast<Eigen::Index>(m));
  basis.vars.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Eigen::Index col = feat - 1 - static_cast<Eigen::Index>(j);
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    Eigen::Index peak = 0;
    v.cwiseAbs().maxCoeff(&peak);
    if (v(peak) < 0.0) v = -v;
    basis.eigenvalues(static_cast<Eigen::Index>(j)) =
        solver.eigenvalues()(col);
    basis.vars.push_back(unflatten_trajectory(v, obs_len, dims));
  }
  return basis;
}

GprSurrogate::GprSurrogate(KernelParams params, double noise_std,
                           std::vector<Trajectory> inducing)
    : params_(params), noise_std_(noise_std), inducing_(std::move(inducing)) {
  if (inducing_.empty())
    throw ConfigError("surrogate needs at least one inducing variable");
  const auto m = static_cast<Eigen::Index>(inducing_.size());
  for (const Trajectory& v : inducing_) {
    if (v.rows() != inducing_.front().rows() ||
        v.cols() != inducing_.front().cols())
      throw DataError("inducing variables have mismatched shapes");
    if (!is_finite(v)) throw DataError("non-finite inducing variable");
  }
  inducing_dist_sq_.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double d = frobenius_dist_sq(inducing_[static_cast<std::size_t>(i)],
                                         inducing_[static_cast<std::size_t>(j)]);
      inducing_dist_sq_(i, j) = d;
      inducing_dist_sq_(j, i) = d;
    }
  set_params(params, noise_std);
}

void GprSurrogate::set_params(KernelParams params, double noise_std) {
  check_params(params);
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw ConfigError("noise std must be finite and non-negative");
  params_ = params;
  noise_std_ = noise_std;
  refit();
}

void GprSurrogate::refit() {
  const auto m = static_cast<Eigen::Index>(inducing_.size());
  Eigen::MatrixXd a(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = kernel_from_dist_sq(inducing_dist_sq_(i, j), params_);
      a(i, j) = k;
      a(j, i) = k;
    }
  a.diagonal().array() += noise_std_ * noise_std_;
  chol_.compute(a);
  if (chol_.info() != Eigen::Success)
    throw NumericError(
        "surrogate fit: K_MM + noise^2 I is not positive definite");
}

Eigen::VectorXd GprSurrogate::dist_sq_to_inducing(
    const Trajectory& x_std) const {
  Eigen::VectorXd d(static_cast<Eigen::Index>(inducing_.size()));
  for (std::size_t j = 0; j < inducing_.size(); ++j)
    d(static_cast<Eigen::Index>(j)) = frobenius_dist_sq(x_std, inducing_[j]);
  return d;
}

double GprSurrogate::predictive_std_from_dists(
    const Eigen::VectorXd& dist_sq) const {
  if (dist_sq.size() != static_cast<Eigen::Index>(inducing_.size()))
    throw DataError("predictive_std: wrong distance vector length");
  Eigen::VectorXd kx(dist_sq.size());
  for (Eigen::Index j = 0; j < dist_sq.size(); ++j)
    kx(j) = kernel_from_dist_sq(dist_sq(j), params_);
  const double prior = params_.output_scale * params_.output_scale;
  const double reduction = kx.dot(chol_.solve(kx));
  const double var = std::max(prior - reduction, kVarianceFloor);
  return std::sqrt(var);
}

double GprSurrogate::predictive_std(const Trajectory& x_std) const {
  return predictive_std_from_dists(dist_sq_to_inducing(x_std));
}

double GprSurrogate::mean_kernel_from_dists(
    const Eigen::VectorXd& dist_sq) const {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < dist_sq.size(); ++j)
    sum += kernel_from_dist_sq(dist_sq(j), params_);
  return sum / static_cast<double>(dist_sq.size());
}

double loss_l2(const GprSurrogate& g,
               const std::vector<double>& resid_sq_mean,
               const std::vector<double>& mean_kernel) {
  if (resid_sq_mean.empty() || resid_sq_mean.size() != mean_kernel.size())
    throw DataError("loss_l2: empty or mismatched batch");
  const double noise_var = g.noise_std() * g.noise_std();
  const double n = static_cast<double>(resid_sq_mean.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < resid_sq_mean.size(); ++i) {
    const double v = mean_kernel[i] + noise_var;
    sum += 0.5 * resid_sq_mean[i] / v + 0.5 * std::log(v) +
           0.5 * std::log(2.0 * std::numbers::pi);
  }
  return sum / n;
}

L2Gradients grad_l2(const GprSurrogate& g, const L2Batch& batch) {
  const auto n = batch.dist_sq.rows();
  const auto m = batch.dist_sq.cols();
  if (n == 0 || batch.resid_sq_mean.size() != static_cast<std::size_t>(n))
    throw DataError("grad_l2: empty or mismatched batch");
  if (m != static_cast<Eigen::Index>(g.num_inducing()))
    throw DataError("grad_l2: distance matrix does not match inducing set");

  const KernelParams& p = g.kernel_params();
  const double noise = g.noise_std();
  const double noise_var = noise * noise;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double l2_cubed =
      p.length_scale * p.length_scale * p.length_scale;

  L2Gradients out;
  out.d_resid_sq_mean.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double kbar = 0.0;
    double weighted_dist = 0.0;  // sum_j k_ij * d_ij^2
    for (Eigen::Index j = 0; j < m; ++j) {
      const double k = kernel_from_dist_sq(batch.dist_sq(i, j), p);
      kbar += k;
      weighted_dist += k * batch.dist_sq(i, j);
    }
    kbar /= static_cast<double>(m);
    weighted_dist /= static_cast<double>(m);

    const double resid_sq = batch.resid_sq_mean[static_cast<std::size_t>(i)];
    const double v = kbar + noise_var;
    out.loss += inv_n * (0.5 * resid_sq / v + 0.5 * std::log(v) +
                         0.5 * std::log(2.0 * std::numbers::pi));

    // d L2 / d v_i, then chain into the three parameters:
    //   d v / d output_scale = 2 kbar / output_scale
    //   d v / d length_scale = (sum_j k_ij d_ij^2 / M) / length_scale^3
    //   d v / d noise       = 2 noise
    const double d_v = inv_n * 0.5 * (v - resid_sq) / (v * v);
    out.d_output_scale += d_v * 2.0 * kbar / p.output_scale;
    out.d_length_scale += d_v * weighted_dist / l2_cubed;
    out.d_noise_std += d_v * 2.0 * noise;
    out.d_resid_sq_mean[static_cast<std::size_t>(i)] = inv_n * 0.5 / v;
  }
  return out;
}

}  // namespace cuqds
