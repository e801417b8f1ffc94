#include "cuqds/predictor.hpp"

#include "cuqds/scenario.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace cuqds {

namespace {

double softplus(double raw) {
  return raw > 30.0 ? raw : std::log1p(std::exp(raw));
}

double inv_softplus(double value) {
  const double v = std::max(value, 1e-12);
  return v > 30.0 ? v : std::log(std::expm1(v));
}

double sigmoid(double raw) {
  return raw >= 0.0 ? 1.0 / (1.0 + std::exp(-raw))
                    : std::exp(raw) / (1.0 + std::exp(raw));
}

// The three surrogate parameters are optimized through raw coordinates
// param = kScaleFloor + softplus(raw), keeping every scale strictly positive.
struct OmegaRaw {
  double output_scale = 0.0;
  double length_scale = 0.0;
  double noise_std = 0.0;

  static OmegaRaw from_params(const KernelParams& p, double noise) {
    return {inv_softplus(p.output_scale - kScaleFloor),
            inv_softplus(p.length_scale - kScaleFloor),
            inv_softplus(noise - kScaleFloor)};
  }
  KernelParams kernel() const {
    return {kScaleFloor + softplus(output_scale),
            kScaleFloor + softplus(length_scale)};
  }
  double noise() const { return kScaleFloor + softplus(noise_std); }
};

// Standardized, flattened view of one dataset, fixed for the whole run.
struct Prepared {
  Eigen::MatrixXd inputs;   // N x (L*D), standardized flattened observed
  Eigen::MatrixXd targets;  // N x (J*D)
  Eigen::MatrixXd offset;   // N x (J*D): per-sample de-standardization mean
  Eigen::MatrixXd gain;     // N x (J*D): per-sample de-standardization scale
  Eigen::MatrixXd dist_sq;  // N x M distances to the inducing set
};

Prepared prepare(const Dataset& ds, const LinearPredictor& model,
                 const GprSurrogate& gpr) {
  validate_dataset(ds);
  if (ds.empty()) throw DataError("training requires a non-empty dataset");
  const auto n = static_cast<Eigen::Index>(ds.size());
  const auto in_dim =
      static_cast<Eigen::Index>(model.observed_len * model.dims);
  const auto out_dim =
      static_cast<Eigen::Index>(model.future_len * model.dims);

  Prepared p;
  p.inputs.resize(n, in_dim);
  p.targets.resize(n, out_dim);
  p.offset.resize(n, out_dim);
  p.gain.resize(n, out_dim);
  p.dist_sq.resize(n, static_cast<Eigen::Index>(gpr.num_inducing()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = ds.samples[static_cast<std::size_t>(i)];
    if (s.observed.rows() != static_cast<Eigen::Index>(model.observed_len) ||
        s.future.rows() != static_cast<Eigen::Index>(model.future_len) ||
        s.observed.cols() != static_cast<Eigen::Index>(model.dims))
      throw DataError("sample '" + s.id + "' does not match model dimensions");
    const Standardization st = compute_standardization(s.observed);
    const Trajectory z = apply_standardization(s.observed, st);
    p.inputs.row(i) = flatten_trajectory(z).transpose();
    p.targets.row(i) = flatten_trajectory(s.future).transpose();
    for (Eigen::Index k = 0; k < out_dim; ++k) {
      const Eigen::Index d = k % static_cast<Eigen::Index>(model.dims);
      p.offset(i, k) = st.mean(d);
      p.gain(i, k) = st.scale(d);
    }
    p.dist_sq.row(i) = gpr.dist_sq_to_inducing(z).transpose();
  }
  return p;
}

// L2 for candidate parameters without touching the surrogate's cache.
double l2_value(const Eigen::MatrixXd& dist_sq,
                const std::vector<double>& resid_sq_mean,
                const KernelParams& params, double noise) {
  const double noise_var = noise * noise;
  const auto m = dist_sq.cols();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < dist_sq.rows(); ++i) {
    double kbar = 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
      kbar += kernel_from_dist_sq(dist_sq(i, j), params);
    kbar /= static_cast<double>(m);
    const double v = kbar + noise_var;
    sum += 0.5 * resid_sq_mean[static_cast<std::size_t>(i)] / v +
           0.5 * std::log(v) + 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return sum / static_cast<double>(dist_sq.rows());
}

struct LossParts {
  double combined = 0.0;
  double l1 = 0.0;
  std::vector<double> resid_sq_mean;
};

LossParts joint_loss(const Prepared& data, const Eigen::MatrixXd& weights,
                     const Eigen::VectorXd& bias, const OmegaRaw& omega,
                     const TrainOptions& opt,
                     Eigen::MatrixXd* residuals = nullptr) {
  const auto n = data.inputs.rows();
  const auto out_dim = data.targets.cols();
  LossParts parts;
  parts.resid_sq_mean.resize(static_cast<std::size_t>(n));
  if (residuals) residuals->resize(n, out_dim);

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd u = weights * data.inputs.row(i).transpose() + bias;
    double ssq = 0.0;
    for (Eigen::Index k = 0; k < out_dim; ++k) {
      const double r =
          data.offset(i, k) + data.gain(i, k) * u(k) - data.targets(i, k);
      ssq += r * r;
      if (residuals) (*residuals)(i, k) = r;
    }
    const double mean_sq = ssq / static_cast<double>(out_dim);
    parts.resid_sq_mean[static_cast<std::size_t>(i)] = mean_sq;
    parts.l1 += mean_sq;
  }
  parts.l1 /= static_cast<double>(n);
  parts.combined = opt.base_loss_weight * parts.l1;
  if (opt.gpr_loss_weight != 0.0)
    parts.combined +=
        opt.gpr_loss_weight *
        l2_value(data.dist_sq, parts.resid_sq_mean, omega.kernel(),
                 omega.noise());
  return parts;
}

std::string omega_snapshot(const OmegaRaw& omega) {
  std::ostringstream out;
  const KernelParams k = omega.kernel();
  out << "output_scale=" << k.output_scale
      << " length_scale=" << k.length_scale << " noise_std=" << omega.noise();
  return out.str();
}

}  // namespace

void validate_output(const PredictorOutput& out) {
  if (out.modes.empty() ||
      out.probs.size() != static_cast<Eigen::Index>(out.modes.size()))
    throw DataError("predictor output has no modes or mismatched weights");
  if (std::abs(out.probs.sum() - 1.0) > 1e-9)
    throw DataError("mode probabilities must sum to 1");
  if (out.probs(0) < out.probs.maxCoeff() - 1e-12)
    throw DataError("mode 0 must carry the largest probability");
  for (const Trajectory& m : out.modes)
    if (!is_finite(m)) throw NumericError("non-finite predictor output");
}

PredictorOutput predict_constant_velocity(const Trajectory& observed,
                                          std::size_t future_len) {
  if (observed.rows() < 2)
    throw DataError("constant-velocity predictor needs at least 2 steps");
  const Eigen::RowVectorXd last = observed.row(observed.rows() - 1);
  const Eigen::RowVectorXd step = last - observed.row(observed.rows() - 2);
  Trajectory future(static_cast<Eigen::Index>(future_len), observed.cols());
  for (std::size_t j = 0; j < future_len; ++j)
    future.row(static_cast<Eigen::Index>(j)) =
        last + static_cast<double>(j + 1) * step;
  PredictorOutput out;
  out.modes.push_back(std::move(future));
  out.probs = Eigen::VectorXd::Ones(1);
  validate_output(out);
  return out;
}

LinearPredictor LinearPredictor::zeros(std::size_t observed_len,
                                       std::size_t future_len,
                                       std::size_t dims) {
  LinearPredictor m;
  m.observed_len = observed_len;
  m.future_len = future_len;
  m.dims = dims;
  m.weights = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(future_len * dims),
      static_cast<Eigen::Index>(observed_len * dims));
  m.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(future_len * dims));
  return m;
}

PredictorOutput predict_linear(const LinearPredictor& model,
                               const Trajectory& observed) {
  if (observed.rows() != static_cast<Eigen::Index>(model.observed_len) ||
      observed.cols() != static_cast<Eigen::Index>(model.dims))
    throw DataError("input does not match the linear model's dimensions");
  const Standardization st = compute_standardization(observed);
  const Eigen::VectorXd z =
      flatten_trajectory(apply_standardization(observed, st));
  const Eigen::VectorXd u = model.weights * z + model.bias;
  Trajectory future(static_cast<Eigen::Index>(model.future_len),
                    static_cast<Eigen::Index>(model.dims));
  for (Eigen::Index j = 0; j < future.rows(); ++j)
    for (Eigen::Index d = 0; d < future.cols(); ++d)
      future(j, d) = st.mean(d) + st.scale(d) * u(j * future.cols() + d);
  PredictorOutput out;
  out.modes.push_back(std::move(future));
  out.probs = Eigen::VectorXd::Ones(1);
  validate_output(out);
  return out;
}

double loss_l1(const PredictorOutput& pred, const Trajectory& truth) {
  if (pred.modes.empty()) throw DataError("loss_l1: output has no modes");
  const Trajectory& mean = pred.modes.front();
  if (mean.rows() != truth.rows() || mean.cols() != truth.cols())
    throw DataError("loss_l1: shape mismatch");
  return (mean - truth).squaredNorm() / static_cast<double>(truth.size());
}

TrainResult train_joint(LinearPredictor& model, GprSurrogate& gpr,
                        const Dataset& train, const Dataset& val,
                        const TrainOptions& options) {
  if (options.epochs < 1 || !(options.learning_rate > 0.0))
    throw ConfigError("training needs epochs >= 1 and a positive rate");
  if (options.base_loss_weight < 0.0 || options.gpr_loss_weight < 0.0)
    throw ConfigError("loss weights must be non-negative");
  const Prepared tr = prepare(train, model, gpr);
  const Prepared va = prepare(val, model, gpr);

  KernelParams init_kernel{options.init_output_scale,
                           options.init_length_scale};
  if (init_kernel.length_scale <= 0.0)
    init_kernel.length_scale = std::sqrt(tr.dist_sq.mean() / 2.0);
  OmegaRaw omega = OmegaRaw::from_params(init_kernel, options.init_noise_std);
  gpr.set_params(omega.kernel(), omega.noise());

  TrainResult result;
  result.init_kernel = omega.kernel();
  result.init_noise_std = omega.noise();

  const auto n = tr.inputs.rows();
  const auto out_dim = tr.targets.cols();
  const double coord_norm =
      1.0 / (static_cast<double>(n) * static_cast<double>(out_dim));

  double rate = options.learning_rate;
  const double rate_cap = options.learning_rate * 10.0;
  double best_val = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best_weights = model.weights;
  Eigen::VectorXd best_bias = model.bias;
  OmegaRaw best_omega = omega;

  Eigen::MatrixXd residuals;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const LossParts base =
        joint_loss(tr, model.weights, model.bias, omega, options, &residuals);
    if (!std::isfinite(base.combined))
      throw NumericError("non-finite training loss at epoch " +
                         std::to_string(epoch) + " (" +
                         omega_snapshot(omega) + ")");

    const L2Gradients l2g = grad_l2(gpr, {tr.dist_sq, base.resid_sq_mean});

    // Residual gradient: the MSE term and the L2 quadratic term both scale
    // each coordinate residual; the de-standardization gain re-enters here.
    Eigen::MatrixXd grad_w = Eigen::MatrixXd::Zero(model.weights.rows(),
                                                   model.weights.cols());
    Eigen::VectorXd grad_b = Eigen::VectorXd::Zero(model.bias.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      const double l2_coef =
          options.gpr_loss_weight *
          l2g.d_resid_sq_mean[static_cast<std::size_t>(i)] * 2.0 /
          static_cast<double>(out_dim);
      const double l1_coef = options.base_loss_weight * 2.0 * coord_norm;
      Eigen::VectorXd g_u(out_dim);
      for (Eigen::Index k = 0; k < out_dim; ++k)
        g_u(k) = (l1_coef + l2_coef) * residuals(i, k) * tr.gain(i, k);
      grad_w.noalias() += g_u * tr.inputs.row(i);
      grad_b += g_u;
    }
    const double w2 = options.gpr_loss_weight;
    const double g_raw_out =
        w2 * l2g.d_output_scale * sigmoid(omega.output_scale);
    const double g_raw_len =
        w2 * l2g.d_length_scale * sigmoid(omega.length_scale);
    const double g_raw_noise = w2 * l2g.d_noise_std * sigmoid(omega.noise_std);

    const double tol = 1e-12 * (1.0 + std::abs(base.combined));
    double try_rate = rate;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      const Eigen::MatrixXd cand_w = model.weights - try_rate * grad_w;
      const Eigen::VectorXd cand_b = model.bias - try_rate * grad_b;
      OmegaRaw cand_omega{omega.output_scale - try_rate * g_raw_out,
                          omega.length_scale - try_rate * g_raw_len,
                          omega.noise_std - try_rate * g_raw_noise};
      const LossParts cand =
          joint_loss(tr, cand_w, cand_b, cand_omega, options);
      if (std::isfinite(cand.combined) && cand.combined <= base.combined + tol) {
        model.weights = cand_w;
        model.bias = cand_b;
        omega = cand_omega;
        gpr.set_params(omega.kernel(), omega.noise());
        result.train_loss.push_back(cand.combined);
        rate = std::min(try_rate * 1.2, rate_cap);
        accepted = true;
        break;
      }
      try_rate *= 0.5;
    }
    if (!accepted) result.train_loss.push_back(base.combined);

    const LossParts vparts =
        joint_loss(va, model.weights, model.bias, omega, options);
    result.val_loss.push_back(vparts.combined);
    if (vparts.combined < best_val) {
      best_val = vparts.combined;
      best_weights = model.weights;
      best_bias = model.bias;
      best_omega = omega;
      result.best_epoch = epoch;
    }
  }

  model.weights = best_weights;
  model.bias = best_bias;
  gpr.set_params(best_omega.kernel(), best_omega.noise());
  return result;
}

TrainResult fit_surrogate_params(GprSurrogate& gpr, const PredictorFn& predict,
                                 const Dataset& train, const Dataset& val,
                                 const TrainOptions& options) {
  if (options.epochs < 1 || !(options.learning_rate > 0.0))
    throw ConfigError("training needs epochs >= 1 and a positive rate");
  validate_dataset(train);
  validate_dataset(val);
  if (train.empty() || val.empty())
    throw DataError("surrogate fitting requires non-empty datasets");

  auto collect = [&](const Dataset& ds, Eigen::MatrixXd& dist_sq,
                     std::vector<double>& resid_sq, double& mse) {
    dist_sq.resize(static_cast<Eigen::Index>(ds.size()),
                   static_cast<Eigen::Index>(gpr.num_inducing()));
    resid_sq.resize(ds.size());
    mse = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const Sample& s = ds.samples[i];
      const PredictorOutput out = predict(s.observed);
      if (out.modes.front().rows() != s.future.rows() ||
          out.modes.front().cols() != s.future.cols())
        throw DataError("sample '" + s.id +
                        "': prediction does not match the future shape");
      resid_sq[i] = (out.modes.front() - s.future).squaredNorm() /
                    static_cast<double>(s.future.size());
      mse += resid_sq[i];
      dist_sq.row(static_cast<Eigen::Index>(i)) =
          gpr.dist_sq_to_inducing(standardize_trajectory(s.observed))
              .transpose();
    }
    mse /= static_cast<double>(ds.size());
  };

  Eigen::MatrixXd train_dist, val_dist;
  std::vector<double> train_resid, val_resid;
  double train_mse = 0.0, val_mse = 0.0;
  collect(train, train_dist, train_resid, train_mse);
  collect(val, val_dist, val_resid, val_mse);

  KernelParams init_kernel{options.init_output_scale,
                           options.init_length_scale};
  if (init_kernel.length_scale <= 0.0)
    init_kernel.length_scale = std::sqrt(train_dist.mean() / 2.0);
  OmegaRaw omega = OmegaRaw::from_params(init_kernel, options.init_noise_std);
  gpr.set_params(omega.kernel(), omega.noise());

  TrainResult result;
  result.init_kernel = omega.kernel();
  result.init_noise_std = omega.noise();

  auto combined = [&](const OmegaRaw& w, const Eigen::MatrixXd& dist,
                      const std::vector<double>& resid, double mse) {
    return options.base_loss_weight * mse +
           options.gpr_loss_weight *
               l2_value(dist, resid, w.kernel(), w.noise());
  };

  double rate = options.learning_rate;
  const double rate_cap = options.learning_rate * 10.0;
  double best_val = std::numeric_limits<double>::infinity();
  OmegaRaw best_omega = omega;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double base = combined(omega, train_dist, train_resid, train_mse);
    if (!std::isfinite(base))
      throw NumericError("non-finite training loss at epoch " +
                         std::to_string(epoch) + " (" +
                         omega_snapshot(omega) + ")");
    const L2Gradients l2g = grad_l2(gpr, {train_dist, train_resid});
    const double w2 = options.gpr_loss_weight;
    const double g_out = w2 * l2g.d_output_scale * sigmoid(omega.output_scale);
    const double g_len = w2 * l2g.d_length_scale * sigmoid(omega.length_scale);
    const double g_noise = w2 * l2g.d_noise_std * sigmoid(omega.noise_std);

    const double tol = 1e-12 * (1.0 + std::abs(base));
    double try_rate = rate;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      OmegaRaw cand{omega.output_scale - try_rate * g_out,
                    omega.length_scale - try_rate * g_len,
                    omega.noise_std - try_rate * g_noise};
      const double cand_loss = combined(cand, train_dist, train_resid,
                                        train_mse);
      if (std::isfinite(cand_loss) && cand_loss <= base + tol) {
        omega = cand;
        gpr.set_params(omega.kernel(), omega.noise());
        result.train_loss.push_back(cand_loss);
        rate = std::min(try_rate * 1.2, rate_cap);
        accepted = true;
        break;
      }
      try_rate *= 0.5;
    }
    if (!accepted) result.train_loss.push_back(base);

    const double vloss = combined(omega, val_dist, val_resid, val_mse);
    result.val_loss.push_back(vloss);
    if (vloss < best_val) {
      best_val = vloss;
      best_omega = omega;
      result.best_epoch = epoch;
    }
  }
  gpr.set_params(best_omega.kernel(), best_omega.noise());
  return result;
}

}  // namespace cuqds
