#include "cuqds/predictor.hpp"

#include "cuqds/metrics.hpp"
#include "cuqds/rng.hpp"
#include "cuqds/scenario.hpp"

#include "doctest.h"

#include <cmath>

using namespace cuqds;

namespace {

ScenarioConfig train_config(std::uint64_t seed) {
  ScenarioConfig config;
  config.n_train = 300;
  config.n_val = 150;
  config.n_test = 50;
  config.observed_len = 8;
  config.future_len = 5;
  config.regimes = {MotionRegime{0.8, 1.2, -0.15, 0.15, 0.05}};
  config.seed = seed;
  return config;
}

GprSurrogate fitted_surrogate(const Dataset& train, std::size_t m) {
  return GprSurrogate(KernelParams{1.0, 3.0}, 0.5, fit_inducing(train, m).vars);
}

}  // namespace

TEST_CASE("constant-velocity extrapolates the last displacement") {
  SUBCASE("closed form") {
    Trajectory x(3, 2);
    x << -2.0, -4.0, -1.0, -2.0, 0.0, 0.0;  // last displacement (1, 2)
    const PredictorOutput out = predict_constant_velocity(x, 3);
    Trajectory expected(3, 2);
    expected << 1, 2, 2, 4, 3, 6;
    CHECK((out.modes.front() - expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(out.probs(0) == 1.0);
  }

  SUBCASE("straight unit-speed input continues exactly") {
    Trajectory x(5, 2);
    for (int t = 0; t < 5; ++t) x.row(t) << t, 0.0;
    const PredictorOutput out = predict_constant_velocity(x, 4);
    for (int j = 0; j < 4; ++j) {
      CHECK(out.modes.front()(j, 0) == doctest::Approx(5.0 + j));
      CHECK(out.modes.front()(j, 1) == doctest::Approx(0.0));
    }
  }

  SUBCASE("stationary input stays put") {
    const Trajectory x = Trajectory::Constant(4, 2, 1.5);
    const PredictorOutput out = predict_constant_velocity(x, 3);
    CHECK((out.modes.front().array() - 1.5).abs().maxCoeff() <= 1e-12);
  }

  SUBCASE("needs two observed steps") {
    CHECK_THROWS_AS(predict_constant_velocity(Trajectory::Zero(1, 2), 3),
                    DataError);
  }
}

TEST_CASE("linear predictor de-standardization behavior") {
  LinearPredictor model = LinearPredictor::zeros(4, 3, 2);

  SUBCASE("zero parameters predict the observed time-mean") {
    Trajectory x(4, 2);
    x << 0, 1, 2, 3, 4, 5, 6, 7;
    const PredictorOutput out = predict_linear(model, x);
    for (int j = 0; j < 3; ++j) {
      CHECK(out.modes.front()(j, 0) == doctest::Approx(3.0).epsilon(1e-12));
      CHECK(out.modes.front()(j, 1) == doctest::Approx(4.0).epsilon(1e-12));
    }
  }

  SUBCASE("copy matrix reproduces the last observed point") {
    // Route standardized coordinate (L-1, d) into every future step.
    for (Eigen::Index j = 0; j < 3; ++j)
      for (Eigen::Index d = 0; d < 2; ++d)
        model.weights(j * 2 + d, 3 * 2 + d) = 1.0;
    Trajectory x(4, 2);
    x << 0.0, -1.0, 0.5, 2.0, 1.5, 0.5, 3.0, 4.0;
    const PredictorOutput out = predict_linear(model, x);
    for (int j = 0; j < 3; ++j) {
      CHECK(out.modes.front()(j, 0) == doctest::Approx(3.0).epsilon(1e-9));
      CHECK(out.modes.front()(j, 1) == doctest::Approx(4.0).epsilon(1e-9));
    }
  }

  SUBCASE("translation equivariance") {
    rng::Stream stream(17);
    for (Eigen::Index r = 0; r < model.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < model.weights.cols(); ++c)
        model.weights(r, c) = 0.2 * stream.normal();
    Trajectory x(4, 2);
    for (int t = 0; t < 4; ++t) x.row(t) << stream.normal(), stream.normal();
    Trajectory shifted = x;
    shifted.col(0).array() += 11.5;
    shifted.col(1).array() -= 3.25;
    const Trajectory a = predict_linear(model, x).modes.front();
    const Trajectory b = predict_linear(model, shifted).modes.front();
    CHECK(std::abs(b(1, 0) - a(1, 0) - 11.5) <= 1e-9);
    CHECK(std::abs(b(2, 1) - a(2, 1) + 3.25) <= 1e-9);
  }

  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(predict_linear(model, Trajectory::Zero(5, 2)), DataError);
  }
}

TEST_CASE("loss_l1 fixtures") {
  Trajectory y(2, 1);
  y << 1.0, 2.0;
  PredictorOutput pred;
  pred.probs = Eigen::VectorXd::Ones(1);

  pred.modes = {y};
  CHECK(loss_l1(pred, y) == 0.0);

  pred.modes = {Trajectory(y.array() + 2.0)};
  CHECK(loss_l1(pred, y) == doctest::Approx(4.0).epsilon(1e-12));

  Trajectory off(2, 1);
  off << 2.0, 5.0;  // errors 1 and 3
  pred.modes = {off};
  CHECK(loss_l1(pred, y) == doctest::Approx(5.0).epsilon(1e-12));

  SUBCASE("joint translation invariance") {
    Trajectory moved_pred = off.array() + 7.5;
    Trajectory moved_truth = y.array() + 7.5;
    PredictorOutput moved;
    moved.probs = Eigen::VectorXd::Ones(1);
    moved.modes = {moved_pred};
    CHECK(loss_l1(moved, moved_truth) == doctest::Approx(5.0).epsilon(1e-12));
  }
}

TEST_CASE("joint training reduces the loss and never increases it") {
  const ScenarioData data = generate_scenario(train_config(21));
  LinearPredictor model = LinearPredictor::zeros(8, 5, 2);
  GprSurrogate gpr = fitted_surrogate(data.train, 8);

  TrainOptions options;
  options.epochs = 60;
  const TrainResult result =
      train_joint(model, gpr, data.train, data.validation, options);

  REQUIRE(result.train_loss.size() == 60);
  for (std::size_t e = 1; e < result.train_loss.size(); ++e)
    CHECK(result.train_loss[e] <=
          result.train_loss[e - 1] + 1e-10 * (1.0 + result.train_loss[e - 1]));
  CHECK(result.best_epoch >= 0);
}

TEST_CASE("w2 = 0 reduces to plain regression with descending MSE") {
  const ScenarioData data = generate_scenario(train_config(22));
  LinearPredictor model = LinearPredictor::zeros(8, 5, 2);
  GprSurrogate gpr = fitted_surrogate(data.train, 8);

  double initial_l1 = 0.0;
  for (const Sample& s : data.train.samples)
    initial_l1 += loss_l1(predict_linear(model, s.observed), s.future);
  initial_l1 /= static_cast<double>(data.train.size());

  TrainOptions options;
  options.gpr_loss_weight = 0.0;
  options.epochs = 50;
  train_joint(model, gpr, data.train, data.validation, options);

  double final_l1 = 0.0;
  for (const Sample& s : data.train.samples)
    final_l1 += loss_l1(predict_linear(model, s.observed), s.future);
  final_l1 /= static_cast<double>(data.train.size());
  CHECK(final_l1 <= initial_l1);
  CHECK(final_l1 < 0.9 * initial_l1);  // actually makes progress
}

TEST_CASE("zero residuals drive the noise scale monotonically down") {
  // Futures equal to the observed time-mean make the zero model exact, so
  // every gradient flows into the surrogate's variance terms.
  ScenarioConfig config = train_config(23);
  config.regimes = {MotionRegime{0.5, 1.5, -0.2, 0.2, 0.0}};
  ScenarioData data = generate_scenario(config);
  auto flatten_mean = [](Dataset& ds) {
    for (Sample& s : ds.samples) {
      const Eigen::RowVectorXd mean = s.observed.colwise().mean();
      for (Eigen::Index j = 0; j < s.future.rows(); ++j)
        s.future.row(j) = mean;
    }
  };
  flatten_mean(data.train);
  flatten_mean(data.validation);

  TrainOptions options;
  options.base_loss_weight = 0.0;
  options.init_noise_std = 0.5;

  // With zero residuals the validation loss also falls every epoch, so each
  // run ends on its last epoch and a longer run extends a shorter one. The
  // noise scale must shrink monotonically along that shared path.
  double prev_noise = options.init_noise_std;
  for (int epochs : {5, 10, 20, 40}) {
    LinearPredictor model = LinearPredictor::zeros(8, 5, 2);
    GprSurrogate gpr = fitted_surrogate(data.train, 8);
    options.epochs = epochs;
    const TrainResult result =
        train_joint(model, gpr, data.train, data.validation, options);
    CHECK(gpr.noise_std() <= prev_noise + 1e-12);
    CHECK(gpr.noise_std() >= kScaleFloor);
    for (std::size_t e = 1; e < result.train_loss.size(); ++e)
      CHECK(result.train_loss[e] <= result.train_loss[e - 1] + 1e-12);
    prev_noise = gpr.noise_std();
  }
  CHECK(prev_noise < options.init_noise_std);
}

TEST_CASE("trained linear beats constant velocity on validation minADE1") {
  const ScenarioData data = generate_scenario(train_config(24));
  LinearPredictor model = LinearPredictor::zeros(8, 5, 2);
  GprSurrogate gpr = fitted_surrogate(data.train, 8);
  TrainOptions options;
  options.epochs = 120;
  train_joint(model, gpr, data.train, data.validation, options);

  double linear_ade = 0.0;
  double cv_ade = 0.0;
  for (const Sample& s : data.validation.samples) {
    linear_ade += min_ade(predict_linear(model, s.observed), s.future, 1);
    cv_ade += min_ade(predict_constant_velocity(s.observed, 5), s.future, 1);
  }
  CHECK(linear_ade < cv_ade);
}

TEST_CASE("training aborts on non-finite loss with a diagnostic") {
  const ScenarioData data = generate_scenario(train_config(25));
  LinearPredictor model = LinearPredictor::zeros(8, 5, 2);
  model.weights.setConstant(1e200);
  GprSurrogate gpr = fitted_surrogate(data.train, 8);
  TrainOptions options;
  options.epochs = 5;
  CHECK_THROWS_WITH_AS(
      train_joint(model, gpr, data.train, data.validation, options),
      doctest::Contains("epoch"), NumericError);
}

TEST_CASE("predictor outputs are validated") {
  PredictorOutput bad;
  bad.modes = {Trajectory::Zero(2, 2), Trajectory::Zero(2, 2)};
  bad.probs = Eigen::Vector2d(0.3, 0.7);  // mode 0 must dominate
  CHECK_THROWS_AS(validate_output(bad), DataError);
  bad.probs = Eigen::Vector2d(0.7, 0.7);
  CHECK_THROWS_AS(validate_output(bad), DataError);
  bad.probs = Eigen::Vector2d(0.7, 0.3);
  CHECK_NOTHROW(validate_output(bad));
}
