#include "cuqds/pipeline.hpp"

#include "cuqds/sample_io.hpp"
#include "cuqds/stream_log.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

using namespace cuqds;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cuqds_pipeline" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunConfig small_run(const fs::path& out) {
  RunConfig config;
  config.out_dir = out;
  config.scenario.n_train = 250;
  config.scenario.n_val = 120;
  config.scenario.n_test = 200;
  config.scenario.observed_len = 8;
  config.scenario.future_len = 5;
  config.scenario.regimes = {MotionRegime{0.8, 1.2, -0.15, 0.15, 0.05}};
  config.num_inducing = 8;
  config.training.epochs = 40;
  config.seed = 5;
  return config;
}

}  // namespace

TEST_CASE("cmd_gen is deterministic and honors the shift schedule") {
  const fs::path out_a = fresh_dir("gen_a");
  const fs::path out_b = fresh_dir("gen_b");
  RunConfig config = small_run(out_a);
  config.scenario.n_test = 400;
  config.scenario.regimes.push_back(MotionRegime{2.5, 3.5, -0.1, 0.1, 0.05});
  config.scenario.shift_schedule = {{0.0, 0}, {0.5, 1}};
  cmd_gen(config);
  RunConfig config_b = config;
  config_b.out_dir = out_b;
  cmd_gen(config_b);

  for (const char* name : {kTrainFile, kValFile, kTestFile})
    CHECK(slurp(out_a / "data" / name) == slurp(out_b / "data" / name));

  const Dataset test =
      read_samples(out_a / "data" / kTestFile, DatasetRole::test);
  REQUIRE(test.size() == 400);
  auto mean_step = [&](std::size_t from, std::size_t to) {
    double sum = 0.0;
    for (std::size_t i = from; i < to; ++i) {
      const Trajectory& obs = test.samples[i].observed;
      sum += (obs.row(1) - obs.row(0)).norm();
    }
    return sum / static_cast<double>(to - from);
  };
  const double first_half = mean_step(0, 200);
  const double second_half = mean_step(200, 400);
  // Regime 1 roughly triples the speed; the empirical gap must show it.
  CHECK(second_half - first_half > 1.0);
}

TEST_CASE("cmd_train writes a model and a non-increasing loss curve") {
  const fs::path out = fresh_dir("train");
  const RunConfig config = small_run(out);
  cmd_gen(config);
  cmd_train(config);

  CHECK(fs::exists(out / "model.json"));
  const ModelBundle bundle = load_model(out / "model.json");
  CHECK(bundle.predictor_kind == "linear");
  CHECK(bundle.conformal.scores().size() == config.scenario.n_val);

  std::ifstream curve(out / kLossCurveFile);
  REQUIRE(curve);
  std::string header;
  std::getline(curve, header);
  double prev = std::numeric_limits<double>::infinity();
  int epoch = 0;
  double train_loss = 0.0, val_loss = 0.0;
  int rows = 0;
  while (curve >> epoch >> train_loss >> val_loss) {
    CHECK(train_loss <= prev + 1e-10 * (1.0 + std::abs(prev)));
    prev = train_loss;
    ++rows;
  }
  CHECK(rows == config.training.epochs);

  SUBCASE("a pure-MSE run also produces a loadable model") {
    RunConfig mse = config;
    mse.training.gpr_loss_weight = 0.0;
    cmd_train(mse);
    CHECK(load_model(out / "model.json").predictor_kind == "linear");
  }
}

TEST_CASE("model save/load round-trips exactly") {
  const fs::path out = fresh_dir("model_io");
  const RunConfig config = small_run(out);
  cmd_gen(config);
  cmd_train(config);

  const fs::path original = out / "model.json";
  const fs::path copy = out / "model_copy.json";
  const ModelBundle bundle = load_model(original);
  save_model(bundle, copy);
  const ModelBundle again = load_model(copy);

  CHECK(bundle.linear.weights == again.linear.weights);
  CHECK(bundle.linear.bias == again.linear.bias);
  CHECK(bundle.surrogate.kernel_params().output_scale ==
        again.surrogate.kernel_params().output_scale);
  CHECK(bundle.surrogate.kernel_params().length_scale ==
        again.surrogate.kernel_params().length_scale);
  CHECK(bundle.surrogate.noise_std() == again.surrogate.noise_std());
  REQUIRE(bundle.surrogate.num_inducing() == again.surrogate.num_inducing());
  for (std::size_t i = 0; i < bundle.surrogate.num_inducing(); ++i)
    CHECK(bundle.surrogate.inducing()[i] == again.surrogate.inducing()[i]);
  CHECK(bundle.conformal.quantile() == again.conformal.quantile());
  CHECK(bundle.conformal.scores() == again.conformal.scores());
  CHECK(bundle.conformal.errors() == again.conformal.errors());
}

TEST_CASE("cmd_stream produces a coherent audit log for each calibrator") {
  const fs::path out = fresh_dir("stream");
  RunConfig config = small_run(out);
  cmd_gen(config);
  cmd_train(config);

  SUBCASE("p-control") {
    config.calibrator = CalibratorKind::p_control;
    const MetricReport report = cmd_stream(config);
    CHECK(report.count == config.scenario.n_test);
    const auto records = read_records(out / kRecordsFile);
    REQUIRE(records.size() == config.scenario.n_test);
    // Quantiles move as the stream progresses.
    bool moved = false;
    for (std::size_t i = 1; i < records.size(); ++i)
      if (records[i].quantile_used != records[0].quantile_used) moved = true;
    CHECK(moved);
  }

  SUBCASE("none: q stays at 1") {
    config.calibrator = CalibratorKind::none;
    const MetricReport report = cmd_stream(config);
    CHECK(report.count == config.scenario.n_test);
    for (const StreamRecord& rec : read_records(out / kRecordsFile))
      CHECK(rec.quantile_used == 1.0);
  }

  SUBCASE("split-cp: q fixed at the calibration quantile") {
    config.calibrator = CalibratorKind::split_cp;
    cmd_stream(config);
    const auto records = read_records(out / kRecordsFile);
    for (std::size_t i = 1; i < records.size(); ++i)
      CHECK(records[i].quantile_used == records[0].quantile_used);
  }
}

TEST_CASE("constant-velocity predictor trains its surrogate and streams") {
  const fs::path out = fresh_dir("cv");
  RunConfig config = small_run(out);
  config.predictor = PredictorKind::constant_velocity;
  cmd_gen(config);
  cmd_train(config);

  const ModelBundle bundle = load_model(out / "model.json");
  CHECK(bundle.predictor_kind == "constant-velocity");
  // The surrogate-only loss curve obeys the same descent contract.
  std::ifstream curve(out / kLossCurveFile);
  std::string header;
  std::getline(curve, header);
  int epoch = 0;
  double train_loss = 0.0, val_loss = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  while (curve >> epoch >> train_loss >> val_loss) {
    CHECK(train_loss <= prev + 1e-10 * (1.0 + std::abs(prev)));
    prev = train_loss;
  }

  const MetricReport report = cmd_stream(config);
  CHECK(report.count == config.scenario.n_test);
  CHECK(report.by_k.count(1) == 1);
}

TEST_CASE("stationary stream coverage tracks the target") {
  const fs::path out = fresh_dir("stationary");
  RunConfig config = small_run(out);
  config.scenario.n_test = 5000;
  config.training.epochs = 60;
  cmd_gen(config);
  cmd_train(config);
  const MetricReport report = cmd_stream(config);
  CHECK(std::abs(report.coverage - 0.9) <= 0.03);
}

TEST_CASE("cmd_eval reproduces hand-computed metrics from a fixture log") {
  const fs::path out = fresh_dir("eval");

  // Two records, K = 1, J = 2, D = 2, built by hand:
  //  rec 1: pred offset (3, 4) at final step only, sigma 2, err 0
  //  rec 2: perfect prediction, sigma 1, err 1
  std::vector<StreamRecord> records;
  Trajectory y(2, 2);
  y << 0, 0, 0, 0;
  {
    StreamRecord rec;
    rec.id = "a";
    rec.t = 0;
    Trajectory pred = y;
    pred(1, 0) = 3.0;
    pred(1, 1) = 4.0;
    rec.prediction.modes = {pred};
    rec.prediction.probs = Eigen::VectorXd::Ones(1);
    rec.truth = y;
    rec.sigma = 2.0;
    rec.quantile_used = 1.0;
    rec.score = conformal_score(y, pred, rec.sigma);
    rec.error = 0;
    rec.running_coverage = 1.0;
    rec.interval = make_interval(pred, rec.sigma, rec.quantile_used);
    records.push_back(rec);
  }
  {
    StreamRecord rec;
    rec.id = "b";
    rec.t = 1;
    rec.prediction.modes = {y};
    rec.prediction.probs = Eigen::VectorXd::Ones(1);
    rec.truth = y;
    rec.sigma = 1.0;
    rec.quantile_used = 0.5;
    rec.score = 0.0;
    rec.error = 1;
    rec.running_coverage = 0.5;
    rec.interval = make_interval(y, rec.sigma, rec.quantile_used);
    records.push_back(rec);
  }
  write_records(records, out / kRecordsFile);

  const MetricReport report = cmd_eval(out / kRecordsFile, 2.0);
  CHECK(report.count == 2);
  CHECK(report.coverage == doctest::Approx(0.5).epsilon(1e-12));
  // minADE: rec 1 mean distance (0 + 5) / 2 = 2.5; rec 2 = 0; mean = 1.25.
  CHECK(report.by_k.at(1).min_ade == doctest::Approx(1.25).epsilon(1e-9));
  // minFDE: rec 1 = 5, rec 2 = 0; mean 2.5; MR at 2.0 m: one of two misses.
  CHECK(report.by_k.at(1).min_fde == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(report.by_k.at(1).miss_rate == doctest::Approx(0.5).epsilon(1e-12));
  // NLL: rec 1 mean_sq = 25 / 4 = 6.25, sigma 2; rec 2 perfect, sigma 1.
  const double nll_1 =
      0.5 * 6.25 / 4.0 + 0.5 * std::log(2.0 * std::numbers::pi * 4.0);
  const double nll_2 = 0.5 * std::log(2.0 * std::numbers::pi);
  CHECK(report.mean_nll ==
        doctest::Approx(0.5 * (nll_1 + nll_2)).epsilon(1e-9));

  SUBCASE("evaluating twice is identical") {
    const MetricReport again = cmd_eval(out / kRecordsFile, 2.0);
    CHECK(format_report(again) == format_report(report));
  }
}

TEST_CASE("missing data directory surfaces as a data error") {
  const fs::path out = fresh_dir("missing");
  RunConfig config = small_run(out);
  config.data_dir = out / "nowhere";
  CHECK_THROWS_AS(cmd_train(config), DataError);
}

TEST_CASE("config files parse, override, and reject unknown keys") {
  const fs::path out = fresh_dir("config");
  const fs::path path = out / "run.cfg";
  {
    std::ofstream cfg(path);
    cfg << "# comment\n";
    cfg << "seed = 42\n";
    cfg << "alpha = 0.2\n";
    cfg << "regimes = 0.5,1.5,-0.1,0.1,0.02 ; 2.0,3.0,-0.2,0.2,0.1\n";
    cfg << "shift = 0.0:0 ; 0.5:1\n";
    cfg << "predictor = constant-velocity\n";
    cfg << "window = 250\n";
  }
  const RunConfig config = load_config_file(path);
  CHECK(config.seed == 42);
  CHECK(config.conformal.target_rate == doctest::Approx(0.2));
  CHECK(config.scenario.regimes.size() == 2);
  CHECK(config.scenario.shift_schedule.size() == 2);
  CHECK(config.predictor == PredictorKind::constant_velocity);
  CHECK(config.conformal.window == 250);

  {
    std::ofstream cfg(path);
    cfg << "no_such_key = 1\n";
  }
  CHECK_THROWS_AS(load_config_file(path), ConfigError);

  RunConfig overridden;
  apply_config_entry(overridden, "beta", "0.07");
  CHECK(overridden.conformal.gain == doctest::Approx(0.07));
  CHECK_THROWS_AS(apply_config_entry(overridden, "beta", "soup"),
                  ConfigError);
}

TEST_CASE("stream log round-trips including non-finite quantiles") {
  const fs::path out = fresh_dir("log_inf");
  Trajectory y(2, 1);
  y << 1.0, 2.0;
  StreamRecord rec;
  rec.id = "inf";
  rec.t = 0;
  rec.prediction.modes = {y};
  rec.prediction.probs = Eigen::VectorXd::Ones(1);
  rec.truth = y;
  rec.sigma = 1.0;
  rec.quantile_used = std::numeric_limits<double>::infinity();
  rec.score = 0.0;
  rec.error = 0;
  rec.running_coverage = 1.0;
  rec.interval = make_interval(y, 1.0, rec.quantile_used);
  write_records({rec}, out / "log.jsonl");
  const auto back = read_records(out / "log.jsonl");
  REQUIRE(back.size() == 1);
  CHECK(std::isinf(back[0].quantile_used));
  CHECK(std::isinf(back[0].interval.upper(0, 0)));
  CHECK(back[0].truth == y);
}
