#include "cuqds/pipeline.hpp"

#include "cuqds/rng.hpp"
#include "cuqds/sample_io.hpp"
#include "cuqds/stream_log.hpp"

#include "json.hpp"

#include <fstream>

namespace cuqds {

namespace {

std::string fmt(double v) { return nlohmann::json(v).dump(); }

ScenarioConfig seeded_scenario(const RunConfig& config) {
  ScenarioConfig scenario = config.scenario;
  // All randomness flows from the master seed through named streams.
  scenario.seed = rng::derive_seed(config.seed, "data");
  return scenario;
}

std::vector<int> metric_ks(const std::vector<StreamRecord>& records) {
  std::vector<int> ks{1};
  if (!records.empty() && records.front().prediction.modes.size() >= 6)
    ks.push_back(6);
  return ks;
}

std::vector<double> validation_scores(const ModelBundle& bundle,
                                      const Dataset& val) {
  const PredictorFn predict = bundle.make_predictor();
  std::vector<double> scores;
  scores.reserve(val.size());
  for (const Sample& s : val.samples) {
    const PredictorOutput out = predict(s.observed);
    const double sigma =
        bundle.surrogate.predictive_std(standardize_trajectory(s.observed));
    scores.push_back(conformal_score(s.future, out.modes.front(), sigma));
  }
  return scores;
}

}  // namespace

void cmd_gen(const RunConfig& config) {
  validate_run_config(config);
  const ScenarioData data = generate_scenario(seeded_scenario(config));
  const std::filesystem::path dir = config.resolved_data_dir();
  write_samples(data.train, dir / kTrainFile);
  write_samples(data.validation, dir / kValFile);
  write_samples(data.test, dir / kTestFile);
}

void cmd_train(const RunConfig& config) {
  validate_run_config(config);
  const std::filesystem::path dir = config.resolved_data_dir();
  const Dataset train = read_samples(dir / kTrainFile, DatasetRole::train);
  const Dataset val = read_samples(dir / kValFile, DatasetRole::validation);
  if (train.empty() || val.empty())
    throw DataError("training requires non-empty train and val files");

  const InducingBasis basis = fit_inducing(train, config.num_inducing);
  GprSurrogate gpr(KernelParams{}, config.training.init_noise_std,
                   basis.vars);

  ModelBundle bundle{predictor_kind_name(config.predictor),
                     config.scenario.observed_len,
                     config.scenario.future_len,
                     config.scenario.dims,
                     LinearPredictor{},
                     std::move(gpr),
                     ConformalState(config.conformal),
                     config.training.base_loss_weight,
                     config.training.gpr_loss_weight};

  TrainResult result;
  if (config.predictor == PredictorKind::linear) {
    bundle.linear = LinearPredictor::zeros(config.scenario.observed_len,
                                           config.scenario.future_len,
                                           config.scenario.dims);
    result = train_joint(bundle.linear, bundle.surrogate, train, val,
                         config.training);
  } else {
    result = fit_surrogate_params(bundle.surrogate, bundle.make_predictor(),
                                  train, val, config.training);
  }

  warmup_validation(bundle.conformal, val, bundle.make_predictor(),
                    bundle.surrogate);
  save_model(bundle, config.resolved_model_path());

  std::filesystem::create_directories(config.out_dir);
  std::ofstream curve(config.out_dir / kLossCurveFile, std::ios::trunc);
  if (!curve) throw DataError("cannot write the loss curve file");
  curve << "# epoch train_loss val_loss\n";
  for (std::size_t e = 0; e < result.train_loss.size(); ++e)
    curve << e << ' ' << fmt(result.train_loss[e]) << ' '
          << fmt(result.val_loss[e]) << '\n';
}

MetricReport cmd_stream(const RunConfig& config) {
  validate_run_config(config);
  ModelBundle bundle = load_model(config.resolved_model_path());
  const std::filesystem::path dir = config.resolved_data_dir();
  const Dataset test = read_samples(dir / kTestFile, DatasetRole::test);
  if (test.empty()) throw DataError("streaming requires a non-empty test set");

  const PredictorFn predict = bundle.make_predictor();
  std::vector<StreamRecord> records;
  if (config.calibrator == CalibratorKind::p_control) {
    records = run_stream(bundle.conformal, test, predict, bundle.surrogate);
  } else if (config.calibrator == CalibratorKind::split_cp) {
    const Dataset val = read_samples(dir / kValFile, DatasetRole::validation);
    const double q = split_cp_quantile(validation_scores(bundle, val),
                                       config.conformal.target_rate);
    records = run_stream_fixed(q, test, predict, bundle.surrogate);
  } else {
    records = run_stream_fixed(1.0, test, predict, bundle.surrogate);
  }

  write_records(records, config.out_dir / kRecordsFile);
  const MetricReport report =
      evaluate_records(records, metric_ks(records), config.miss_threshold);
  write_report(report, config.out_dir);
  return report;
}

MetricReport cmd_eval(const std::filesystem::path& records_path,
                      double miss_threshold) {
  const std::vector<StreamRecord> records = read_records(records_path);
  if (records.empty()) throw DataError("eval: the stream log is empty");
  return evaluate_records(records, metric_ks(records), miss_threshold);
}

void write_report(const MetricReport& report,
                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream text(out_dir / kMetricsTextFile, std::ios::trunc);
  std::ofstream line(out_dir / kMetricsJsonFile, std::ios::trunc);
  if (!text || !line) throw DataError("cannot write metric reports");
  text << format_report(report);
  line << report_json_line(report) << '\n';
}

}  // namespace cuqds
