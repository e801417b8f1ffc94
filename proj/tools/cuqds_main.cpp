#include "cuqds/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

namespace {

struct Flags {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<std::size_t> m_inducing;
  std::optional<double> w1;
  std::optional<double> w2;
  std::optional<int> epochs;
  std::optional<std::string> predictor;
  std::optional<std::string> calibrator;
  std::optional<std::size_t> window;
  std::optional<std::string> out;
};

void add_common_flags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config_path, "flat key = value file");
  cmd->add_option("--seed", flags.seed, "master seed");
  cmd->add_option("--alpha", flags.alpha, "target miscoverage rate");
  cmd->add_option("--beta", flags.beta, "quantile update gain");
  cmd->add_option("--m-inducing", flags.m_inducing,
                  "number of inducing variables");
  cmd->add_option("--w1", flags.w1, "base loss weight");
  cmd->add_option("--w2", flags.w2, "surrogate loss weight");
  cmd->add_option("--epochs", flags.epochs, "training epochs");
  cmd->add_option("--predictor", flags.predictor,
                  "constant-velocity or linear");
  cmd->add_option("--calibrator", flags.calibrator,
                  "p-control, split-cp or none");
  cmd->add_option("--window", flags.window,
                  "score/error history window (0 = unbounded)");
  cmd->add_option("--out", flags.out, "output directory");
}

cuqds::RunConfig resolve(const Flags& flags) {
  cuqds::RunConfig config;
  if (flags.config_path)
    config = cuqds::load_config_file(*flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.alpha) config.conformal.target_rate = *flags.alpha;
  if (flags.beta) config.conformal.gain = *flags.beta;
  if (flags.m_inducing) config.num_inducing = *flags.m_inducing;
  if (flags.w1) config.training.base_loss_weight = *flags.w1;
  if (flags.w2) config.training.gpr_loss_weight = *flags.w2;
  if (flags.epochs) config.training.epochs = *flags.epochs;
  if (flags.predictor)
    config.predictor = cuqds::parse_predictor_kind(*flags.predictor);
  if (flags.calibrator)
    config.calibrator = cuqds::parse_calibrator_kind(*flags.calibrator);
  if (flags.window) config.conformal.window = *flags.window;
  if (flags.out) config.out_dir = *flags.out;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory uncertainty pipeline: generate, train, stream, "
               "evaluate"};
  app.require_subcommand(1);

  Flags flags;
  std::string records_path;

  CLI::App* gen = app.add_subcommand("gen", "generate scenario sample files");
  CLI::App* train = app.add_subcommand("train", "fit predictor + surrogate, "
                                                "warm up the calibrator");
  CLI::App* stream =
      app.add_subcommand("stream", "run the calibrated test stream");
  CLI::App* eval =
      app.add_subcommand("eval", "recompute metrics from a stream log");
  for (CLI::App* cmd : {gen, train, stream, eval})
    add_common_flags(cmd, flags);
  eval->add_option("records", records_path, "stream_records.jsonl path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const cuqds::RunConfig config = resolve(flags);
    if (gen->parsed()) {
      cuqds::cmd_gen(config);
      std::cout << "wrote samples under "
                << config.resolved_data_dir().string() << "\n";
    } else if (train->parsed()) {
      cuqds::cmd_train(config);
      std::cout << "wrote model to "
                << config.resolved_model_path().string() << "\n";
    } else if (stream->parsed()) {
      const cuqds::MetricReport report = cuqds::cmd_stream(config);
      std::cout << cuqds::format_report(report);
    } else if (eval->parsed()) {
      if (records_path.empty()) {
        records_path =
            (config.out_dir / cuqds::kRecordsFile).string();
      }
      const cuqds::MetricReport report =
          cuqds::cmd_eval(records_path, config.miss_threshold);
      std::cout << cuqds::format_report(report);
      if (flags.out) cuqds::write_report(report, config.out_dir);
    }
  } catch (const cuqds::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cuqds::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const cuqds::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
