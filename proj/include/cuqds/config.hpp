#pragma once

#include "cuqds/conformal.hpp"
#include "cuqds/predictor.hpp"
#include "cuqds/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace cuqds {

enum class PredictorKind { constant_velocity, linear };
enum class CalibratorKind { p_control, split_cp, none };

PredictorKind parse_predictor_kind(const std::string& name);
CalibratorKind parse_calibrator_kind(const std::string& name);
const char* predictor_kind_name(PredictorKind kind);

// One experiment surface: paths, scenario, model and calibrator settings.
// Values come from a flat `key = value` config file with CLI flags layered
// on top; every command is a deterministic function of (config, seed).
struct RunConfig {
  std::filesystem::path out_dir = "runs/default";
  std::filesystem::path data_dir;    // defaults to out_dir / "data"
  std::filesystem::path model_path;  // defaults to out_dir / "model.json"

  ScenarioConfig scenario;
  PredictorKind predictor = PredictorKind::linear;
  std::size_t num_inducing = 16;
  TrainOptions training;
  ConformalConfig conformal;
  CalibratorKind calibrator = CalibratorKind::p_control;
  double miss_threshold = 2.0;
  std::uint64_t seed = 1;

  std::filesystem::path resolved_data_dir() const {
    return data_dir.empty() ? out_dir / "data" : data_dir;
  }
  std::filesystem::path resolved_model_path() const {
    return model_path.empty() ? out_dir / "model.json" : model_path;
  }
};

// Parses the flat config file. Unknown keys are configuration errors.
RunConfig load_config_file(const std::filesystem::path& path);

// Applies one `key = value` assignment (also used for CLI overrides).
void apply_config_entry(RunConfig& config, const std::string& key,
                        const std::string& value);

void validate_run_config(const RunConfig& config);

}  // namespace cuqds
