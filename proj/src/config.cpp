#include "cuqds/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cuqds {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream stream(s);
  std::string item;
  while (std::getline(stream, item, sep)) parts.push_back(trim(item));
  return parts;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" +
                      value + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a non-negative integer" +
                      ", got '" + value + "'");
  }
}

// "speed_min,speed_max,turn_min,turn_max,noise ; ..." -> regimes
std::vector<MotionRegime> parse_regimes(const std::string& value) {
  std::vector<MotionRegime> regimes;
  for (const std::string& entry : split(value, ';')) {
    if (entry.empty()) continue;
    const std::vector<std::string> f = split(entry, ',');
    if (f.size() != 5)
      throw ConfigError("config: regime '" + entry +
                        "' needs 5 comma-separated numbers");
    MotionRegime r;
    r.speed_min = parse_double("regimes", f[0]);
    r.speed_max = parse_double("regimes", f[1]);
    r.turn_rate_min = parse_double("regimes", f[2]);
    r.turn_rate_max = parse_double("regimes", f[3]);
    r.noise_std = parse_double("regimes", f[4]);
    regimes.push_back(r);
  }
  if (regimes.empty()) throw ConfigError("config: 'regimes' is empty");
  return regimes;
}

// "fraction:regime ; ..." -> shift schedule
std::vector<ShiftPoint> parse_shift(const std::string& value) {
  std::vector<ShiftPoint> schedule;
  for (const std::string& entry : split(value, ';')) {
    if (entry.empty()) continue;
    const std::vector<std::string> f = split(entry, ':');
    if (f.size() != 2)
      throw ConfigError("config: shift entry '" + entry +
                        "' must be fraction:regime");
    ShiftPoint p;
    p.start_fraction = parse_double("shift", f[0]);
    p.regime = static_cast<std::size_t>(parse_uint("shift", f[1]));
    schedule.push_back(p);
  }
  return schedule;
}

}  // namespace

PredictorKind parse_predictor_kind(const std::string& name) {
  if (name == "constant-velocity") return PredictorKind::constant_velocity;
  if (name == "linear") return PredictorKind::linear;
  throw ConfigError("unknown predictor '" + name +
                    "' (expected constant-velocity or linear)");
}

CalibratorKind parse_calibrator_kind(const std::string& name) {
  if (name == "p-control") return CalibratorKind::p_control;
  if (name == "split-cp") return CalibratorKind::split_cp;
  if (name == "none") return CalibratorKind::none;
  throw ConfigError("unknown calibrator '" + name +
                    "' (expected p-control, split-cp or none)");
}

const char* predictor_kind_name(PredictorKind kind) {
  return kind == PredictorKind::linear ? "linear" : "constant-velocity";
}

void apply_config_entry(RunConfig& config, const std::string& key,
                        const std::string& value) {
  if (key == "out") config.out_dir = value;
  else if (key == "data_dir") config.data_dir = value;
  else if (key == "model") config.model_path = value;
  else if (key == "seed") config.seed = parse_uint(key, value);
  else if (key == "n_train")
    config.scenario.n_train = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "n_val")
    config.scenario.n_val = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "n_test")
    config.scenario.n_test = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "L")
    config.scenario.observed_len =
        static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "J")
    config.scenario.future_len =
        static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "D")
    config.scenario.dims = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "regimes") config.scenario.regimes = parse_regimes(value);
  else if (key == "shift") config.scenario.shift_schedule = parse_shift(value);
  else if (key == "predictor") config.predictor = parse_predictor_kind(value);
  else if (key == "calibrator")
    config.calibrator = parse_calibrator_kind(value);
  else if (key == "m_inducing")
    config.num_inducing = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "w1") config.training.base_loss_weight = parse_double(key, value);
  else if (key == "w2") config.training.gpr_loss_weight = parse_double(key, value);
  else if (key == "epochs")
    config.training.epochs = static_cast<int>(parse_uint(key, value));
  else if (key == "lr") config.training.learning_rate = parse_double(key, value);
  else if (key == "alpha") config.conformal.target_rate = parse_double(key, value);
  else if (key == "beta") config.conformal.gain = parse_double(key, value);
  else if (key == "window")
    config.conformal.window = static_cast<std::size_t>(parse_uint(key, value));
  else if (key == "miss_threshold")
    config.miss_threshold = parse_double(key, value);
  else
    throw ConfigError("config: unknown key '" + key + "'");
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    apply_config_entry(config, trim(line.substr(0, eq)),
                       trim(line.substr(eq + 1)));
  }
  return config;
}

void validate_run_config(const RunConfig& config) {
  validate_config(config.scenario);
  if (!(config.conformal.target_rate > 0.0) ||
      !(config.conformal.target_rate < 1.0))
    throw ConfigError("alpha must lie in (0, 1)");
  if (!(config.conformal.gain > 0.0)) throw ConfigError("beta must be > 0");
  if (config.num_inducing < 1) throw ConfigError("m_inducing must be >= 1");
  if (config.training.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(config.training.learning_rate > 0.0))
    throw ConfigError("lr must be > 0");
  if (config.training.base_loss_weight < 0.0 ||
      config.training.gpr_loss_weight < 0.0)
    throw ConfigError("w1 and w2 must be non-negative");
  if (!(config.miss_threshold > 0.0))
    throw ConfigError("miss_threshold must be > 0");
  if (config.out_dir.empty()) throw ConfigError("out path must be non-empty");
}

}  // namespace cuqds
