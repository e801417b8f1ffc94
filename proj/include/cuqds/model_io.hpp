#pragma once

#include "cuqds/conformal.hpp"
#include "cuqds/gpr.hpp"
#include "cuqds/predictor.hpp"

#include <filesystem>
#include <string>

namespace cuqds {

// Everything a streaming run needs, persisted as one self-describing JSON
// file: predictor parameters, surrogate parameters and inducing variables,
// and the warmed-up conformal state. save/load round-trips all finite
// values exactly.
struct ModelBundle {
  std::string predictor_kind;  // "linear" or "constant-velocity"
  std::size_t observed_len = 0;
  std::size_t future_len = 0;
  std::size_t dims = 0;
  LinearPredictor linear;  // empty matrices for constant-velocity
  GprSurrogate surrogate;
  ConformalState conformal;
  double base_loss_weight = 1.0;
  double gpr_loss_weight = 0.1;

  PredictorFn make_predictor() const;
};

void save_model(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace cuqds
