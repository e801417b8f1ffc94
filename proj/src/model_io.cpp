#include "cuqds/model_io.hpp"

#include "json.hpp"

#include <fstream>

namespace cuqds {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    arr.push_back(std::move(row));
  }
  return arr;
}

Eigen::MatrixXd matrix_from_json(const json& arr, const std::string& key) {
  if (!arr.is_array() || arr.empty() || !arr.front().is_array())
    throw DataError("model file: field '" + key + "' must be a matrix");
  const std::size_t rows = arr.size();
  const std::size_t cols = arr.front().size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!arr[r].is_array() || arr[r].size() != cols)
      throw DataError("model file: field '" + key + "' has a ragged row");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          arr[r][c].get<double>();
  }
  return m;
}

const json& require(const json& obj, const std::string& key) {
  if (!obj.contains(key))
    throw DataError("model file: missing field '" + key + "'");
  return obj.at(key);
}

}  // namespace

PredictorFn ModelBundle::make_predictor() const {
  if (predictor_kind == "constant-velocity") {
    const std::size_t horizon = future_len;
    return [horizon](const Trajectory& x) {
      return predict_constant_velocity(x, horizon);
    };
  }
  if (predictor_kind == "linear") {
    const LinearPredictor model = linear;
    return [model](const Trajectory& x) { return predict_linear(model, x); };
  }
  throw ConfigError("unknown predictor kind: " + predictor_kind);
}

void save_model(const ModelBundle& bundle,
                const std::filesystem::path& path) {
  json obj;
  obj["format"] = "cuqds-model";
  obj["version"] = 1;
  obj["predictor"] = {{"kind", bundle.predictor_kind},
                      {"observed_len", bundle.observed_len},
                      {"future_len", bundle.future_len},
                      {"dims", bundle.dims}};
  if (bundle.predictor_kind == "linear") {
    obj["predictor"]["weights"] = matrix_to_json(bundle.linear.weights);
    json bias = json::array();
    for (Eigen::Index i = 0; i < bundle.linear.bias.size(); ++i)
      bias.push_back(bundle.linear.bias(i));
    obj["predictor"]["bias"] = std::move(bias);
  }

  json inducing = json::array();
  for (const Trajectory& v : bundle.surrogate.inducing())
    inducing.push_back(matrix_to_json(v));
  obj["surrogate"] = {
      {"output_scale", bundle.surrogate.kernel_params().output_scale},
      {"length_scale", bundle.surrogate.kernel_params().length_scale},
      {"noise_std", bundle.surrogate.noise_std()},
      {"inducing", std::move(inducing)}};

  const ConformalState& st = bundle.conformal;
  json scores = json::array();
  for (double s : st.scores()) scores.push_back(s);
  json errors = json::array();
  for (int e : st.errors()) errors.push_back(e);
  obj["conformal"] = {{"alpha", st.config().target_rate},
                      {"beta", st.config().gain},
                      {"window", st.config().window},
                      {"quantile", st.quantile()},
                      {"steps", st.steps()},
                      {"scores", std::move(scores)},
                      {"errors", std::move(errors)}};
  obj["training"] = {{"w1", bundle.base_loss_weight},
                     {"w2", bundle.gpr_loss_weight}};

  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write model file: " + path.string());
  out << obj.dump(2) << '\n';
}

ModelBundle load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path.string());
  json obj;
  try {
    in >> obj;
  } catch (const json::exception& e) {
    throw DataError("model file: malformed JSON: " + std::string(e.what()));
  }
  if (require(obj, "format").get<std::string>() != "cuqds-model")
    throw DataError("model file: unrecognized format tag");

  const json& pred = require(obj, "predictor");
  const std::string kind = require(pred, "kind").get<std::string>();
  const auto observed_len = require(pred, "observed_len").get<std::size_t>();
  const auto future_len = require(pred, "future_len").get<std::size_t>();
  const auto dims = require(pred, "dims").get<std::size_t>();

  LinearPredictor linear;
  if (kind == "linear") {
    linear.observed_len = observed_len;
    linear.future_len = future_len;
    linear.dims = dims;
    linear.weights = matrix_from_json(require(pred, "weights"), "weights");
    const json& bias = require(pred, "bias");
    linear.bias.resize(static_cast<Eigen::Index>(bias.size()));
    for (std::size_t i = 0; i < bias.size(); ++i)
      linear.bias(static_cast<Eigen::Index>(i)) = bias[i].get<double>();
    if (linear.weights.rows() != static_cast<Eigen::Index>(future_len * dims) ||
        linear.weights.cols() !=
            static_cast<Eigen::Index>(observed_len * dims) ||
        linear.bias.size() != linear.weights.rows())
      throw DataError("model file: linear parameter shapes are inconsistent");
  } else if (kind != "constant-velocity") {
    throw DataError("model file: unknown predictor kind '" + kind + "'");
  }

  const json& surr = require(obj, "surrogate");
  std::vector<Trajectory> inducing;
  for (const json& v : require(surr, "inducing"))
    inducing.push_back(matrix_from_json(v, "inducing"));
  GprSurrogate surrogate(
      KernelParams{require(surr, "output_scale").get<double>(),
                   require(surr, "length_scale").get<double>()},
      require(surr, "noise_std").get<double>(), std::move(inducing));

  const json& conf = require(obj, "conformal");
  ConformalConfig cc;
  cc.target_rate = require(conf, "alpha").get<double>();
  cc.gain = require(conf, "beta").get<double>();
  cc.window = require(conf, "window").get<std::size_t>();
  std::vector<double> scores;
  for (const json& s : require(conf, "scores"))
    scores.push_back(s.get<double>());
  std::vector<int> errors;
  for (const json& e : require(conf, "errors")) errors.push_back(e.get<int>());
  ConformalState state = ConformalState::restore(
      cc, require(conf, "quantile").get<double>(), std::move(scores),
      std::move(errors), require(conf, "steps").get<long long>());

  const json& training = require(obj, "training");
  ModelBundle bundle{kind,
                     observed_len,
                     future_len,
                     dims,
                     std::move(linear),
                     std::move(surrogate),
                     std::move(state),
                     require(training, "w1").get<double>(),
                     require(training, "w2").get<double>()};
  return bundle;
}

}  // namespace cuqds
