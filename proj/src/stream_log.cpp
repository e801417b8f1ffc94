#include "cuqds/stream_log.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace cuqds {

namespace {

using nlohmann::json;

json scalar_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double scalar_from_json(const json& j, const char* key, std::size_t line_no) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw DataError("line " + std::to_string(line_no) + ": field '" + key +
                  "' is not a scalar");
}

json matrix_to_json(const Trajectory& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(scalar_to_json(m(r, c)));
    arr.push_back(std::move(row));
  }
  return arr;
}

Trajectory matrix_from_json(const json& arr, const char* key,
                            std::size_t line_no) {
  if (!arr.is_array() || arr.empty() || !arr.front().is_array() ||
      arr.front().empty())
    throw DataError("line " + std::to_string(line_no) + ": field '" +
                    std::string(key) + "' must be a matrix");
  const std::size_t rows = arr.size();
  const std::size_t cols = arr.front().size();
  Trajectory m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!arr[r].is_array() || arr[r].size() != cols)
      throw DataError("line " + std::to_string(line_no) + ": field '" +
                      std::string(key) + "' has a ragged row");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          scalar_from_json(arr[r][c], key, line_no);
  }
  return m;
}

}  // namespace

void write_records(const std::vector<StreamRecord>& records,
                   const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write stream log: " + path.string());
  for (const StreamRecord& rec : records) {
    json obj;
    obj["id"] = rec.id;
    obj["t"] = rec.t;
    json modes = json::array();
    for (const Trajectory& m : rec.prediction.modes)
      modes.push_back(matrix_to_json(m));
    obj["modes"] = std::move(modes);
    json probs = json::array();
    for (Eigen::Index i = 0; i < rec.prediction.probs.size(); ++i)
      probs.push_back(rec.prediction.probs(i));
    obj["probs"] = std::move(probs);
    obj["truth"] = matrix_to_json(rec.truth);
    obj["sigma"] = scalar_to_json(rec.sigma);
    obj["q"] = scalar_to_json(rec.quantile_used);
    obj["score"] = scalar_to_json(rec.score);
    obj["err"] = rec.error;
    obj["running_cov"] = scalar_to_json(rec.running_coverage);
    obj["lo"] = matrix_to_json(rec.interval.lower);
    obj["hi"] = matrix_to_json(rec.interval.upper);
    out << obj.dump() << '\n';
  }
}

std::vector<StreamRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stream log: " + path.string());
  std::vector<StreamRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) +
                      ": malformed record: " + e.what());
    }
    for (const char* key : {"id", "t", "modes", "probs", "truth", "sigma",
                            "q", "score", "err", "running_cov", "lo", "hi"})
      if (!obj.contains(key))
        throw DataError("line " + std::to_string(line_no) +
                        ": missing field '" + key + "'");
    StreamRecord rec;
    rec.id = obj["id"].get<std::string>();
    rec.t = obj["t"].get<long long>();
    if (!obj["modes"].is_array() || obj["modes"].empty())
      throw DataError("line " + std::to_string(line_no) + ": empty modes");
    for (std::size_t m = 0; m < obj["modes"].size(); ++m)
      rec.prediction.modes.push_back(
          matrix_from_json(obj["modes"][m], "modes", line_no));
    const json& probs = obj["probs"];
    if (!probs.is_array() || probs.size() != rec.prediction.modes.size())
      throw DataError("line " + std::to_string(line_no) +
                      ": probs do not match modes");
    rec.prediction.probs.resize(static_cast<Eigen::Index>(probs.size()));
    for (std::size_t i = 0; i < probs.size(); ++i)
      rec.prediction.probs(static_cast<Eigen::Index>(i)) =
          probs[i].get<double>();
    validate_output(rec.prediction);
    rec.truth = matrix_from_json(obj["truth"], "truth", line_no);
    rec.sigma = scalar_from_json(obj["sigma"], "sigma", line_no);
    rec.quantile_used = scalar_from_json(obj["q"], "q", line_no);
    rec.score = scalar_from_json(obj["score"], "score", line_no);
    rec.error = obj["err"].get<int>();
    if (rec.error != 0 && rec.error != 1)
      throw DataError("line " + std::to_string(line_no) +
                      ": err must be 0 or 1");
    rec.running_coverage =
        scalar_from_json(obj["running_cov"], "running_cov", line_no);
    rec.interval.lower = matrix_from_json(obj["lo"], "lo", line_no);
    rec.interval.upper = matrix_from_json(obj["hi"], "hi", line_no);
    rec.interval.center = rec.prediction.modes.front();
    rec.interval.sigma = rec.sigma;
    rec.interval.quantile = rec.quantile_used;
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace cuqds
