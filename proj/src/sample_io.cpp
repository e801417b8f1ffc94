#include "cuqds/sample_io.hpp"

#include "json.hpp"

#include <fstream>
#include <string>

namespace cuqds {

namespace {

using nlohmann::json;

Trajectory parse_matrix(const json& arr, const std::string& key,
                        std::size_t line_no) {
  if (!arr.is_array() || arr.empty())
    throw DataError("line " + std::to_string(line_no) + ": field '" + key +
                    "' must be a non-empty array of rows");
  const std::size_t rows = arr.size();
  const std::size_t cols = arr.front().is_array() ? arr.front().size() : 0;
  if (cols == 0)
    throw DataError("line " + std::to_string(line_no) + ": field '" + key +
                    "' rows must be non-empty arrays");
  Trajectory m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = arr[r];
    if (!row.is_array() || row.size() != cols)
      throw DataError("line " + std::to_string(line_no) + ": field '" + key +
                      "' has a ragged row");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw DataError("line " + std::to_string(line_no) + ": field '" + key +
                        "' has a non-numeric entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          row[c].get<double>();
    }
  }
  return m;
}

json matrix_to_json(const Trajectory& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    arr.push_back(std::move(row));
  }
  return arr;
}

}  // namespace

Dataset read_samples(const std::filesystem::path& path, DatasetRole role) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sample file: " + path.string());

  Dataset ds;
  ds.role = role;
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
    for (const char* key : {"id", "t", "obs", "fut"})
      if (!obj.contains(key))
        throw DataError("line " + std::to_string(line_no) +
                        ": missing field '" + key + "'");
    if (!obj["id"].is_string() || !obj["t"].is_number_integer())
      throw DataError("line " + std::to_string(line_no) +
                      ": 'id' must be a string and 't' an integer");
    Sample s;
    s.id = obj["id"].get<std::string>();
    s.t = obj["t"].get<long long>();
    s.observed = parse_matrix(obj["obs"], "obs", line_no);
    s.future = parse_matrix(obj["fut"], "fut", line_no);
    if (s.observed.cols() != s.future.cols())
      throw DataError("line " + std::to_string(line_no) +
                      ": obs and fut dimension mismatch");
    ds.samples.push_back(std::move(s));
  }
  validate_dataset(ds);
  return ds;
}

void write_samples(const Dataset& ds, const std::filesystem::path& path) {
  validate_dataset(ds);
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write sample file: " + path.string());
  for (const Sample& s : ds.samples) {
    json obj;
    obj["id"] = s.id;
    obj["t"] = s.t;
    obj["obs"] = matrix_to_json(s.observed);
    obj["fut"] = matrix_to_json(s.future);
    out << obj.dump() << '\n';
  }
}

}  // namespace cuqds
