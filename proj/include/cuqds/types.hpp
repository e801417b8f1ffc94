#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace cuqds {

// Error categories, mapped to distinct CLI exit codes (see tools/):
// ConfigError -> 2, DataError -> 3, NumericError -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A trajectory is a (time steps) x (spatial dims) matrix of positions in
// meters. Rows are time-ordered.
using Trajectory = Eigen::MatrixXd;

// Flatten in time-major order: element (t, d) lands at index t * D + d.
Eigen::VectorXd flatten_trajectory(const Trajectory& x);
Trajectory unflatten_trajectory(const Eigen::VectorXd& v, Eigen::Index steps,
                                Eigen::Index dims);

struct Sample {
  std::string id;
  long long t = 0;      // stream order index
  Trajectory observed;  // L x D
  Trajectory future;    // J x D
};

enum class DatasetRole { train, validation, test };

const char* role_name(DatasetRole role);

struct Dataset {
  std::vector<Sample> samples;
  DatasetRole role = DatasetRole::train;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

bool is_finite(const Trajectory& x);

// Shape/finiteness contract plus, for test datasets, strictly increasing
// timestamps (the stream contract). Throws DataError.
void validate_dataset(const Dataset& ds);

}  // namespace cuqds
