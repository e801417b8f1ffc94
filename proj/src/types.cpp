#include "cuqds/types.hpp"

namespace cuqds {

Eigen::VectorXd flatten_trajectory(const Trajectory& x) {
  Eigen::VectorXd v(x.size());
  for (Eigen::Index t = 0; t < x.rows(); ++t)
    for (Eigen::Index d = 0; d < x.cols(); ++d) v(t * x.cols() + d) = x(t, d);
  return v;
}

Trajectory unflatten_trajectory(const Eigen::VectorXd& v, Eigen::Index steps,
                                Eigen::Index dims) {
  if (v.size() != steps * dims)
    throw DataError("unflatten_trajectory: size " + std::to_string(v.size()) +
                    " does not match " + std::to_string(steps) + "x" +
                    std::to_string(dims));
  Trajectory x(steps, dims);
  for (Eigen::Index t = 0; t < steps; ++t)
    for (Eigen::Index d = 0; d < dims; ++d) x(t, d) = v(t * dims + d);
  return x;
}

const char* role_name(DatasetRole role) {
  switch (role) {
    case DatasetRole::train: return "train";
    case DatasetRole::validation: return "validation";
    case DatasetRole::test: return "test";
  }
  return "unknown";
}

bool is_finite(const Trajectory& x) { return x.allFinite(); }

void validate_dataset(const Dataset& ds) {
  if (ds.empty()) return;
  const Eigen::Index obs_len = ds.samples.front().observed.rows();
  const Eigen::Index fut_len = ds.samples.front().future.rows();
  const Eigen::Index dims = ds.samples.front().observed.cols();
  long long prev_t = 0;
  bool first = true;
  for (const Sample& s : ds.samples) {
    if (s.observed.rows() != obs_len || s.future.rows() != fut_len ||
        s.observed.cols() != dims || s.future.cols() != dims)
      throw DataError("sample '" + s.id + "': inconsistent shape");
    if (!is_finite(s.observed) || !is_finite(s.future))
      throw DataError("sample '" + s.id + "': non-finite coordinate");
    if (ds.role == DatasetRole::test) {
      if (!first && s.t <= prev_t)
        throw DataError("test stream out of order at sample '" + s.id + "'");
      prev_t = s.t;
      first = false;
    }
  }
}

}  // namespace cuqds
