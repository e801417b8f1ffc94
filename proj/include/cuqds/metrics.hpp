#pragma once

#include "cuqds/conformal.hpp"
#include "cuqds/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace cuqds {

struct AccuracyStats {
  double min_ade = 0.0;
  double min_fde = 0.0;
  double miss_rate = 0.0;
};

struct MetricReport {
  std::map<int, AccuracyStats> by_k;
  double mean_nll = 0.0;
  double coverage = 0.0;
  std::size_t count = 0;
  double miss_threshold = 2.0;
};

// Minimum over the k most probable modes of the mean per-step Euclidean
// displacement from the ground truth.
double min_ade(const PredictorOutput& out, const Trajectory& truth, int k);

// Same minimum, but of the displacement at the final step only.
double min_fde(const PredictorOutput& out, const Trajectory& truth, int k);

// Fraction of records whose min_fde over the top-k modes exceeds the
// threshold (meters).
double miss_rate(const std::vector<StreamRecord>& records, int k,
                 double threshold);

// Mean over all future coordinates of the per-coordinate Gaussian NLL with
// the per-sample scalar sigma broadcast everywhere.
double gaussian_nll(const Trajectory& truth, const Trajectory& predicted,
                    double sigma);

// 1 - mean coverage error. Empty input is an error, not zero.
double coverage_rate(const std::vector<StreamRecord>& records);

MetricReport evaluate_records(const std::vector<StreamRecord>& records,
                              const std::vector<int>& ks,
                              double miss_threshold = 2.0);

// Flat `key = value` block, one metric per line, deterministic order.
std::string format_report(const MetricReport& report);
// The same report as a single machine-readable JSON line.
std::string report_json_line(const MetricReport& report);

}  // namespace cuqds
