#include "cuqds/metrics.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace cuqds {

namespace {

// Indices of the k most probable modes, probability-descending (stable).
std::vector<std::size_t> top_modes(const PredictorOutput& out, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > out.modes.size())
    throw ConfigError("metric k must lie in [1, number of modes]");
  std::vector<std::size_t> order(out.modes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return out.probs(static_cast<Eigen::Index>(a)) >
                            out.probs(static_cast<Eigen::Index>(b));
                   });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

void check_shapes(const Trajectory& a, const Trajectory& b,
                  const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DataError(std::string(what) + ": shape mismatch");
}

std::string fmt(double v) { return nlohmann::json(v).dump(); }

}  // namespace

double min_ade(const PredictorOutput& out, const Trajectory& truth, int k) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m : top_modes(out, k)) {
    const Trajectory& mode = out.modes[m];
    check_shapes(mode, truth, "min_ade");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < truth.rows(); ++j)
      sum += (mode.row(j) - truth.row(j)).norm();
    best = std::min(best, sum / static_cast<double>(truth.rows()));
  }
  return best;
}

double min_fde(const PredictorOutput& out, const Trajectory& truth, int k) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m : top_modes(out, k)) {
    const Trajectory& mode = out.modes[m];
    check_shapes(mode, truth, "min_fde");
    best = std::min(
        best,
        (mode.row(mode.rows() - 1) - truth.row(truth.rows() - 1)).norm());
  }
  return best;
}

double miss_rate(const std::vector<StreamRecord>& records, int k,
                 double threshold) {
  if (records.empty()) throw DataError("miss_rate: no records");
  std::size_t misses = 0;
  for (const StreamRecord& rec : records)
    if (min_fde(rec.prediction, rec.truth, k) > threshold) ++misses;
  return static_cast<double>(misses) / static_cast<double>(records.size());
}

double gaussian_nll(const Trajectory& truth, const Trajectory& predicted,
                    double sigma) {
  check_shapes(truth, predicted, "gaussian_nll");
  if (!(sigma > 0.0)) throw NumericError("gaussian_nll: sigma must be > 0");
  const double mean_sq =
      (truth - predicted).squaredNorm() / static_cast<double>(truth.size());
  return 0.5 * mean_sq / (sigma * sigma) +
         0.5 * std::log(2.0 * std::numbers::pi * sigma * sigma);
}

double coverage_rate(const std::vector<StreamRecord>& records) {
  if (records.empty())
    throw DataError("coverage_rate: undefined on an empty stream");
  double errs = 0.0;
  for (const StreamRecord& rec : records) errs += rec.error;
  return 1.0 - errs / static_cast<double>(records.size());
}

MetricReport evaluate_records(const std::vector<StreamRecord>& records,
                              const std::vector<int>& ks,
                              double miss_threshold) {
  if (records.empty()) throw DataError("evaluate_records: no records");
  MetricReport report;
  report.count = records.size();
  report.miss_threshold = miss_threshold;
  report.coverage = coverage_rate(records);

  double nll = 0.0;
  for (const StreamRecord& rec : records)
    nll += gaussian_nll(rec.truth, rec.prediction.modes.front(), rec.sigma);
  report.mean_nll = nll / static_cast<double>(records.size());

  for (int k : ks) {
    AccuracyStats stats;
    for (const StreamRecord& rec : records) {
      stats.min_ade += min_ade(rec.prediction, rec.truth, k);
      stats.min_fde += min_fde(rec.prediction, rec.truth, k);
    }
    stats.min_ade /= static_cast<double>(records.size());
    stats.min_fde /= static_cast<double>(records.size());
    stats.miss_rate = miss_rate(records, k, miss_threshold);
    report.by_k[k] = stats;
  }
  return report;
}

std::string format_report(const MetricReport& report) {
  std::ostringstream out;
  out << "count = " << report.count << '\n';
  out << "coverage = " << fmt(report.coverage) << '\n';
  out << "mean_nll = " << fmt(report.mean_nll) << '\n';
  out << "miss_threshold = " << fmt(report.miss_threshold) << '\n';
  for (const auto& [k, stats] : report.by_k) {
    out << "minADE_" << k << " = " << fmt(stats.min_ade) << '\n';
    out << "minFDE_" << k << " = " << fmt(stats.min_fde) << '\n';
    out << "MR_" << k << " = " << fmt(stats.miss_rate) << '\n';
  }
  return out.str();
}

std::string report_json_line(const MetricReport& report) {
  nlohmann::json obj;
  obj["count"] = report.count;
  obj["coverage"] = report.coverage;
  obj["mean_nll"] = report.mean_nll;
  obj["miss_threshold"] = report.miss_threshold;
  for (const auto& [k, stats] : report.by_k) {
    const std::string suffix = std::to_string(k);
    obj["minADE_" + suffix] = stats.min_ade;
    obj["minFDE_" + suffix] = stats.min_fde;
    obj["MR_" + suffix] = stats.miss_rate;
  }
  return obj.dump();
}

}  // namespace cuqds
