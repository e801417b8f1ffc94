#pragma once

#include "cuqds/config.hpp"
#include "cuqds/metrics.hpp"
#include "cuqds/model_io.hpp"

#include <filesystem>

namespace cuqds {

// Fixed output names under the run's directories.
inline constexpr const char* kTrainFile = "train.jsonl";
inline constexpr const char* kValFile = "val.jsonl";
inline constexpr const char* kTestFile = "test.jsonl";
inline constexpr const char* kLossCurveFile = "train_loss.txt";
inline constexpr const char* kRecordsFile = "stream_records.jsonl";
inline constexpr const char* kMetricsTextFile = "metrics.txt";
inline constexpr const char* kMetricsJsonFile = "metrics.jsonl";

// Writes train/val/test sample files under the data dir.
void cmd_gen(const RunConfig& config);

// Fits inducing variables, trains predictor and surrogate jointly, warm-ups
// the calibrator on validation, and persists the bundle plus a loss curve.
void cmd_train(const RunConfig& config);

// Streams the test set through the chosen calibrator; writes the audit log
// and the metric report (text block and JSON line).
MetricReport cmd_stream(const RunConfig& config);

// Recomputes the metric report from an audit log.
MetricReport cmd_eval(const std::filesystem::path& records_path,
                      double miss_threshold = 2.0);

void write_report(const MetricReport& report,
                  const std::filesystem::path& out_dir);

}  // namespace cuqds
