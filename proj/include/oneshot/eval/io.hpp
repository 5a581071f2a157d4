#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oneshot/eval/metrics.hpp"

namespace oneshot::eval {

// Detection CSV header: episode_id,confidence,rank,offset0,extent0,offset1,extent1
// Ground-truth CSV header: episode_id,label,rank,offset0,extent0,offset1,extent1
// Unused axes and missing truth boxes leave their cells empty.
void write_detections_csv(const std::filesystem::path& path, const std::vector<Detection>& detections);
std::vector<Detection> read_detections_csv(const std::filesystem::path& path);
void write_truths_csv(const std::filesystem::path& path, const std::vector<GroundTruth>& truths);
std::vector<GroundTruth> read_truths_csv(const std::filesystem::path& path);

/// Metrics of one N-way set.
struct SetReport {
  std::string name;
  std::size_t N = 0;
  double iou_threshold = 0.5;
  double ap = 0.0;
  std::vector<double> recall_levels{0.5, 0.9, 0.99};
  std::vector<double> precision;
  PostprocessParams calibration;
  double validation_ap = 0.0;
  std::size_t episodes = 0;
  std::size_t detections = 0;
};

struct EvalReport {
  std::string track;
  std::string model;
  std::vector<SetReport> sets;
};

/// JSON with keys sorted and doubles in shortest round-trip form, so equal
/// reports serialise to equal bytes. Each set carries exactly AP, Pr@0.5,
/// Pr@0.9 and Pr@0.99 under "metrics".
std::string report_json(const EvalReport& report);
void write_report(const std::filesystem::path& path, const EvalReport& report);

/// iou_threshold,AP rows in the given order.
void write_sweep_csv(const std::filesystem::path& path, const std::vector<double>& thresholds, const std::vector<double>& aps);

}  // namespace oneshot::eval
