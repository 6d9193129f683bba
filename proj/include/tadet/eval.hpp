#pragma once

#include <map>
#include <string>
#include <vector>

#include "tadet/infer.hpp"

namespace tadet {

// One annotated action in seconds, as read back from an annotation file.
struct GtInstance {
  std::string video_id;
  Segment segment;
  int class_id = 1;
};

inline const std::vector<double> kDefaultEvalThresholds = {0.3, 0.4, 0.5, 0.6, 0.7};
inline constexpr const char* kApInterpolation = "all_point_envelope";

struct EvalResult {
  struct Row {
    double threshold = 0.0;
    std::map<int, double> ap_by_class;  // only classes with ground truth
    double map = 0.0;
  };
  std::vector<Row> rows;  // one per threshold, in input order

  double map_at(double threshold) const;  // invalid_argument if absent
};

// AP for one class: detections greedily match the highest-IoU unmatched
// ground truth of their video at or above the threshold (score-descending
// order); area under the precision envelope over all recall points.
double average_precision(const std::vector<Detection>& detections,
                         const std::vector<GtInstance>& gts, double iou_threshold);

// Per-threshold table of per-class AP and mAP. Classes without ground truth
// are excluded from the mean; detection input order never matters.
EvalResult evaluate(const std::vector<Detection>& detections,
                    const std::vector<GtInstance>& gts, const std::vector<double>& thresholds);

}  // namespace tadet
