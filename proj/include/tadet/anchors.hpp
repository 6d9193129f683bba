#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace tadet {

// A temporal interval in center/width form. Coordinates are normalized to
// [0, 1] inside a window during training and are seconds at the I/O boundary.
struct Segment {
  double center = 0.0;
  double width = 0.0;

  double start() const { return center - 0.5 * width; }
  double end() const { return center + 0.5 * width; }

  static Segment from_range(double start, double end);  // requires end > start
};

// Anchor layout over the feature pyramid. Layer j with T_j cells carries one
// anchor per (cell, ratio): center (i + 0.5) / T_j, width ratio / T_j.
struct AnchorSpec {
  std::vector<int> layer_lengths = {16, 8, 4};
  std::vector<double> ratios = {0.5, 0.75, 1.0, 1.5, 2.0};
  double alpha1 = 0.1;  // center offset scale
  double alpha2 = 0.1;  // log-width offset scale

  void validate() const;
  int total_anchors() const;
};

struct Anchor {
  int layer = 0;
  int cell = 0;
  double ratio = 1.0;
  double center = 0.0;
  double width = 0.0;

  Segment segment() const { return Segment{center, width}; }
};

// Layer-major, then cell, then ratio: the same order the network's head
// columns are assembled in.
std::vector<Anchor> generate_anchors(const AnchorSpec& spec);

// Intersection over union of two intervals; 0 when disjoint or just touching.
double iou_1d(const Segment& a, const Segment& b);

// center' = center + alpha1 * width * dc; width' = width * exp(alpha2 * dw).
Segment decode_offsets(const Anchor& anchor, double dc, double dw, const AnchorSpec& spec);
// Inverse of decode_offsets; ground-truth width must be positive.
std::pair<double, double> encode_segment(const Anchor& anchor, const Segment& gt,
                                         const AnchorSpec& spec);

struct GroundTruth {
  Segment segment;
  int class_id = 0;  // 1..C; 0 is reserved for background
};

// labels[i] == 0 marks a negative anchor; positives carry the class of the
// highest-IoU ground truth (first index wins ties). g_iou is that best IoU for
// every anchor, matched negatives or not.
struct MatchResult {
  std::vector<int> labels;
  std::vector<int> gt_index;  // -1 for negatives
  std::vector<double> g_iou;

  std::vector<int> positives() const;
};

MatchResult match_anchors(const std::vector<Anchor>& anchors,
                          const std::vector<GroundTruth>& gts, double iou_threshold);

// All positives plus round(ratio * #positives) negatives: hard negatives first
// (predicted overlap > 0.5, descending overlap, index ascending), the rest
// drawn uniformly without replacement from the remaining negatives. With zero
// positives, falls back to the 8 highest-overlap negatives.
struct MiningResult {
  std::vector<int> positives;  // ascending anchor index
  std::vector<int> negatives;  // hard first, then random fills

  std::vector<int> selected() const;  // positives followed by negatives
};

MiningResult hard_negative_mining(const MatchResult& match,
                                  const std::vector<double>& predicted_overlap, double ratio,
                                  std::uint64_t seed);

}  // namespace tadet
