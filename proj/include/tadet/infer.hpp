#pragma once

#include <string>
#include <vector>

#include "tadet/dataset.hpp"
#include "tadet/network.hpp"

namespace tadet {

struct InferConfig {
  double nms_threshold = 0.2;
  double min_score = 0.0;
  // Multiply the class score by the fused overlap. Off by default: the class
  // probability alone is the final score.
  bool score_with_overlap = false;

  void validate() const;
};

struct Detection {
  std::string video_id;
  Segment segment;  // seconds
  int class_id = 1; // never 0 (background)
  double score = 0.0;
};

// Raw detections for one window, before NMS. Per anchor: decode the fused
// offsets, take the argmax class of the fused probabilities, drop anchors
// whose argmax is background, clip to the window, convert to seconds.
std::vector<Detection> infer_window(Network& net, const Window& window, const InferConfig& cfg);

// Greedy per-class, per-video suppression: keep in descending score order,
// drop any remaining detection of the same class and video whose IoU with a
// kept one exceeds the threshold. Output stays in the greedy visit order
// (score descending; ties by earlier start, then lower class id).
std::vector<Detection> nms(std::vector<Detection> detections, double overlap_threshold);

// infer_window + nms over every window, sorted for the detection dump:
// video id ascending, then score descending.
std::vector<Detection> run_inference(Network& net, const std::vector<Window>& windows,
                                     const InferConfig& cfg);

}  // namespace tadet
