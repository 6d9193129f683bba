#pragma once

#include <string>
#include <vector>

#include "tadet/anchors.hpp"
#include "tadet/tensor.hpp"

namespace tadet {

// One training/evaluation unit: a feature window with its actions in
// normalized window coordinates. Real timestamps live only here and at the
// file boundary; all geometry underneath works in [0, 1].
struct Window {
  std::string video_id;
  double start_seconds = 0.0;
  double stride_seconds = 0.0;  // seconds per feature frame
  Tensor features{1, 1};        // [feature_dim x window_length]
  std::vector<GroundTruth> actions;

  double span_seconds() const { return features.length() * stride_seconds; }
  double to_seconds(double normalized) const { return start_seconds + normalized * span_seconds(); }
  double to_normalized(double seconds) const {
    return (seconds - start_seconds) / span_seconds();
  }
};

struct Dataset {
  std::vector<Window> windows;
  std::vector<std::string> class_names;  // class_names[i] names class id i + 1

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

}  // namespace tadet
