#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tadet/dataset.hpp"

namespace tadet {

struct SyntheticSpec {
  int num_videos = 200;
  int window_length = 64;
  int feature_dim = 16;
  int num_classes = 5;
  int min_actions = 1;
  int max_actions = 3;
  double min_width = 0.08;
  double max_width = 0.35;
  double noise_level = 0.25;
  double motif_amplitude = 1.0;
  double frame_stride_seconds = 0.1;
  int retry_limit = 20;
  std::uint64_t seed = 11;
  std::string id_prefix = "synth";

  void validate() const;
};

// The three feature channels carrying the signature of a class. Distinct for
// any feature_dim >= 3.
std::vector<int> motif_channels(int class_id, int feature_dim);

// Boundary ramp over the segment-relative position u in [0, 1]: rises over
// the first fifth, flat in the middle, falls over the last fifth.
double motif_ramp(double u);

// Amplitude of channel slot m (0..2) at segment-relative position u.
double motif_value(const SyntheticSpec& spec, int slot, double u);

// Gaussian background noise windows with class motifs added over the
// annotated segments. Deterministic per (seed, window index): regenerating
// any window reproduces it bit for bit.
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace tadet
