#include "tadet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "tadet/rng.hpp"

namespace tadet {

void SyntheticSpec::validate() const {
  if (num_videos < 1) throw std::invalid_argument("num_videos must be >= 1");
  if (window_length < 2) throw std::invalid_argument("window_length must be >= 2");
  if (feature_dim < 3)
    throw std::invalid_argument("feature_dim must be >= 3 to hold the class motifs");
  if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  if (min_actions < 0 || max_actions < min_actions)
    throw std::invalid_argument("action count range must satisfy 0 <= min <= max");
  if (!(min_width > 0.0 && min_width <= max_width && max_width <= 1.0))
    throw std::invalid_argument("action widths must satisfy 0 < min <= max <= 1");
  if (noise_level < 0.0) throw std::invalid_argument("noise_level must be >= 0");
  if (motif_amplitude <= 0.0) throw std::invalid_argument("motif_amplitude must be > 0");
  if (frame_stride_seconds <= 0.0)
    throw std::invalid_argument("frame_stride_seconds must be > 0");
  if (retry_limit < 1) throw std::invalid_argument("retry_limit must be >= 1");
  if (id_prefix.empty()) throw std::invalid_argument("id_prefix must be nonempty");
}

std::vector<int> motif_channels(int class_id, int feature_dim) {
  if (feature_dim < 3) throw std::invalid_argument("feature_dim must be >= 3");
  if (class_id < 1) throw std::invalid_argument("class_id must be >= 1");
  const int step = std::max(1, feature_dim / 3);
  std::vector<int> channels(3);
  for (int m = 0; m < 3; ++m) channels[static_cast<std::size_t>(m)] = (5 * class_id + m * step) % feature_dim;
  return channels;
}

double motif_ramp(double u) {
  if (u < 0.0 || u > 1.0) return 0.0;
  return std::min({1.0, u / 0.2, (1.0 - u) / 0.2});
}

double motif_value(const SyntheticSpec& spec, int slot, double u) {
  static constexpr double kSlotFactor[3] = {1.0, 0.75, 0.5};
  if (slot < 0 || slot > 2) throw std::invalid_argument("motif slot must be 0..2");
  return spec.motif_amplitude * kSlotFactor[slot] * motif_ramp(u);
}

namespace {

bool overlaps_any(const Segment& candidate, const std::vector<GroundTruth>& accepted) {
  for (const GroundTruth& a : accepted)
    if (candidate.start() < a.segment.end() && a.segment.start() < candidate.end()) return true;
  return false;
}

Window make_window(const SyntheticSpec& spec, int index) {
  Rng rng(mix_seed(spec.seed, 0x5EED, static_cast<std::uint64_t>(index)));

  Window w;
  char suffix[16];
  std::snprintf(suffix, sizeof(suffix), "_%04d", index);
  w.video_id = spec.id_prefix + suffix;
  w.stride_seconds = spec.frame_stride_seconds;
  w.start_seconds = index * spec.window_length * spec.frame_stride_seconds;

  const int wanted = static_cast<int>(rng.uniform_int(spec.min_actions, spec.max_actions));
  for (int a = 0; a < wanted; ++a) {
    for (int attempt = 0; attempt < spec.retry_limit; ++attempt) {
      const double width = rng.uniform(spec.min_width, spec.max_width);
      const double center = rng.uniform(width / 2.0, 1.0 - width / 2.0);
      const int class_id = static_cast<int>(rng.uniform_int(1, spec.num_classes));
      const Segment seg{center, width};
      if (overlaps_any(seg, w.actions)) continue;
      w.actions.push_back(GroundTruth{seg, class_id});
      break;
    }
  }
  std::sort(w.actions.begin(), w.actions.end(), [](const GroundTruth& a, const GroundTruth& b) {
    return a.segment.start() < b.segment.start();
  });

  const int d = spec.feature_dim;
  const int t_len = spec.window_length;
  Tensor features(d, t_len);
  for (int c = 0; c < d; ++c)
    for (int t = 0; t < t_len; ++t) features.at(c, t) = spec.noise_level * rng.normal();

  for (const GroundTruth& g : w.actions) {
    const std::vector<int> channels = motif_channels(g.class_id, d);
    for (int t = 0; t < t_len; ++t) {
      const double u_t = (t + 0.5) / t_len;
      if (u_t < g.segment.start() || u_t >= g.segment.end()) continue;
      const double rel = (u_t - g.segment.start()) / g.segment.width;
      for (int m = 0; m < 3; ++m)
        features.at(channels[static_cast<std::size_t>(m)], t) += motif_value(spec, m, rel);
    }
  }
  w.features = std::move(features);
  return w;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.class_names.reserve(static_cast<std::size_t>(spec.num_classes));
  for (int c = 1; c <= spec.num_classes; ++c)
    ds.class_names.push_back("class_" + std::to_string(c));
  ds.windows.reserve(static_cast<std::size_t>(spec.num_videos));
  for (int i = 0; i < spec.num_videos; ++i) ds.windows.push_back(make_window(spec, i));
  return ds;
}

}  // namespace tadet
