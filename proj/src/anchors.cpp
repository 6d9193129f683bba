#include "tadet/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tadet/rng.hpp"

namespace tadet {

Segment Segment::from_range(double start, double end) {
  if (!(end > start))
    throw std::invalid_argument("segment [" + std::to_string(start) + ", " +
                                std::to_string(end) + ") has non-positive width");
  return Segment{0.5 * (start + end), end - start};
}

void AnchorSpec::validate() const {
  if (layer_lengths.empty()) throw std::invalid_argument("anchor layers: need at least one");
  for (int t : layer_lengths)
    if (t < 1) throw std::invalid_argument("anchor layer length must be >= 1");
  if (ratios.empty()) throw std::invalid_argument("anchor ratios: need at least one");
  for (double r : ratios)
    if (!(r > 0.0)) throw std::invalid_argument("anchor ratios must be positive");
  if (!(alpha1 > 0.0) || !(alpha2 > 0.0))
    throw std::invalid_argument("offset scales alpha1/alpha2 must be positive");
}

int AnchorSpec::total_anchors() const {
  int n = 0;
  for (int t : layer_lengths) n += t * static_cast<int>(ratios.size());
  return n;
}

std::vector<Anchor> generate_anchors(const AnchorSpec& spec) {
  spec.validate();
  std::vector<Anchor> out;
  out.reserve(static_cast<std::size_t>(spec.total_anchors()));
  for (std::size_t j = 0; j < spec.layer_lengths.size(); ++j) {
    const int cells = spec.layer_lengths[j];
    for (int i = 0; i < cells; ++i) {
      for (double ratio : spec.ratios) {
        Anchor a;
        a.layer = static_cast<int>(j);
        a.cell = i;
        a.ratio = ratio;
        a.center = (i + 0.5) / cells;
        a.width = ratio / cells;
        out.push_back(a);
      }
    }
  }
  return out;
}

double iou_1d(const Segment& a, const Segment& b) {
  const double lo = std::max(a.start(), b.start());
  const double hi = std::min(a.end(), b.end());
  if (hi <= lo) return 0.0;
  const double uni = std::max(a.end(), b.end()) - std::min(a.start(), b.start());
  return (hi - lo) / uni;
}

Segment decode_offsets(const Anchor& anchor, double dc, double dw, const AnchorSpec& spec) {
  Segment s;
  s.center = anchor.center + spec.alpha1 * anchor.width * dc;
  s.width = anchor.width * std::exp(spec.alpha2 * dw);
  return s;
}

std::pair<double, double> encode_segment(const Anchor& anchor, const Segment& gt,
                                         const AnchorSpec& spec) {
  if (!(gt.width > 0.0))
    throw std::invalid_argument("encode: ground-truth width must be positive");
  const double dc = (gt.center - anchor.center) / (spec.alpha1 * anchor.width);
  const double dw = std::log(gt.width / anchor.width) / spec.alpha2;
  return {dc, dw};
}

std::vector<int> MatchResult::positives() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] > 0) out.push_back(static_cast<int>(i));
  return out;
}

MatchResult match_anchors(const std::vector<Anchor>& anchors,
                          const std::vector<GroundTruth>& gts, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
    throw std::invalid_argument("matching threshold must lie in (0, 1)");
  for (const GroundTruth& g : gts) {
    if (g.class_id < 1)
      throw std::invalid_argument("ground-truth class ids must be >= 1 (0 is background)");
    if (!(g.segment.width > 0.0))
      throw std::invalid_argument("ground-truth segments must have positive width");
  }
  MatchResult r;
  r.labels.assign(anchors.size(), 0);
  r.gt_index.assign(anchors.size(), -1);
  r.g_iou.assign(anchors.size(), 0.0);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Segment a = anchors[i].segment();
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = iou_1d(a, gts[g].segment);
      if (v > best_iou) {  // strict: the first ground truth wins exact ties
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    r.g_iou[i] = best_iou;
    if (best >= 0 && best_iou >= iou_threshold) {
      r.labels[i] = gts[static_cast<std::size_t>(best)].class_id;
      r.gt_index[i] = best;
    }
  }
  return r;
}

std::vector<int> MiningResult::selected() const {
  std::vector<int> out = positives;
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

MiningResult hard_negative_mining(const MatchResult& match,
                                  const std::vector<double>& predicted_overlap, double ratio,
                                  std::uint64_t seed) {
  if (predicted_overlap.size() != match.labels.size())
    throw std::invalid_argument("predicted_overlap has " +
                                std::to_string(predicted_overlap.size()) + " entries, match has " +
                                std::to_string(match.labels.size()));
  if (!(ratio >= 0.0)) throw std::invalid_argument("negative:positive ratio must be >= 0");

  MiningResult out;
  std::vector<int> all_negatives;
  for (std::size_t i = 0; i < match.labels.size(); ++i) {
    if (match.labels[i] > 0)
      out.positives.push_back(static_cast<int>(i));
    else
      all_negatives.push_back(static_cast<int>(i));
  }

  const auto by_overlap_desc = [&](int a, int b) {
    if (predicted_overlap[a] != predicted_overlap[b])
      return predicted_overlap[a] > predicted_overlap[b];
    return a < b;
  };

  if (out.positives.empty()) {
    // Nothing positive to balance against: keep a fixed small set of the most
    // confident negatives so the classifier still gets a signal.
    std::sort(all_negatives.begin(), all_negatives.end(), by_overlap_desc);
    const std::size_t k = std::min<std::size_t>(8, all_negatives.size());
    out.negatives.assign(all_negatives.begin(), all_negatives.begin() + k);
    return out;
  }

  const auto quota = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(out.positives.size())));

  std::vector<int> hard;
  std::vector<int> easy;
  for (int i : all_negatives) {
    if (predicted_overlap[i] > 0.5)
      hard.push_back(i);
    else
      easy.push_back(i);
  }
  std::sort(hard.begin(), hard.end(), by_overlap_desc);

  if (hard.size() >= quota) {
    out.negatives.assign(hard.begin(), hard.begin() + quota);
    return out;
  }
  out.negatives = hard;
  Rng rng(seed);
  rng.shuffle(easy);
  const std::size_t fill = std::min(quota - hard.size(), easy.size());
  out.negatives.insert(out.negatives.end(), easy.begin(), easy.begin() + fill);
  return out;
}

}  // namespace tadet
