#include "tadet/infer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace tadet {

void InferConfig::validate() const {
  if (!(nms_threshold > 0.0 && nms_threshold < 1.0))
    throw std::invalid_argument("nms_threshold must lie in (0, 1)");
  if (!(min_score >= 0.0 && std::isfinite(min_score)))
    throw std::invalid_argument("min_score must be finite and >= 0");
}

std::vector<Detection> infer_window(Network& net, const Window& window, const InferConfig& cfg) {
  cfg.validate();
  Graph g;
  const Network::Forward f = net.forward(g, window.features);
  const Tensor& probs = g.value(f.fused.probs);
  const Tensor& overlap = g.value(f.fused.overlap);
  const Tensor& dc = g.value(f.fused.dc);
  const Tensor& dw = g.value(f.fused.dw);
  const std::vector<Anchor>& anchors = net.anchors();
  const AnchorSpec& spec = net.config().anchors;

  std::vector<Detection> out;
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const int col = static_cast<int>(a);
    int best = 0;
    for (int row = 1; row < probs.channels(); ++row)
      if (probs.at(row, col) > probs.at(best, col)) best = row;
    if (best == 0) continue;  // background wins

    double score = probs.at(best, col);
    if (cfg.score_with_overlap) score *= overlap.at(0, col);
    if (score < cfg.min_score) continue;

    const Segment seg = decode_offsets(anchors[a], dc.at(0, col), dw.at(0, col), spec);
    const double lo = std::max(0.0, seg.start());
    const double hi = std::min(1.0, seg.end());
    if (!(hi > lo)) continue;

    Detection d;
    d.video_id = window.video_id;
    d.segment = Segment::from_range(window.to_seconds(lo), window.to_seconds(hi));
    d.class_id = best;
    d.score = score;
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

// Greedy visit order, total so equal-score runs are reproducible.
bool nms_order(const Detection& a, const Detection& b) {
  return std::make_tuple(-a.score, a.segment.start(), a.class_id, a.video_id,
                         a.segment.end()) <
         std::make_tuple(-b.score, b.segment.start(), b.class_id, b.video_id, b.segment.end());
}

}  // namespace

std::vector<Detection> nms(std::vector<Detection> detections, double overlap_threshold) {
  if (!(overlap_threshold > 0.0 && overlap_threshold < 1.0))
    throw std::invalid_argument("NMS overlap threshold must lie in (0, 1)");
  std::sort(detections.begin(), detections.end(), nms_order);
  std::vector<Detection> kept;
  for (const Detection& d : detections) {
    bool suppressed = false;
    for (const Detection& k : kept) {
      if (k.class_id != d.class_id || k.video_id != d.video_id) continue;
      if (iou_1d(k.segment, d.segment) > overlap_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

std::vector<Detection> run_inference(Network& net, const std::vector<Window>& windows,
                                     const InferConfig& cfg) {
  std::vector<Detection> all;
  for (const Window& w : windows) {
    std::vector<Detection> dets = infer_window(net, w, cfg);
    all.insert(all.end(), std::make_move_iterator(dets.begin()),
               std::make_move_iterator(dets.end()));
  }
  all = nms(std::move(all), cfg.nms_threshold);
  std::sort(all.begin(), all.end(), [](const Detection& a, const Detection& b) {
    return std::make_tuple(a.video_id, -a.score, a.segment.start(), a.class_id,
                           a.segment.end()) <
           std::make_tuple(b.video_id, -b.score, b.segment.start(), b.class_id, b.segment.end());
  });
  return all;
}

}  // namespace tadet
