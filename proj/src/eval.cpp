#include "tadet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>

namespace tadet {

double EvalResult::map_at(double threshold) const {
  for (const Row& r : rows)
    if (r.threshold == threshold) return r.map;
  throw std::invalid_argument("no evaluation row for threshold " + std::to_string(threshold));
}

double average_precision(const std::vector<Detection>& detections,
                         const std::vector<GtInstance>& gts, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
    throw std::invalid_argument("IoU threshold must lie in (0, 1]");
  if (gts.empty())
    throw std::invalid_argument("average_precision needs at least one ground truth");

  std::map<std::string, std::vector<const GtInstance*>> gt_by_video;
  for (const GtInstance& g : gts) gt_by_video[g.video_id].push_back(&g);

  std::vector<const Detection*> order;
  order.reserve(detections.size());
  for (const Detection& d : detections) order.push_back(&d);
  std::sort(order.begin(), order.end(), [](const Detection* a, const Detection* b) {
    return std::make_tuple(-a->score, a->video_id, a->segment.start(), a->segment.end()) <
           std::make_tuple(-b->score, b->video_id, b->segment.start(), b->segment.end());
  });

  std::map<std::string, std::vector<bool>> used;
  for (auto& [vid, list] : gt_by_video) used[vid] = std::vector<bool>(list.size(), false);

  std::vector<bool> is_tp(order.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Detection& d = *order[i];
    const auto it = gt_by_video.find(d.video_id);
    if (it == gt_by_video.end()) continue;  // false positive
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t j = 0; j < it->second.size(); ++j) {
      if (used[d.video_id][j]) continue;
      const double ov = iou_1d(d.segment, it->second[j]->segment);
      if (ov >= iou_threshold && ov > best_iou) {
        best = static_cast<int>(j);
        best_iou = ov;
      }
    }
    if (best >= 0) {
      used[d.video_id][static_cast<std::size_t>(best)] = true;
      is_tp[i] = true;
    }
  }

  // Precision/recall points, then area under the precision envelope.
  const double num_gt = static_cast<double>(gts.size());
  std::vector<double> recall;
  std::vector<double> precision;
  int tp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (is_tp[i]) ++tp;
    recall.push_back(tp / num_gt);
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
  }

  std::vector<double> mrec;
  std::vector<double> mpre;
  mrec.push_back(0.0);
  mpre.push_back(0.0);
  for (std::size_t i = 0; i < recall.size(); ++i) {
    mrec.push_back(recall[i]);
    mpre.push_back(precision[i]);
  }
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i > 0; --i)
    mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);

  double ap = 0.0;
  for (std::size_t i = 1; i < mrec.size(); ++i)
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  return ap;
}

EvalResult evaluate(const std::vector<Detection>& detections,
                    const std::vector<GtInstance>& gts, const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw std::invalid_argument("threshold list must be nonempty");

  std::set<int> classes;
  for (const GtInstance& g : gts) {
    if (g.class_id < 1) throw std::invalid_argument("ground-truth class ids must be >= 1");
    classes.insert(g.class_id);
  }

  EvalResult result;
  for (double t : thresholds) {
    EvalResult::Row row;
    row.threshold = t;
    double sum = 0.0;
    for (int c : classes) {
      std::vector<Detection> dets_c;
      for (const Detection& d : detections)
        if (d.class_id == c) dets_c.push_back(d);
      std::vector<GtInstance> gts_c;
      for (const GtInstance& g : gts)
        if (g.class_id == c) gts_c.push_back(g);
      const double ap = average_precision(dets_c, gts_c, t);
      row.ap_by_class[c] = ap;
      sum += ap;
    }
    row.map = classes.empty() ? 0.0 : sum / static_cast<double>(classes.size());
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace tadet
