#include "tadet/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace tadet {

void LossWeights::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma) ||
      !std::isfinite(omega))
    throw std::invalid_argument("loss weights must be finite");
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
    throw std::invalid_argument("loss term weights must be non-negative");
  if (!(omega >= 0.0 && omega <= 1.0))
    throw std::invalid_argument("omega must lie in [0, 1], got " + std::to_string(omega));
}

namespace {

Graph::NodeId zero_scalar(Graph& g, const std::string& tag) {
  return g.input(Tensor(1, 1), tag);
}

}  // namespace

Graph::NodeId classification_loss(Graph& g, Graph::NodeId probs, const std::vector<int>& labels,
                                  const std::vector<int>& selected, bool* empty) {
  if (empty) *empty = selected.empty();
  if (selected.empty()) return zero_scalar(g, "loss.cls.empty");
  std::vector<std::pair<int, int>> entries;
  entries.reserve(selected.size());
  for (int idx : selected) {
    if (idx < 0 || idx >= static_cast<int>(labels.size()))
      throw std::invalid_argument("selected anchor index " + std::to_string(idx) +
                                  " is outside the label list");
    entries.emplace_back(labels[static_cast<std::size_t>(idx)], idx);
  }
  const Graph::NodeId picked = g.select_entries(g.log(probs), std::move(entries));
  return g.scale(g.sum(picked, "loss.cls.sum"), -1.0 / static_cast<double>(selected.size()));
}

Graph::NodeId overlap_loss(Graph& g, Graph::NodeId overlap, const std::vector<double>& g_iou,
                           const std::vector<int>& selected, bool* empty) {
  if (empty) *empty = selected.empty();
  if (selected.empty()) return zero_scalar(g, "loss.ov.empty");
  const int k = static_cast<int>(selected.size());
  Tensor neg_target(1, k);
  for (int i = 0; i < k; ++i) {
    const int idx = selected[static_cast<std::size_t>(i)];
    if (idx < 0 || idx >= static_cast<int>(g_iou.size()))
      throw std::invalid_argument("selected anchor index " + std::to_string(idx) +
                                  " is outside the overlap target list");
    neg_target.at(0, i) = -g_iou[static_cast<std::size_t>(idx)];
  }
  const Graph::NodeId picked = g.select_cols(overlap, selected);
  const Graph::NodeId diff = g.add_const(picked, std::move(neg_target));
  const Graph::NodeId sq = g.mul(diff, diff);
  return g.scale(g.sum(sq, "loss.ov.sum"), 1.0 / static_cast<double>(k));
}

Graph::NodeId regression_loss(Graph& g, Graph::NodeId dc, Graph::NodeId dw,
                              const std::vector<Anchor>& anchors,
                              const std::vector<GroundTruth>& gts, const MatchResult& match,
                              const std::vector<int>& positives, const AnchorSpec& spec,
                              bool encoded_targets, bool* empty) {
  if (empty) *empty = positives.empty();
  if (positives.empty()) return zero_scalar(g, "loss.reg.empty");
  const int p = static_cast<int>(positives.size());

  const Graph::NodeId dc_sel = g.select_cols(dc, positives);
  const Graph::NodeId dw_sel = g.select_cols(dw, positives);

  Graph::NodeId center_diff = 0;
  Graph::NodeId width_diff = 0;
  if (encoded_targets) {
    Tensor neg_tc(1, p);
    Tensor neg_tw(1, p);
    for (int i = 0; i < p; ++i) {
      const int idx = positives[static_cast<std::size_t>(i)];
      const int gi = match.gt_index[static_cast<std::size_t>(idx)];
      const auto [tc, tw] = encode_segment(anchors[static_cast<std::size_t>(idx)],
                                           gts[static_cast<std::size_t>(gi)].segment, spec);
      neg_tc.at(0, i) = -tc;
      neg_tw.at(0, i) = -tw;
    }
    center_diff = g.add_const(dc_sel, std::move(neg_tc));
    width_diff = g.add_const(dw_sel, std::move(neg_tw));
  } else {
    Tensor center_scale(1, p);  // alpha1 * a_w
    Tensor center_shift(1, p);  // a_c - g_c
    Tensor width_scale(1, p);   // a_w
    Tensor neg_gw(1, p);
    for (int i = 0; i < p; ++i) {
      const int idx = positives[static_cast<std::size_t>(i)];
      const int gi = match.gt_index[static_cast<std::size_t>(idx)];
      if (gi < 0)
        throw std::invalid_argument("anchor " + std::to_string(idx) +
                                    " is in the positive set but matched no ground truth");
      const Anchor& a = anchors[static_cast<std::size_t>(idx)];
      const Segment& gt = gts[static_cast<std::size_t>(gi)].segment;
      center_scale.at(0, i) = spec.alpha1 * a.width;
      center_shift.at(0, i) = a.center - gt.center;
      width_scale.at(0, i) = a.width;
      neg_gw.at(0, i) = -gt.width;
    }
    // phi_c - g_c = a_c + alpha1 * a_w * dc - g_c
    center_diff = g.add_const(g.mul_const(dc_sel, std::move(center_scale)),
                              std::move(center_shift));
    // phi_w - g_w = a_w * exp(alpha2 * dw) - g_w
    const Graph::NodeId phi_w = g.mul_const(g.exp(g.scale(dw_sel, spec.alpha2)),
                                            std::move(width_scale));
    width_diff = g.add_const(phi_w, std::move(neg_gw));
  }

  const Graph::NodeId per_anchor = g.add(g.smooth_l1(center_diff), g.smooth_l1(width_diff));
  return g.scale(g.sum(per_anchor, "loss.reg.sum"), 1.0 / static_cast<double>(p));
}

Graph::NodeId weighted_total(Graph& g, Graph::NodeId cls_main,
                             std::optional<Graph::NodeId> cls_branch, Graph::NodeId reg_main,
                             std::optional<Graph::NodeId> reg_branch, Graph::NodeId ov_main,
                             std::optional<Graph::NodeId> ov_branch, const LossWeights& weights) {
  weights.validate();
  const auto group = [&g, &weights](Graph::NodeId main, std::optional<Graph::NodeId> branch) {
    if (!branch) return main;
    return g.add(g.scale(main, weights.omega), g.scale(*branch, 1.0 - weights.omega));
  };
  const Graph::NodeId cls = group(cls_main, cls_branch);
  const Graph::NodeId reg = group(reg_main, reg_branch);
  const Graph::NodeId ov = group(ov_main, ov_branch);
  return g.add(g.add(g.scale(cls, weights.alpha), g.scale(reg, weights.beta)),
               g.scale(ov, weights.gamma));
}

LossNodes build_losses(Graph& g, const Network& net, const Network::Forward& f,
                       const std::vector<GroundTruth>& gts, const MatchResult& match,
                       const MiningResult& mining, const LossWeights& weights,
                       bool encoded_targets) {
  weights.validate();
  const std::vector<int> selected = mining.selected();
  const std::vector<Anchor>& anchors = net.anchors();
  const AnchorSpec& spec = net.config().anchors;

  LossNodes out;
  out.report.num_positives = static_cast<int>(mining.positives.size());
  out.report.num_negatives = static_cast<int>(mining.negatives.size());

  bool cls_empty = false;
  bool reg_empty = false;
  const Graph::NodeId cls_m =
      classification_loss(g, *f.main.probs, match.labels, selected, &cls_empty);
  const Graph::NodeId reg_m = regression_loss(g, *f.main.dc, *f.main.dw, anchors, gts, match,
                                              mining.positives, spec, encoded_targets, &reg_empty);
  const Graph::NodeId ov_m = overlap_loss(g, *f.main.overlap, match.g_iou, selected);
  out.report.classification_empty = cls_empty;
  out.report.regression_empty = reg_empty;

  std::optional<Graph::NodeId> cls_b;
  std::optional<Graph::NodeId> reg_b;
  std::optional<Graph::NodeId> ov_b;
  if (net.has_cls_term())
    cls_b = classification_loss(g, f.fused.probs, match.labels, selected);
  if (net.has_prop_term()) {
    reg_b = regression_loss(g, f.fused.dc, f.fused.dw, anchors, gts, match, mining.positives,
                            spec, encoded_targets);
    ov_b = overlap_loss(g, f.fused.overlap, match.g_iou, selected);
  }

  out.total = weighted_total(g, cls_m, cls_b, reg_m, reg_b, ov_m, ov_b, weights);

  out.report.cls_main = g.scalar(cls_m);
  out.report.reg_main = g.scalar(reg_m);
  out.report.ov_main = g.scalar(ov_m);
  if (cls_b) out.report.cls_branch = g.scalar(*cls_b);
  if (reg_b) out.report.reg_branch = g.scalar(*reg_b);
  if (ov_b) out.report.ov_branch = g.scalar(*ov_b);
  out.report.total = g.scalar(out.total);
  return out;
}

}  // namespace tadet
