#pragma once

#include <optional>
#include <vector>

#include "tadet/anchors.hpp"
#include "tadet/graph.hpp"
#include "tadet/network.hpp"

namespace tadet {

struct LossWeights {
  double alpha = 1.0;
  double beta = 10.0;
  double gamma = 10.0;
  double omega = 2.0 / 3.0;

  void validate() const;
};

// Scalar values of every objective term, as logged per training step.
// *_branch terms are zero (and unused) in modes without that branch.
struct LossReport {
  double cls_main = 0.0;
  double cls_branch = 0.0;
  double reg_main = 0.0;
  double reg_branch = 0.0;
  double ov_main = 0.0;
  double ov_branch = 0.0;
  double total = 0.0;
  int num_positives = 0;
  int num_negatives = 0;
  bool classification_empty = false;  // mining selected nothing
  bool regression_empty = false;      // no positive anchors
};

struct LossNodes {
  Graph::NodeId total = 0;
  LossReport report;
};

// Mean over the selected anchors of -log p[target]. Targets come from
// match labels; negatives train toward the background row 0.
Graph::NodeId classification_loss(Graph& g, Graph::NodeId probs, const std::vector<int>& labels,
                                  const std::vector<int>& selected, bool* empty = nullptr);

// Mean squared error between predicted overlap and the matched IoU over the
// selected anchors.
Graph::NodeId overlap_loss(Graph& g, Graph::NodeId overlap, const std::vector<double>& g_iou,
                           const std::vector<int>& selected, bool* empty = nullptr);

// Mean over positive anchors of smooth-L1 on center and width. By default the
// offsets are decoded into segment coordinates and regressed against the
// matched ground truth directly; with encoded_targets the raw offsets are
// regressed against the encoded ground truth instead.
Graph::NodeId regression_loss(Graph& g, Graph::NodeId dc, Graph::NodeId dw,
                              const std::vector<Anchor>& anchors,
                              const std::vector<GroundTruth>& gts, const MatchResult& match,
                              const std::vector<int>& positives, const AnchorSpec& spec,
                              bool encoded_targets, bool* empty = nullptr);

// alpha * cls + beta * reg + gamma * ov, where each group blends main and
// branch terms as omega * main + (1 - omega) * branch. A group without a
// branch term uses its main term alone.
Graph::NodeId weighted_total(Graph& g, Graph::NodeId cls_main,
                             std::optional<Graph::NodeId> cls_branch, Graph::NodeId reg_main,
                             std::optional<Graph::NodeId> reg_branch, Graph::NodeId ov_main,
                             std::optional<Graph::NodeId> ov_branch, const LossWeights& weights);

// Builds the complete objective for one window. Main terms read the raw main
// stream outputs; branch terms read the fused outputs. Which branch terms
// exist follows the network's ablation mode.
LossNodes build_losses(Graph& g, const Network& net, const Network::Forward& f,
                       const std::vector<GroundTruth>& gts, const MatchResult& match,
                       const MiningResult& mining, const LossWeights& weights,
                       bool encoded_targets = false);

}  // namespace tadet
