#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tadet/anchors.hpp"
#include "tadet/eval.hpp"
#include "tadet/infer.hpp"
#include "tadet/network.hpp"
#include "tadet/rng.hpp"
#include "tadet/synth.hpp"

using tadet::Detection;
using tadet::GtInstance;
using tadet::InferConfig;
using tadet::Network;
using tadet::NetworkConfig;
using tadet::Rng;
using tadet::Segment;
using tadet::Window;

namespace {

NetworkConfig tiny_config() {
  NetworkConfig c;
  c.input_dim = 4;
  c.window_length = 16;
  c.base_channels = 6;
  c.num_classes = 2;
  c.base_conv1_stride = 1;
  c.base_conv2_stride = 1;
  c.anchors.layer_lengths = {2, 1};
  c.anchors.ratios = {0.75, 1.5};
  return c;
}

Window blank_window(const NetworkConfig& cfg, const std::string& id = "vid") {
  Window w;
  w.video_id = id;
  w.start_seconds = 0.0;
  w.stride_seconds = 0.1;
  w.features = tadet::Tensor(cfg.input_dim, cfg.window_length, 0.0);
  return w;
}

// Zeroes every parameter so head outputs are exactly the head biases.
void zero_params(Network& net) {
  for (const std::string& name : net.params().names()) {
    for (double& v : net.params().value(name).data()) v = 0.0;
  }
}

Detection det(const std::string& video, double start, double end, int cls, double score) {
  Detection d;
  d.video_id = video;
  d.segment = Segment::from_range(start, end);
  d.class_id = cls;
  d.score = score;
  return d;
}

GtInstance gt(const std::string& video, double start, double end, int cls) {
  GtInstance g;
  g.video_id = video;
  g.segment = Segment::from_range(start, end);
  g.class_id = cls;
  return g;
}

// Straight-line reference: greedy best-IoU matching in score order, then the
// area under the precision envelope.
double ap_reference(std::vector<Detection> dets, const std::vector<GtInstance>& gts,
                    double thr) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.video_id != b.video_id) return a.video_id < b.video_id;
    if (a.segment.start() != b.segment.start()) return a.segment.start() < b.segment.start();
    return a.segment.end() < b.segment.end();
  });
  std::vector<bool> used(gts.size(), false);
  std::vector<int> tp(dets.size(), 0);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    double best = 0.0;
    int best_j = -1;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (used[j] || gts[j].video_id != dets[i].video_id) continue;
      const double v = tadet::iou_1d(dets[i].segment, gts[j].segment);
      if (v > best) {
        best = v;
        best_j = static_cast<int>(j);
      }
    }
    if (best_j >= 0 && best >= thr) {
      used[static_cast<std::size_t>(best_j)] = true;
      tp[i] = 1;
    }
  }
  std::vector<double> mrec{0.0};
  std::vector<double> mpre{0.0};
  int hits = 0;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    hits += tp[i];
    mrec.push_back(static_cast<double>(hits) / static_cast<double>(gts.size()));
    mpre.push_back(static_cast<double>(hits) / static_cast<double>(i + 1));
  }
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i > 0; --i) {
    mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  }
  double ap = 0.0;
  for (std::size_t i = 1; i < mrec.size(); ++i) {
    ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  }
  return ap;
}

}  // namespace

TEST_CASE("infer config validation") {
  InferConfig ok;
  CHECK_NOTHROW(ok.validate());
  InferConfig bad;
  bad.nms_threshold = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = InferConfig{};
  bad.min_score = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("an all-zero network detects nothing") {
  const NetworkConfig cfg = tiny_config();
  Network net(cfg, tadet::AblationMode::kMainOnly, 1);
  zero_params(net);
  // Uniform class probabilities: the background row wins every argmax tie.
  const std::vector<Detection> dets = tadet::infer_window(net, blank_window(cfg), InferConfig{});
  CHECK(dets.empty());
}

TEST_CASE("head biases drive detections through decode, clip, and NMS") {
  const NetworkConfig cfg = tiny_config();
  Network net(cfg, tadet::AblationMode::kMainOnly, 1);
  zero_params(net);

  // Main heads emit 2 ratio blocks of 6 fields (3 class logits, overlap, dc,
  // dw). Boost the class-2 logit of ratio block 0 on both layers: every
  // ratio-0.75 anchor now predicts class 2 at identical confidence, with
  // zero offsets.
  net.params().value("main.head1.b").data()[2] = 5.0;
  net.params().value("main.head2.b").data()[2] = 5.0;

  Window w = blank_window(cfg);
  const std::vector<Detection> raw = tadet::infer_window(net, w, InferConfig{});
  REQUIRE(raw.size() == 3);  // two cells on layer 1, one on layer 2
  const double expect_score = std::exp(5.0) / (2.0 + std::exp(5.0));
  for (const Detection& d : raw) {
    CHECK(d.class_id == 2);
    CHECK(d.score == doctest::Approx(expect_score).epsilon(1e-12));
    CHECK(d.video_id == "vid");
  }
  // Anchor geometry in seconds over a 1.6 s window.
  CHECK(raw[0].segment.start() == doctest::Approx(0.1));
  CHECK(raw[0].segment.end() == doctest::Approx(0.7));
  CHECK(raw[1].segment.start() == doctest::Approx(0.9));
  CHECK(raw[1].segment.end() == doctest::Approx(1.5));
  CHECK(raw[2].segment.start() == doctest::Approx(0.2));
  CHECK(raw[2].segment.end() == doctest::Approx(1.4));

  // NMS at 0.2: the wide layer-2 anchor overlaps the first cell strongly and
  // is suppressed; the disjoint second cell survives.
  InferConfig ic;
  ic.nms_threshold = 0.2;
  const std::vector<Detection> kept = tadet::run_inference(net, {w}, ic);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].segment.start() == doctest::Approx(0.1));
  CHECK(kept[1].segment.start() == doctest::Approx(0.9));

  // A score floor above the bias-driven confidence removes everything.
  InferConfig strict;
  strict.min_score = 0.999;
  CHECK(tadet::infer_window(net, w, strict).empty());

  // Scoring with overlap halves the confidence (logistic of a zero logit).
  InferConfig with_ov;
  with_ov.score_with_overlap = true;
  const std::vector<Detection> scaled = tadet::infer_window(net, w, with_ov);
  REQUIRE(scaled.size() == 3);
  CHECK(scaled[0].score == doctest::Approx(0.5 * expect_score).epsilon(1e-12));
}

TEST_CASE("offset biases move the decoded segments") {
  const NetworkConfig cfg = tiny_config();
  Network net(cfg, tadet::AblationMode::kMainOnly, 1);
  zero_params(net);
  net.params().value("main.head1.b").data()[1] = 5.0;  // class 1, ratio block 0
  net.params().value("main.head1.b").data()[4] = 1.0;  // dc
  net.params().value("main.head2.b").data()[1] = -5.0; // keep layer 2 at background

  const std::vector<Detection> dets =
      tadet::infer_window(net, blank_window(cfg), InferConfig{});
  REQUIRE(dets.size() == 2);
  // Anchor (0.25, 0.375) shifted by 0.1 * 0.375: center 0.2875, in seconds
  // over the 1.6 s window.
  CHECK(dets[0].class_id == 1);
  CHECK(dets[0].segment.center == doctest::Approx(0.2875 * 1.6).epsilon(1e-9));
  CHECK(dets[0].segment.width == doctest::Approx(0.375 * 1.6).epsilon(1e-9));
}

TEST_CASE("nms keeps the best of duplicate detections") {
  std::vector<Detection> dets;
  dets.push_back(det("v", 1.0, 2.0, 1, 0.8));
  dets.push_back(det("v", 1.0, 2.0, 1, 0.9));
  const std::vector<Detection> kept = tadet::nms(dets, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == 0.9);
}

TEST_CASE("nms never crosses class or video boundaries") {
  std::vector<Detection> dets;
  dets.push_back(det("v", 1.0, 2.0, 1, 0.9));
  dets.push_back(det("v", 1.0, 2.0, 2, 0.8));   // other class
  dets.push_back(det("w", 1.0, 2.0, 1, 0.7));   // other video
  dets.push_back(det("v", 5.0, 6.0, 1, 0.6));   // disjoint
  const std::vector<Detection> kept = tadet::nms(dets, 0.2);
  CHECK(kept.size() == 4);
}

TEST_CASE("nms suppresses strictly above the threshold") {
  // IoU of [0,2] and [1,3] is exactly 1/3.
  std::vector<Detection> dets;
  dets.push_back(det("v", 0.0, 2.0, 1, 0.9));
  dets.push_back(det("v", 1.0, 3.0, 1, 0.8));
  CHECK(tadet::nms(dets, 1.0 / 3.0).size() == 2);
  CHECK(tadet::nms(dets, 0.33).size() == 1);
}

TEST_CASE("nms chain suppression is greedy, not transitive") {
  // b overlaps a (suppressed); c overlaps b but not a, so c survives.
  std::vector<Detection> dets;
  dets.push_back(det("v", 0.0, 1.0, 1, 0.9));   // a
  dets.push_back(det("v", 0.5, 1.5, 1, 0.8));   // b: IoU 1/3 with a
  dets.push_back(det("v", 1.2, 2.2, 1, 0.7));   // c: disjoint from a
  const std::vector<Detection> kept = tadet::nms(dets, 0.3);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].segment.start() == doctest::Approx(0.0));
  CHECK(kept[1].segment.start() == doctest::Approx(1.2));
}

TEST_CASE("nms matches a brute-force reference on random inputs") {
  Rng rng(808);
  for (int round = 0; round < 10; ++round) {
    std::vector<Detection> dets;
    const int n = 50;
    for (int i = 0; i < n; ++i) {
      const double w = rng.uniform(0.05, 0.5);
      const double c = rng.uniform(0.0, 3.0);
      dets.push_back(det(rng.uniform01() < 0.5 ? "a" : "b", c, c + w, rng.uniform_int(1, 2),
                         rng.uniform(0.01, 1.0)));
    }
    const double thr = rng.uniform(0.1, 0.6);
    const std::vector<Detection> kept = tadet::nms(dets, thr);

    // Reference: sort, then scan with explicit suppression flags.
    std::vector<Detection> sorted = dets;
    std::stable_sort(sorted.begin(), sorted.end(), [](const Detection& a, const Detection& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.segment.start() != b.segment.start()) return a.segment.start() < b.segment.start();
      if (a.class_id != b.class_id) return a.class_id < b.class_id;
      if (a.video_id != b.video_id) return a.video_id < b.video_id;
      return a.segment.end() < b.segment.end();
    });
    std::vector<Detection> expect;
    std::vector<bool> dead(sorted.size(), false);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (dead[i]) continue;
      expect.push_back(sorted[i]);
      for (std::size_t j = i + 1; j < sorted.size(); ++j) {
        if (dead[j] || sorted[j].video_id != sorted[i].video_id ||
            sorted[j].class_id != sorted[i].class_id) {
          continue;
        }
        if (tadet::iou_1d(sorted[i].segment, sorted[j].segment) > thr) dead[j] = true;
      }
    }
    REQUIRE(kept.size() == expect.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      CHECK(kept[i].score == expect[i].score);
      CHECK(kept[i].video_id == expect[i].video_id);
      CHECK(kept[i].segment.center == doctest::Approx(expect[i].segment.center));
    }
  }
}

TEST_CASE("run_inference orders output by video then score") {
  const NetworkConfig cfg = tiny_config();
  Network net(cfg, tadet::AblationMode::kMainOnly, 1);
  zero_params(net);
  net.params().value("main.head1.b").data()[2] = 5.0;
  net.params().value("main.head2.b").data()[8] = 3.0;  // ratio block 1, class 2

  std::vector<Window> windows;
  windows.push_back(blank_window(cfg, "zeta"));
  windows.push_back(blank_window(cfg, "alpha"));
  InferConfig ic;
  ic.nms_threshold = 0.9;  // keep nearly everything
  const std::vector<Detection> dets = tadet::run_inference(net, windows, ic);
  REQUIRE(dets.size() >= 4);
  for (std::size_t i = 1; i < dets.size(); ++i) {
    const bool video_ok = dets[i - 1].video_id < dets[i].video_id ||
                          (dets[i - 1].video_id == dets[i].video_id &&
                           dets[i - 1].score >= dets[i].score);
    CHECK(video_ok);
  }
  CHECK(dets.front().video_id == "alpha");
  CHECK(dets.back().video_id == "zeta");
}

TEST_CASE("average precision on the three-detection example") {
  const std::vector<GtInstance> gts = {gt("v", 0.0, 1.0, 1), gt("v", 10.0, 11.0, 1)};
  std::vector<Detection> dets;
  dets.push_back(det("v", 0.0, 1.0, 1, 0.9));    // hits the first action
  dets.push_back(det("v", 5.0, 6.0, 1, 0.8));    // pure false positive
  dets.push_back(det("v", 10.0, 11.0, 1, 0.7));  // hits the second action
  CHECK(tadet::average_precision(dets, gts, 0.5) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));

  // Reversing the scores of the hits does not change the hit pattern here.
  CHECK(ap_reference(dets, gts, 0.5) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("average precision corner cases") {
  const std::vector<GtInstance> gts = {gt("v", 0.0, 1.0, 1)};
  CHECK(tadet::average_precision({}, gts, 0.5) == 0.0);

  std::vector<Detection> perfect = {det("v", 0.0, 1.0, 1, 1.0)};
  CHECK(tadet::average_precision(perfect, gts, 0.5) == doctest::Approx(1.0));

  std::vector<Detection> wrong_video = {det("w", 0.0, 1.0, 1, 1.0)};
  CHECK(tadet::average_precision(wrong_video, gts, 0.5) == 0.0);

  CHECK_THROWS_AS(tadet::average_precision(perfect, {}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(tadet::average_precision(perfect, gts, 0.0), std::invalid_argument);

  // A second detection on an already-claimed action counts as a false
  // positive.
  std::vector<Detection> doubled = {det("v", 0.0, 1.0, 1, 0.9), det("v", 0.0, 1.0, 1, 0.8)};
  CHECK(tadet::average_precision(doubled, gts, 0.5) == doctest::Approx(1.0));
  const std::vector<GtInstance> two = {gt("v", 0.0, 1.0, 1), gt("v", 5.0, 6.0, 1)};
  // Both detections chase the same action: recall stalls at one half.
  CHECK(tadet::average_precision(doubled, two, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("detections match their highest-IoU ground truth") {
  // The first detection straddles two actions and must claim the one it
  // overlaps more, leaving the other for the weaker detection.
  const std::vector<GtInstance> gts = {gt("v", 0.0, 1.0, 1), gt("v", 0.8, 2.0, 1)};
  std::vector<Detection> dets;
  dets.push_back(det("v", 0.7, 2.0, 1, 0.9));  // IoU 0.15 with first, ~0.87 with second
  dets.push_back(det("v", 0.0, 1.1, 1, 0.8));  // claims the first
  CHECK(tadet::average_precision(dets, gts, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("average precision agrees with the reference on random scenarios") {
  Rng rng(515);
  for (int round = 0; round < 30; ++round) {
    std::vector<GtInstance> gts;
    const int num_gt = rng.uniform_int(1, 6);
    for (int j = 0; j < num_gt; ++j) {
      const double s = rng.uniform(0.0, 8.0);
      gts.push_back(gt(rng.uniform01() < 0.5 ? "a" : "b", s, s + rng.uniform(0.3, 2.0), 1));
    }
    std::vector<Detection> dets;
    const int num_det = rng.uniform_int(0, 12);
    for (int j = 0; j < num_det; ++j) {
      const double s = rng.uniform(0.0, 8.0);
      dets.push_back(det(rng.uniform01() < 0.5 ? "a" : "b", s, s + rng.uniform(0.3, 2.0), 1,
                         rng.uniform(0.01, 1.0)));
    }
    const double thr = rng.uniform(0.2, 0.7);
    CHECK(std::abs((tadet::average_precision(dets, gts, thr)) - (ap_reference(dets, gts, thr))) <= 1e-9);
  }
}

TEST_CASE("evaluate builds one row per threshold over ground-truth classes") {
  const std::vector<GtInstance> gts = {gt("v", 0.0, 1.0, 1), gt("v", 4.0, 5.0, 3)};
  std::vector<Detection> dets;
  dets.push_back(det("v", 0.0, 1.0, 1, 0.9));
  dets.push_back(det("v", 4.1, 5.0, 3, 0.8));   // IoU 0.9 with its action
  dets.push_back(det("v", 7.0, 8.0, 2, 0.99));  // class without ground truth

  const tadet::EvalResult r = tadet::evaluate(dets, gts, {0.5, 0.95});
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].threshold == 0.5);
  REQUIRE(r.rows[0].ap_by_class.size() == 2);  // class 2 excluded
  CHECK(r.rows[0].ap_by_class.at(1) == doctest::Approx(1.0));
  CHECK(r.rows[0].ap_by_class.at(3) == doctest::Approx(1.0));
  CHECK(r.rows[0].map == doctest::Approx(1.0));
  CHECK(r.map_at(0.5) == doctest::Approx(1.0));

  // At 0.95 the shaved class-3 detection no longer counts.
  CHECK(r.rows[1].ap_by_class.at(3) == doctest::Approx(0.0));
  CHECK(r.rows[1].map == doctest::Approx(0.5));

  CHECK_THROWS_AS(r.map_at(0.4), std::invalid_argument);
  CHECK_THROWS_AS(tadet::evaluate(dets, gts, {}), std::invalid_argument);
}

TEST_CASE("evaluation ignores detection input order") {
  Rng rng(99);
  std::vector<GtInstance> gts;
  for (int j = 0; j < 5; ++j) {
    const double s = j * 3.0;
    gts.push_back(gt("v", s, s + 1.0, 1 + (j % 2)));
  }
  std::vector<Detection> dets;
  for (int j = 0; j < 10; ++j) {
    const double s = rng.uniform(0.0, 14.0);
    dets.push_back(det("v", s, s + rng.uniform(0.5, 1.5), 1 + (j % 2), rng.uniform(0.1, 1.0)));
  }
  const tadet::EvalResult before = tadet::evaluate(dets, gts, tadet::kDefaultEvalThresholds);
  std::vector<Detection> shuffled = dets;
  std::reverse(shuffled.begin(), shuffled.end());
  const tadet::EvalResult after = tadet::evaluate(shuffled, gts, tadet::kDefaultEvalThresholds);
  for (std::size_t i = 0; i < before.rows.size(); ++i) {
    CHECK(before.rows[i].map == doctest::Approx(after.rows[i].map).epsilon(1e-12));
  }
}

TEST_CASE("interpolation mode is the envelope over all recall points") {
  CHECK(std::string(tadet::kApInterpolation) == "all_point_envelope");
  REQUIRE(tadet::kDefaultEvalThresholds.size() == 5);
  CHECK(tadet::kDefaultEvalThresholds.front() == 0.3);
  CHECK(tadet::kDefaultEvalThresholds.back() == 0.7);
}
