#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "tadet/anchors.hpp"
#include "tadet/rng.hpp"

using tadet::Anchor;
using tadet::AnchorSpec;
using tadet::GroundTruth;
using tadet::MatchResult;
using tadet::Rng;
using tadet::Segment;

namespace {

AnchorSpec small_spec() {
  AnchorSpec spec;
  spec.layer_lengths = {4};
  spec.ratios = {0.5, 0.75, 1.0, 1.5, 2.0};
  return spec;
}

// Reference IoU written independently of the library: intersection over the
// span between the outermost endpoints' overlap.
double iou_ref(const Segment& a, const Segment& b) {
  const double inter = std::max(0.0, std::min(a.end(), b.end()) - std::max(a.start(), b.start()));
  const double uni = std::max(a.end(), b.end()) - std::min(a.start(), b.start());
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

}  // namespace

TEST_CASE("segment construction") {
  const Segment s{0.5, 0.2};
  CHECK(s.start() == doctest::Approx(0.4));
  CHECK(s.end() == doctest::Approx(0.6));
  const Segment r = Segment::from_range(0.1, 0.7);
  CHECK(r.center == doctest::Approx(0.4));
  CHECK(r.width == doctest::Approx(0.6));
  CHECK_THROWS_AS(Segment::from_range(0.7, 0.7), std::invalid_argument);
  CHECK_THROWS_AS(Segment::from_range(0.7, 0.1), std::invalid_argument);
}

TEST_CASE("anchor layout counts and positions") {
  const AnchorSpec one = small_spec();
  const std::vector<Anchor> a1 = tadet::generate_anchors(one);
  CHECK(a1.size() == 20);

  AnchorSpec three;
  three.layer_lengths = {16, 8, 4};
  three.ratios = {0.5, 0.75, 1.0, 1.5, 2.0};
  const std::vector<Anchor> a3 = tadet::generate_anchors(three);
  CHECK(a3.size() == 140);
  CHECK(three.total_anchors() == 140);

  // Layer-major, then cell, then ratio.
  CHECK(a3[0].layer == 0);
  CHECK(a3[0].cell == 0);
  CHECK(a3[0].ratio == doctest::Approx(0.5));
  CHECK(a3[0].center == doctest::Approx(0.5 / 16.0));
  CHECK(a3[0].width == doctest::Approx(0.5 / 16.0));
  CHECK(a3[5].cell == 1);
  CHECK(a3[16 * 5].layer == 1);
  CHECK(a3[16 * 5].center == doctest::Approx(0.5 / 8.0));

  // A single-cell layer with ratio 1 covers the whole window.
  AnchorSpec unit;
  unit.layer_lengths = {1};
  unit.ratios = {1.0};
  const std::vector<Anchor> au = tadet::generate_anchors(unit);
  REQUIRE(au.size() == 1);
  CHECK(au[0].center == doctest::Approx(0.5));
  CHECK(au[0].width == doctest::Approx(1.0));
}

TEST_CASE("anchor spec validation") {
  AnchorSpec bad = small_spec();
  bad.ratios.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_spec();
  bad.layer_lengths = {4, 0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_spec();
  bad.ratios.push_back(-1.0);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_spec();
  bad.alpha1 = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("iou fixed cases") {
  CHECK(tadet::iou_1d({0.5, 0.2}, {0.5, 0.2}) == doctest::Approx(1.0));
  CHECK(tadet::iou_1d(Segment::from_range(0.0, 2.0), Segment::from_range(1.0, 3.0)) ==
        doctest::Approx(1.0 / 3.0));
  CHECK(tadet::iou_1d(Segment::from_range(0.0, 1.0), Segment::from_range(2.0, 3.0)) == 0.0);
  // Touching segments share no interior.
  CHECK(tadet::iou_1d(Segment::from_range(0.0, 1.0), Segment::from_range(1.0, 2.0)) == 0.0);
  // Containment.
  CHECK(tadet::iou_1d(Segment::from_range(0.0, 4.0), Segment::from_range(1.0, 2.0)) ==
        doctest::Approx(0.25));
}

TEST_CASE("iou agrees with the reference over random pairs") {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const Segment a{rng.uniform(0.0, 1.0), rng.uniform(0.01, 0.5)};
    const Segment b{rng.uniform(0.0, 1.0), rng.uniform(0.01, 0.5)};
    CHECK(tadet::iou_1d(a, b) == doctest::Approx(iou_ref(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("offset decode fixed cases") {
  const AnchorSpec spec = small_spec();
  Anchor a;
  a.center = 0.5;
  a.width = 0.2;

  const Segment id = tadet::decode_offsets(a, 0.0, 0.0, spec);
  CHECK(id.center == doctest::Approx(0.5));
  CHECK(id.width == doctest::Approx(0.2));

  const Segment shifted = tadet::decode_offsets(a, 1.0, 0.0, spec);
  CHECK(shifted.center == doctest::Approx(0.52));
  CHECK(shifted.width == doctest::Approx(0.2));

  const Segment widened = tadet::decode_offsets(a, 0.0, 1.0, spec);
  CHECK(widened.center == doctest::Approx(0.5));
  CHECK(widened.width == doctest::Approx(0.2 * std::exp(0.1)));
}

TEST_CASE("offset encode inverts decode") {
  const AnchorSpec spec = small_spec();
  Anchor a;
  a.center = 0.5;
  a.width = 0.2;
  const auto [dc, dw] = tadet::encode_segment(a, {0.52, 0.2}, spec);
  CHECK(dc == doctest::Approx(1.0));
  CHECK(std::abs((dw) - (0.0)) <= 1e-12);

  Rng rng(31337);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Anchor anchor;
    anchor.center = rng.uniform(0.05, 0.95);
    anchor.width = rng.uniform(0.02, 0.6);
    const double in_dc = rng.uniform(-2.0, 2.0);
    const double in_dw = rng.uniform(-2.0, 2.0);
    const Segment seg = tadet::decode_offsets(anchor, in_dc, in_dw, spec);
    const auto [out_dc, out_dw] = tadet::encode_segment(anchor, seg, spec);
    worst = std::max(worst, std::abs(out_dc - in_dc));
    worst = std::max(worst, std::abs(out_dw - in_dw));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("matching assigns each overlapping anchor to its best ground truth") {
  AnchorSpec spec;
  spec.layer_lengths = {8};
  spec.ratios = {1.0, 2.0};
  const std::vector<Anchor> anchors = tadet::generate_anchors(spec);

  std::vector<GroundTruth> gts;
  gts.push_back({Segment::from_range(0.0, 0.25), 1});
  gts.push_back({Segment::from_range(0.5, 0.75), 2});

  const MatchResult m = tadet::match_anchors(anchors, gts, 0.5);
  REQUIRE(m.labels.size() == anchors.size());
  bool saw_pos = false;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    double best = 0.0;
    int best_gt = -1;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double v = tadet::iou_1d(anchors[i].segment(), gts[j].segment);
      if (v > best) {  // first ground truth wins ties
        best = v;
        best_gt = static_cast<int>(j);
      }
    }
    CHECK(m.g_iou[i] == doctest::Approx(best));
    if (best >= 0.5) {  // inclusive: an anchor exactly at the threshold is positive
      saw_pos = true;
      CHECK(m.gt_index[i] == best_gt);
      CHECK(m.labels[i] == gts[static_cast<std::size_t>(best_gt)].class_id);
    } else {
      CHECK(m.gt_index[i] == -1);
      CHECK(m.labels[i] == 0);
    }
  }
  CHECK(saw_pos);
  CHECK(m.positives().size() > 0);
}

TEST_CASE("matching against randomized layouts matches brute force") {
  AnchorSpec spec;
  spec.layer_lengths = {16, 8};
  spec.ratios = {0.5, 1.0, 1.5};
  const std::vector<Anchor> anchors = tadet::generate_anchors(spec);

  Rng rng(555);
  for (int round = 0; round < 20; ++round) {
    std::vector<GroundTruth> gts;
    const int n = rng.uniform_int(1, 4);
    for (int j = 0; j < n; ++j) {
      const double w = rng.uniform(0.05, 0.4);
      const double c = rng.uniform(w / 2.0, 1.0 - w / 2.0);
      gts.push_back({Segment{c, w}, rng.uniform_int(1, 5)});
    }
    const MatchResult m = tadet::match_anchors(anchors, gts, 0.5);
    int positives = 0;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      double best = 0.0;
      for (const GroundTruth& gt : gts) {
        best = std::max(best, tadet::iou_1d(anchors[i].segment(), gt.segment));
      }
      CHECK(m.g_iou[i] == doctest::Approx(best).epsilon(1e-12));
      if (m.labels[i] != 0) {
        ++positives;
        CHECK(best >= 0.5);
      }
    }
    CHECK(static_cast<int>(m.positives().size()) == positives);
  }
}

TEST_CASE("hard negative mining keeps positives and fills a negative quota") {
  // Fourteen anchors: indices 0..3 positive, the rest negative. Negatives at
  // 7 and 9 look confidently foreground, so they must be picked first.
  MatchResult m;
  const int n = 14;
  m.labels.assign(n, 0);
  m.gt_index.assign(n, -1);
  m.g_iou.assign(n, 0.1);
  for (int i = 0; i < 4; ++i) {
    m.labels[static_cast<std::size_t>(i)] = 1;
    m.gt_index[static_cast<std::size_t>(i)] = 0;
    m.g_iou[static_cast<std::size_t>(i)] = 0.8;
  }
  std::vector<double> predicted(n, 0.1);
  predicted[9] = 0.9;
  predicted[7] = 0.7;

  const tadet::MiningResult r = tadet::hard_negative_mining(m, predicted, 1.0, 42);
  CHECK(r.positives == std::vector<int>{0, 1, 2, 3});
  REQUIRE(r.negatives.size() == 4);
  // Hard negatives first, highest predicted overlap first.
  CHECK(r.negatives[0] == 9);
  CHECK(r.negatives[1] == 7);
  // Remaining two drawn from the easy pool.
  const std::set<int> easy(r.negatives.begin() + 2, r.negatives.end());
  CHECK(easy.size() == 2);
  for (int idx : easy) {
    CHECK(m.labels[idx] == 0);
    CHECK(predicted[idx] == 0.1);
  }
  CHECK(r.selected().size() == 8);
}

TEST_CASE("mining respects the quota when hard negatives abound") {
  MatchResult m;
  const int n = 50;
  m.labels.assign(n, 0);
  m.gt_index.assign(n, -1);
  m.g_iou.assign(n, 0.0);
  for (int i = 0; i < 3; ++i) m.labels[static_cast<std::size_t>(i)] = 2;
  std::vector<double> predicted(n, 0.95);  // every negative looks hard

  const tadet::MiningResult r = tadet::hard_negative_mining(m, predicted, 1.0, 7);
  CHECK(r.positives.size() == 3);
  CHECK(r.negatives.size() == 3);
  // Equal confidence breaks ties by index.
  CHECK(r.negatives == std::vector<int>{3, 4, 5});
}

TEST_CASE("mining with no positives falls back to top-overlap negatives") {
  MatchResult m;
  const int n = 20;
  m.labels.assign(n, 0);
  m.gt_index.assign(n, -1);
  m.g_iou.assign(n, 0.0);
  std::vector<double> predicted(n, 0.0);
  for (int i = 0; i < n; ++i) predicted[static_cast<std::size_t>(i)] = i * 0.01;

  const tadet::MiningResult r = tadet::hard_negative_mining(m, predicted, 1.0, 3);
  CHECK(r.positives.empty());
  REQUIRE(r.negatives.size() == 8);
  CHECK(r.negatives[0] == 19);  // highest predicted overlap first
  CHECK(r.negatives[7] == 12);
}

TEST_CASE("mining is deterministic in its seed") {
  MatchResult m;
  const int n = 30;
  m.labels.assign(n, 0);
  m.gt_index.assign(n, -1);
  m.g_iou.assign(n, 0.0);
  m.labels[0] = 1;
  m.labels[1] = 1;
  std::vector<double> predicted(n, 0.2);

  const tadet::MiningResult a = tadet::hard_negative_mining(m, predicted, 2.0, 99);
  const tadet::MiningResult b = tadet::hard_negative_mining(m, predicted, 2.0, 99);
  CHECK(a.negatives == b.negatives);
  CHECK(a.negatives.size() == 4);  // round(2.0 * 2 positives)

  const tadet::MiningResult c = tadet::hard_negative_mining(m, predicted, 2.0, 100);
  CHECK(c.negatives.size() == 4);
}
