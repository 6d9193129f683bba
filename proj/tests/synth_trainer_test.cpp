#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "tadet/dataset.hpp"
#include "tadet/errors.hpp"
#include "tadet/network.hpp"
#include "tadet/synth.hpp"
#include "tadet/trainer.hpp"

using tadet::AblationMode;
using tadet::Dataset;
using tadet::GroundTruth;
using tadet::Network;
using tadet::NetworkConfig;
using tadet::SyntheticSpec;
using tadet::TrainConfig;
using tadet::Window;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.num_videos = 12;
  s.window_length = 16;
  s.feature_dim = 4;
  s.num_classes = 2;
  s.min_actions = 1;
  s.max_actions = 2;
  s.min_width = 0.2;
  s.max_width = 0.45;
  s.noise_level = 0.1;
  s.seed = 5;
  s.id_prefix = "unit";
  return s;
}

NetworkConfig matching_network(const SyntheticSpec& s) {
  NetworkConfig c;
  c.input_dim = s.feature_dim;
  c.window_length = s.window_length;
  c.base_channels = 6;
  c.num_classes = s.num_classes;
  c.base_conv1_stride = 1;
  c.base_conv2_stride = 1;
  c.anchors.layer_lengths = {2, 1};
  c.anchors.ratios = {0.75, 1.5};
  return c;
}

}  // namespace

TEST_CASE("synthetic spec validation") {
  SyntheticSpec ok = small_spec();
  CHECK_NOTHROW(ok.validate());
  SyntheticSpec bad = small_spec();
  bad.feature_dim = 2;  // motifs need three channels
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_spec();
  bad.min_width = 0.5;
  bad.max_width = 0.4;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_spec();
  bad.max_width = 1.2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_spec();
  bad.min_actions = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_spec();
  bad.min_actions = 0;  // background-only windows are allowed
  CHECK_NOTHROW(bad.validate());
}

TEST_CASE("motif channels are distinct and in range") {
  for (int d : {3, 4, 16, 37}) {
    for (int cls = 1; cls <= 6; ++cls) {
      const std::vector<int> ch = tadet::motif_channels(cls, d);
      REQUIRE(ch.size() == 3);
      const std::set<int> uniq(ch.begin(), ch.end());
      CHECK(uniq.size() == 3);
      for (int c : ch) {
        CHECK(c >= 0);
        CHECK(c < d);
      }
    }
  }
  // Different classes leave different footprints on a wide feature space.
  CHECK(tadet::motif_channels(1, 16) != tadet::motif_channels(2, 16));
}

TEST_CASE("motif ramp rises, holds, and falls") {
  CHECK(tadet::motif_ramp(-0.1) == 0.0);
  CHECK(tadet::motif_ramp(0.0) == 0.0);
  CHECK(tadet::motif_ramp(0.1) == doctest::Approx(0.5));
  CHECK(tadet::motif_ramp(0.2) == doctest::Approx(1.0));
  CHECK(tadet::motif_ramp(0.5) == doctest::Approx(1.0));
  CHECK(tadet::motif_ramp(0.8) == doctest::Approx(1.0));
  CHECK(tadet::motif_ramp(0.9) == doctest::Approx(0.5));
  CHECK(tadet::motif_ramp(1.1) == 0.0);
}

TEST_CASE("synthetic generation is deterministic and windows are independent") {
  const SyntheticSpec spec = small_spec();
  const Dataset a = tadet::generate_synthetic(spec);
  const Dataset b = tadet::generate_synthetic(spec);
  REQUIRE(a.windows.size() == 12);
  CHECK(a.class_names == std::vector<std::string>{"class_1", "class_2"});
  for (std::size_t i = 0; i < a.windows.size(); ++i) {
    CHECK(a.windows[i].features.data() == b.windows[i].features.data());
    CHECK(a.windows[i].actions.size() == b.windows[i].actions.size());
  }

  // Generating fewer videos reproduces the same leading windows.
  SyntheticSpec fewer = spec;
  fewer.num_videos = 5;
  const Dataset c = tadet::generate_synthetic(fewer);
  for (std::size_t i = 0; i < c.windows.size(); ++i) {
    CHECK(c.windows[i].features.data() == a.windows[i].features.data());
  }

  SyntheticSpec reseeded = spec;
  reseeded.seed = 6;
  const Dataset d = tadet::generate_synthetic(reseeded);
  CHECK(d.windows[0].features.data() != a.windows[0].features.data());
}

TEST_CASE("synthetic windows carry consistent metadata") {
  const SyntheticSpec spec = small_spec();
  const Dataset data = tadet::generate_synthetic(spec);
  for (std::size_t i = 0; i < data.windows.size(); ++i) {
    const Window& w = data.windows[i];
    CHECK(w.video_id == ("unit_" + std::string(i < 10 ? "000" : "00") + std::to_string(i)));
    CHECK(w.stride_seconds == spec.frame_stride_seconds);
    CHECK(w.start_seconds ==
          doctest::Approx(static_cast<double>(i) * spec.window_length *
                          spec.frame_stride_seconds));
    CHECK(w.features.channels() == spec.feature_dim);
    CHECK(w.features.length() == spec.window_length);
    CHECK(w.features.all_finite());

    REQUIRE(!w.actions.empty());
    CHECK(w.actions.size() <= static_cast<std::size_t>(spec.max_actions));
    for (const GroundTruth& gt : w.actions) {
      CHECK(gt.class_id >= 1);
      CHECK(gt.class_id <= spec.num_classes);
      CHECK(gt.segment.width >= spec.min_width);
      CHECK(gt.segment.width <= spec.max_width);
      CHECK(gt.segment.start() >= 0.0);
      CHECK(gt.segment.end() <= 1.0);
    }
    // Sorted by start and pairwise disjoint.
    for (std::size_t j = 1; j < w.actions.size(); ++j) {
      CHECK(w.actions[j - 1].segment.start() <= w.actions[j].segment.start());
      CHECK(w.actions[j - 1].segment.end() <= w.actions[j].segment.start() + 1e-12);
    }
  }
}

TEST_CASE("noiseless windows contain exactly the motif") {
  SyntheticSpec spec = small_spec();
  spec.noise_level = 0.0;
  spec.num_videos = 6;
  const Dataset data = tadet::generate_synthetic(spec);

  for (const Window& w : data.windows) {
    const int T = w.features.length();
    for (int t = 0; t < T; ++t) {
      const double u = (t + 0.5) / T;
      const GroundTruth* inside = nullptr;
      for (const GroundTruth& gt : w.actions) {
        if (u >= gt.segment.start() && u < gt.segment.end()) {
          inside = &gt;
          break;
        }
      }
      for (int c = 0; c < w.features.channels(); ++c) {
        double expected = 0.0;
        if (inside != nullptr) {
          const std::vector<int> ch = tadet::motif_channels(inside->class_id, spec.feature_dim);
          for (int slot = 0; slot < 3; ++slot) {
            if (ch[static_cast<std::size_t>(slot)] == c) {
              const double rel = (u - inside->segment.start()) / inside->segment.width;
              expected = tadet::motif_value(spec, slot, rel);
            }
          }
        }
        CHECK(std::abs((w.features.at(c, t)) - (expected)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("train config validation") {
  TrainConfig ok;
  CHECK_NOTHROW(ok.validate());
  TrainConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = TrainConfig{};
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = TrainConfig{};
  bad.match_threshold = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = TrainConfig{};
  bad.negative_ratio = -0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("training reduces the loss and is reproducible") {
  const SyntheticSpec spec = small_spec();
  const Dataset data = tadet::generate_synthetic(spec);
  const NetworkConfig ncfg = matching_network(spec);

  TrainConfig tc;
  tc.epochs = 6;
  tc.batch_size = 4;
  tc.learning_rate = 5e-3;
  tc.seed = 9;
  tc.mode = AblationMode::kFull;

  std::vector<double> totals;
  Network net(ncfg, AblationMode::kFull, 1234);
  const int steps = tadet::train(net, data.windows, tc,
                                 [&](const tadet::StepRecord& r) { totals.push_back(r.report.total); });
  CHECK(steps == 6 * 3);  // 12 windows in batches of 4
  REQUIRE(totals.size() == static_cast<std::size_t>(steps));

  // Compare epoch-sized windows rather than single steps; individual batches
  // are noisy.
  const auto mean_of = [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += totals[i];
    return s / static_cast<double>(hi - lo);
  };
  const double head = mean_of(0, 3);
  const double tail = mean_of(totals.size() - 3, totals.size());
  CHECK(std::isfinite(head));
  CHECK(tail < head);

  // Same seeds, same trajectory.
  std::vector<double> totals2;
  Network net2(ncfg, AblationMode::kFull, 1234);
  tadet::train(net2, data.windows, tc,
               [&](const tadet::StepRecord& r) { totals2.push_back(r.report.total); });
  CHECK(totals == totals2);
  CHECK(net.params().value("main.head1.w").data() == net2.params().value("main.head1.w").data());
}

TEST_CASE("training records sensible step metadata") {
  const SyntheticSpec spec = small_spec();
  const Dataset data = tadet::generate_synthetic(spec);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 5;  // 12 windows: batches of 5, 5, 2
  tc.learning_rate = 1e-3;
  tc.mode = AblationMode::kMainOnly;

  Network net(matching_network(spec), AblationMode::kMainOnly, 42);
  std::vector<tadet::StepRecord> records;
  std::vector<int> epochs_seen;
  const int steps = tadet::train(
      net, data.windows, tc, [&](const tadet::StepRecord& r) { records.push_back(r); },
      [&](int epoch) { epochs_seen.push_back(epoch); });

  CHECK(steps == 6);
  REQUIRE(records.size() == 6);
  CHECK(records.front().step == 1);
  CHECK(records.back().step == 6);
  CHECK(records.front().epoch == 1);
  CHECK(records.back().epoch == 2);
  CHECK(epochs_seen == std::vector<int>{1, 2});
  for (const tadet::StepRecord& r : records) {
    CHECK(r.report.num_positives > 0);
    CHECK(r.report.num_negatives > 0);
    CHECK(r.report.cls_branch == 0.0);  // no branch terms in main_only
    CHECK(std::isfinite(r.report.total));
  }
}

TEST_CASE("trainer rejects a network whose mode disagrees") {
  const SyntheticSpec spec = small_spec();
  const Dataset data = tadet::generate_synthetic(spec);
  TrainConfig tc;
  tc.mode = AblationMode::kFull;
  Network net(matching_network(spec), AblationMode::kMainOnly, 1);
  CHECK_THROWS_AS(tadet::train(net, data.windows, tc), std::invalid_argument);
}

TEST_CASE("trainer reports divergence with the offending tensor") {
  const SyntheticSpec spec = small_spec();
  const Dataset data = tadet::generate_synthetic(spec);
  TrainConfig tc;
  tc.epochs = 40;
  tc.batch_size = 12;
  tc.learning_rate = 1e6;  // guaranteed blow-up
  tc.mode = AblationMode::kMainOnly;

  Network net(matching_network(spec), AblationMode::kMainOnly, 3);
  CHECK_THROWS_AS(tadet::train(net, data.windows, tc), tadet::DivergenceError);
  Network net2(matching_network(spec), AblationMode::kMainOnly, 3);
  try {
    tadet::train(net2, data.windows, tc);
  } catch (const tadet::DivergenceError& e) {
    CHECK_FALSE(e.tensor_name.empty());
  }
}

TEST_CASE("window coordinate conversions round-trip") {
  Window w;
  w.start_seconds = 12.0;
  w.stride_seconds = 0.5;
  w.features = tadet::Tensor(2, 8);
  CHECK(w.span_seconds() == doctest::Approx(4.0));
  CHECK(w.to_seconds(0.0) == doctest::Approx(12.0));
  CHECK(w.to_seconds(1.0) == doctest::Approx(16.0));
  CHECK(w.to_normalized(w.to_seconds(0.37)) == doctest::Approx(0.37));
}
