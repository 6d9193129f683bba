#include "tadet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tadet/errors.hpp"
#include "tadet/rng.hpp"

namespace tadet {

namespace {

// Stream labels for the deterministic per-purpose seed derivations.
constexpr std::uint64_t kShuffleStream = 0xE90C4;

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning_rate must be finite and > 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(match_threshold > 0.0 && match_threshold < 1.0))
    throw std::invalid_argument("match_threshold must lie in (0, 1)");
  if (!(negative_ratio >= 0.0) || !std::isfinite(negative_ratio))
    throw std::invalid_argument("negative_ratio must be finite and >= 0");
  weights.validate();
}

int train(Network& net, const std::vector<Window>& windows, const TrainConfig& cfg,
          const StepCallback& on_step, const EpochCallback& on_epoch) {
  cfg.validate();
  if (windows.empty()) throw std::invalid_argument("training needs at least one window");
  if (net.mode() != cfg.mode)
    throw std::invalid_argument("network mode " + to_string(net.mode()) +
                                " does not match the configured mode " + to_string(cfg.mode));

  std::vector<MatchResult> matches;
  matches.reserve(windows.size());
  for (const Window& w : windows)
    matches.push_back(match_anchors(net.anchors(), w.actions, cfg.match_threshold));

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);

  int step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(cfg.seed, kShuffleStream, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const double inv_count = 1.0 / static_cast<double>(end - begin);
      ++step;

      LossReport avg;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t idx = order[k];
        const Window& w = windows[idx];

        Graph g;
        Network::Forward f = net.forward(g, w.features);
        const MiningResult mining = hard_negative_mining(
            matches[idx], g.value(*f.main.overlap).data(), cfg.negative_ratio,
            mix_seed(cfg.seed, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(idx)));
        const LossNodes losses = build_losses(g, net, f, w.actions, matches[idx], mining,
                                              cfg.weights, cfg.encoded_targets);
        if (!std::isfinite(losses.report.total))
          throw DivergenceError(g.first_non_finite().value_or("total loss"));
        g.backward(losses.total, inv_count);

        avg.cls_main += inv_count * losses.report.cls_main;
        avg.cls_branch += inv_count * losses.report.cls_branch;
        avg.reg_main += inv_count * losses.report.reg_main;
        avg.reg_branch += inv_count * losses.report.reg_branch;
        avg.ov_main += inv_count * losses.report.ov_main;
        avg.ov_branch += inv_count * losses.report.ov_branch;
        avg.total += inv_count * losses.report.total;
        avg.num_positives += losses.report.num_positives;
        avg.num_negatives += losses.report.num_negatives;
        avg.classification_empty |= losses.report.classification_empty;
        avg.regression_empty |= losses.report.regression_empty;
      }

      adam_step(net.params(), AdamConfig{cfg.learning_rate});
      if (on_step) on_step(StepRecord{step, epoch, avg});
    }
    if (on_epoch) on_epoch(epoch);
  }
  return step;
}

}  // namespace tadet
