#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tadet/dataset.hpp"
#include "tadet/losses.hpp"
#include "tadet/network.hpp"

namespace tadet {

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 1e-4;
  int batch_size = 48;
  std::uint64_t seed = 7;
  LossWeights weights;
  double match_threshold = 0.5;
  double negative_ratio = 1.0;
  bool encoded_targets = false;
  AblationMode mode = AblationMode::kFull;

  void validate() const;
};

// One optimizer step: losses averaged over the batch windows, mining counts
// summed across them.
struct StepRecord {
  int step = 0;
  int epoch = 0;
  LossReport report;
};

using StepCallback = std::function<void(const StepRecord&)>;
using EpochCallback = std::function<void(int epoch)>;

// Runs the full loop: shuffle per epoch, forward + mine + losses per window,
// batch-averaged gradients, one Adam step per batch. Throws DivergenceError
// naming the first non-finite tensor if the loss leaves the reals. Returns
// the number of optimizer steps taken.
int train(Network& net, const std::vector<Window>& windows, const TrainConfig& cfg,
          const StepCallback& on_step = {}, const EpochCallback& on_epoch = {});

}  // namespace tadet
