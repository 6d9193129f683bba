#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "tadet/eval.hpp"
#include "tadet/infer.hpp"
#include "tadet/network.hpp"
#include "tadet/synth.hpp"
#include "tadet/trainer.hpp"

namespace tadet {

// Everything a run needs, resolved from defaults plus one config file.
// The synthetic dimensions (window length, feature dim, class count) always
// mirror the network section so generated data and network agree.
struct RunConfig {
  NetworkConfig network;
  TrainConfig train;
  SyntheticSpec synth;
  int synth_eval_videos = 50;
  InferConfig infer;
  std::vector<double> eval_thresholds = kDefaultEvalThresholds;

  void validate() const;

  // Resolved value of every key, section by section; embedded in artifact
  // headers so any output can be regenerated from its own header.
  nlohmann::ordered_json echo() const;

  std::uint64_t network_init_seed() const;
  // Spec for the held-out synthetic evaluation set: same dimensions, its own
  // derived seed and id prefix.
  SyntheticSpec eval_synth_spec() const;
};

RunConfig default_run_config();

// Sectioned key = value text. '#' or ';' lines are comments; unknown sections
// and keys are errors naming the line.
RunConfig parse_run_config_text(const std::string& text, const std::string& origin);
RunConfig parse_run_config(const std::string& path);

}  // namespace tadet
