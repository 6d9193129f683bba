#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tadet/config.hpp"
#include "tadet/dataset.hpp"
#include "tadet/eval.hpp"

namespace tadet {

struct GradCheckBlock {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckResult {
  std::vector<GradCheckBlock> blocks;  // one per parameter block, name order
  std::string worst_block;
  double worst_error = 0.0;
  double tolerance = 0.0;
  std::size_t param_count = 0;
  bool pass = false;
};

inline constexpr std::size_t kGradCheckParamLimit = 5000;

// Compares recorded gradients against central finite differences over every
// parameter scalar of a small network in full mode. Matching and mining are
// frozen at the unperturbed forward pass so the objective is smooth around
// the check point. corrupt_block, when nonempty, biases that block's recorded
// gradient first (a negative control for tests). Throws ParseError if the
// config exceeds the parameter budget.
GradCheckResult run_gradcheck(const RunConfig& cfg, double fd_step = 1e-5,
                              double tolerance = 1e-4, const std::string& corrupt_block = "");

struct AblationRow {
  AblationMode mode = AblationMode::kMainOnly;
  double map_at_half = 0.0;
  std::map<double, double> map_by_threshold;
};

// Ground truths of a dataset in seconds, as the evaluator consumes them.
std::vector<GtInstance> dataset_ground_truth(const Dataset& data);

// Trains each mode from the same initial seed on the same data, evaluates on
// the held-out windows, and returns one row per mode in the fixed order
// main_only, main+prop, main+cls, refinement, full.
std::vector<AblationRow> run_ablation(const RunConfig& cfg, const Dataset& train_data,
                                      const Dataset& eval_data,
                                      const std::function<void(const AblationRow&)>& on_row = {});

}  // namespace tadet
