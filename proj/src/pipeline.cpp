#include "tadet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tadet/errors.hpp"
#include "tadet/infer.hpp"
#include "tadet/rng.hpp"
#include "tadet/synth.hpp"
#include "tadet/trainer.hpp"

namespace tadet {

namespace {

double loss_value(Network& net, const Window& window, const MatchResult& match,
                  const MiningResult& mining, const TrainConfig& tc) {
  Graph g;
  Network::Forward f = net.forward(g, window.features);
  const LossNodes ln =
      build_losses(g, net, f, window.actions, match, mining, tc.weights, tc.encoded_targets);
  return g.scalar(ln.total);
}

}  // namespace

GradCheckResult run_gradcheck(const RunConfig& cfg, double fd_step, double tolerance,
                              const std::string& corrupt_block) {
  if (!(fd_step > 0.0) || !(tolerance > 0.0))
    throw std::invalid_argument("finite-difference step and tolerance must be > 0");

  Network net(cfg.network, AblationMode::kFull, cfg.network_init_seed());
  ParamStore& store = net.params();
  const std::size_t param_count = store.total_scalars();
  if (param_count >= kGradCheckParamLimit)
    throw ParseError("gradcheck needs a network under " + std::to_string(kGradCheckParamLimit) +
                     " parameters; this config has " + std::to_string(param_count));

  SyntheticSpec one = cfg.synth;
  one.num_videos = 1;
  const Dataset data = generate_synthetic(one);
  const Window& window = data.windows.front();

  const MatchResult match =
      match_anchors(net.anchors(), window.actions, cfg.train.match_threshold);

  // Freeze the mined set at the unperturbed operating point.
  MiningResult mining;
  {
    Graph g;
    Network::Forward f = net.forward(g, window.features);
    mining = hard_negative_mining(match, g.value(*f.main.overlap).data(),
                                  cfg.train.negative_ratio, mix_seed(cfg.train.seed, 0x9C));
  }

  // Recorded gradients from one backward pass.
  std::map<std::string, std::vector<double>> recorded;
  {
    Graph g;
    Network::Forward f = net.forward(g, window.features);
    const LossNodes ln = build_losses(g, net, f, window.actions, match, mining,
                                      cfg.train.weights, cfg.train.encoded_targets);
    g.backward(ln.total);
    for (const std::string& name : store.names())
      recorded.emplace(name, store.entry(name).value.grad());
    store.clear_grads();
  }
  if (!corrupt_block.empty()) {
    const auto it = recorded.find(corrupt_block);
    if (it == recorded.end())
      throw std::invalid_argument("corrupt_block '" + corrupt_block +
                                  "' names no parameter block");
    it->second.front() += 0.5;
  }

  // The relative-error denominator is floored so exactly-zero gradients are
  // compared against the finite-difference noise floor, not against zero.
  constexpr double kDenominatorFloor = 1e-5;

  GradCheckResult result;
  result.tolerance = tolerance;
  result.param_count = param_count;
  for (const std::string& name : store.names()) {
    Tensor& value = store.entry(name).value;
    const std::vector<double>& grad = recorded.at(name);
    double block_max = 0.0;
    for (int c = 0; c < value.channels(); ++c) {
      for (int t = 0; t < value.length(); ++t) {
        const double saved = value.at(c, t);
        value.at(c, t) = saved + fd_step;
        const double plus = loss_value(net, window, match, mining, cfg.train);
        value.at(c, t) = saved - fd_step;
        const double minus = loss_value(net, window, match, mining, cfg.train);
        value.at(c, t) = saved;
        const double fd = (plus - minus) / (2.0 * fd_step);
        const double ad = grad[static_cast<std::size_t>(c) * value.length() + t];
        const double rel =
            std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), kDenominatorFloor});
        block_max = std::max(block_max, rel);
      }
    }
    result.blocks.push_back(GradCheckBlock{name, block_max});
    if (block_max > result.worst_error) {
      result.worst_error = block_max;
      result.worst_block = name;
    }
  }
  result.pass = result.worst_error < tolerance;
  return result;
}

std::vector<GtInstance> dataset_ground_truth(const Dataset& data) {
  std::vector<GtInstance> out;
  for (const Window& w : data.windows)
    for (const GroundTruth& g : w.actions)
      out.push_back(GtInstance{w.video_id,
                               Segment::from_range(w.to_seconds(g.segment.start()),
                                                   w.to_seconds(g.segment.end())),
                               g.class_id});
  return out;
}

std::vector<AblationRow> run_ablation(const RunConfig& cfg, const Dataset& train_data,
                                      const Dataset& eval_data,
                                      const std::function<void(const AblationRow&)>& on_row) {
  static const AblationMode kOrder[] = {AblationMode::kMainOnly, AblationMode::kMainProp,
                                        AblationMode::kMainCls, AblationMode::kRefinement,
                                        AblationMode::kFull};

  std::vector<double> thresholds = cfg.eval_thresholds;
  if (std::find(thresholds.begin(), thresholds.end(), 0.5) == thresholds.end())
    thresholds.push_back(0.5);
  const std::vector<GtInstance> gts = dataset_ground_truth(eval_data);

  std::vector<AblationRow> rows;
  for (AblationMode mode : kOrder) {
    TrainConfig tc = cfg.train;
    tc.mode = mode;
    Network net(cfg.network, mode, cfg.network_init_seed());
    train(net, train_data.windows, tc);
    const std::vector<Detection> dets = run_inference(net, eval_data.windows, cfg.infer);
    const EvalResult ev = evaluate(dets, gts, thresholds);

    AblationRow row;
    row.mode = mode;
    for (const EvalResult::Row& r : ev.rows) row.map_by_threshold[r.threshold] = r.map;
    row.map_at_half = ev.map_at(0.5);
    rows.push_back(row);
    if (on_row) on_row(rows.back());
  }
  return rows;
}

}  // namespace tadet
