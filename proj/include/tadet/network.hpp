#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tadet/anchors.hpp"
#include "tadet/graph.hpp"
#include "tadet/params.hpp"

namespace tadet {

// Which towers exist and which loss/inference sides they feed.
enum class AblationMode { kMainOnly, kMainCls, kMainProp, kRefinement, kFull };

std::string to_string(AblationMode mode);
AblationMode ablation_mode_from_string(const std::string& s);

struct NetworkConfig {
  int input_dim = 16;
  int window_length = 512;
  int base_channels = 32;
  int num_classes = 5;  // foreground classes; softmax adds a background slot
  int head_kernel = 3;  // odd
  double rho = 2.0 / 3.0;

  // Base reduction chain: conv(k3) + ReLU, conv(k3) + ReLU, maxpool, then one
  // stride-2 conv + ReLU that hands off to the anchor pyramid. Strides are
  // configurable so the same topology serves both long and short windows.
  int base_conv1_stride = 2;
  int base_conv2_stride = 2;
  int base_pool_kernel = 2;
  int base_pool_stride = 2;

  AnchorSpec anchors;

  int num_layers() const { return static_cast<int>(anchors.layer_lengths.size()); }
  // Length after the full base chain; must equal 2 * layer_lengths[0].
  int base_output_length() const;
  void validate() const;
};

// Per-anchor head outputs of one stream, as graph nodes over all anchors in
// generation order. probs is [C+1 x A] after softmax, overlap is [1 x A] after
// logistic squashing, dc/dw are raw offsets [1 x A]. Streams that predict only
// one task leave the other fields empty.
struct BranchOutputs {
  std::optional<Graph::NodeId> probs;
  std::optional<Graph::NodeId> overlap;
  std::optional<Graph::NodeId> dc;
  std::optional<Graph::NodeId> dw;
};

// Element-wise averages of main-stream and branch predictions.
struct FusedOutputs {
  Graph::NodeId probs = 0;
  Graph::NodeId overlap = 0;
  Graph::NodeId dc = 0;
  Graph::NodeId dw = 0;
};

// Average-fuses whatever the branches provide with the main stream:
// probabilities with the classification side, overlap and offsets with the
// proposal side; missing sides pass the main prediction through unchanged.
FusedOutputs fuse(Graph& g, const BranchOutputs& main, const BranchOutputs& cls,
                  const BranchOutputs& prop);

enum class BranchKind { kClassification, kProposal, kRefinement };

class Network {
 public:
  Network(NetworkConfig config, AblationMode mode, std::uint64_t init_seed);
  // Adopts trained parameters; their names and shapes must match what this
  // config and mode would create.
  Network(NetworkConfig config, AblationMode mode, ParamStore params);

  struct Streams {
    std::vector<Graph::NodeId> maps;  // per anchor layer, shallow to deep
    BranchOutputs out;
  };

  Graph::NodeId base_forward(Graph& g, Graph::NodeId features);
  Streams main_stream_forward(Graph& g, Graph::NodeId base);
  // Builds a top-down tower over the main-stream maps: the deepest map passes
  // through three conv-ReLU units; every shallower level blends a
  // ReLU-conv-ReLU lateral of the main map with the deconvolved deeper branch
  // map (weight rho on the lateral side), then applies conv-ReLU-conv.
  Streams branch_forward(Graph& g, BranchKind kind, const std::vector<Graph::NodeId>& main_maps);

  struct Forward {
    Graph::NodeId base = 0;
    std::vector<Graph::NodeId> main_maps;
    std::vector<Graph::NodeId> cls_maps;
    std::vector<Graph::NodeId> prop_maps;
    std::vector<Graph::NodeId> refine_maps;
    BranchOutputs main;
    BranchOutputs cls;
    BranchOutputs prop;
    BranchOutputs refine;
    FusedOutputs fused;
  };

  Forward forward(Graph& g, const Tensor& features);

  // Loss-side presence of the branch terms under this mode.
  bool has_cls_term() const;
  bool has_prop_term() const;

  const std::vector<Anchor>& anchors() const { return anchors_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const NetworkConfig& config() const { return config_; }
  AblationMode mode() const { return mode_; }

  // Parameter names this (config, mode) pair creates, lexicographic.
  static std::vector<std::string> expected_param_names(const NetworkConfig& config,
                                                       AblationMode mode);

 private:
  void build_params(std::uint64_t seed);
  void create_conv(const std::string& name, int out_ch, int in_ch, int kernel, Rng& rng);
  void create_deconv(const std::string& name, int n_ch, int m_ch, int kernel, Rng& rng);
  Graph::NodeId conv_unit(Graph& g, Graph::NodeId x, const std::string& name, int kernel,
                          int stride, int padding);
  BranchOutputs collect_heads(Graph& g, const std::vector<Graph::NodeId>& maps,
                              const std::string& prefix, BranchKind kind);
  int head_fields(BranchKind kind) const;

  NetworkConfig config_;
  AblationMode mode_;
  ParamStore params_;
  std::vector<Anchor> anchors_;
};

}  // namespace tadet
