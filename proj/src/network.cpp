#include "tadet/network.hpp"

#include <stdexcept>

namespace tadet {

std::string to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::kMainOnly: return "main_only";
    case AblationMode::kMainCls: return "main+cls";
    case AblationMode::kMainProp: return "main+prop";
    case AblationMode::kRefinement: return "refinement";
    case AblationMode::kFull: return "full";
  }
  throw std::logic_error("unreachable ablation mode");
}

AblationMode ablation_mode_from_string(const std::string& s) {
  if (s == "main_only") return AblationMode::kMainOnly;
  if (s == "main+cls") return AblationMode::kMainCls;
  if (s == "main+prop") return AblationMode::kMainProp;
  if (s == "refinement") return AblationMode::kRefinement;
  if (s == "full") return AblationMode::kFull;
  throw std::invalid_argument("unknown ablation mode '" + s +
                              "' (expected main_only, main+cls, main+prop, refinement, full)");
}

int NetworkConfig::base_output_length() const {
  int len = window_length;
  len = (len - 1) / base_conv1_stride + 1;
  len = (len - 1) / base_conv2_stride + 1;
  if (base_pool_kernel > len)
    throw std::invalid_argument("base pool kernel " + std::to_string(base_pool_kernel) +
                                " exceeds its input length " + std::to_string(len));
  len = (len - base_pool_kernel) / base_pool_stride + 1;
  len = (len - 1) / 2 + 1;  // hand-off conv, stride 2
  return len;
}

void NetworkConfig::validate() const {
  if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
  if (window_length < 2) throw std::invalid_argument("window_length must be >= 2");
  if (base_channels < 1) throw std::invalid_argument("base_channels must be >= 1");
  if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  if (head_kernel < 1 || head_kernel % 2 == 0)
    throw std::invalid_argument("head_kernel must be odd and >= 1");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
  if (base_conv1_stride < 1 || base_conv2_stride < 1 || base_pool_stride < 1 ||
      base_pool_kernel < 1)
    throw std::invalid_argument("base strides and pool kernel must be >= 1");
  anchors.validate();
  const auto& ll = anchors.layer_lengths;
  for (std::size_t j = 0; j + 1 < ll.size(); ++j)
    if (ll[j + 1] * 2 != ll[j])
      throw std::invalid_argument("anchor layer lengths must halve: layer " + std::to_string(j) +
                                  " is " + std::to_string(ll[j]) + ", layer " +
                                  std::to_string(j + 1) + " is " + std::to_string(ll[j + 1]));
  const int base_len = base_output_length();
  if (base_len != 2 * ll[0])
    throw std::invalid_argument(
        "base chain reduces window_length " + std::to_string(window_length) + " to " +
        std::to_string(base_len) + ", but the first anchor layer needs " +
        std::to_string(2 * ll[0]) + " (2 x layer length " + std::to_string(ll[0]) + ")");
}

Network::Network(NetworkConfig config, AblationMode mode, std::uint64_t init_seed)
    : config_(std::move(config)), mode_(mode) {
  config_.validate();
  anchors_ = generate_anchors(config_.anchors);
  build_params(init_seed);
}

Network::Network(NetworkConfig config, AblationMode mode, ParamStore params)
    : config_(std::move(config)), mode_(mode) {
  config_.validate();
  anchors_ = generate_anchors(config_.anchors);
  build_params(0);  // reference shapes
  for (const auto& [name, e] : params_.entries()) {
    if (!params.contains(name))
      throw std::invalid_argument("parameters are missing '" + name + "' required by mode " +
                                  to_string(mode_));
    if (!params.value(name).same_shape(e.value))
      throw std::invalid_argument("parameter '" + name + "' has shape " +
                                  params.value(name).shape_str() + ", this config needs " +
                                  e.value.shape_str());
  }
  for (const auto& [name, e] : params.entries())
    if (!params_.contains(name))
      throw std::invalid_argument("parameters contain '" + name +
                                  "' which mode " + to_string(mode_) + " does not define");
  params_ = std::move(params);
}

void Network::create_conv(const std::string& name, int out_ch, int in_ch, int kernel, Rng& rng) {
  params_.create_uniform(name + ".w", out_ch, in_ch * kernel, in_ch * kernel, out_ch * kernel,
                         rng);
  params_.create_zero(name + ".b", out_ch, 1);
}

void Network::create_deconv(const std::string& name, int n_ch, int m_ch, int kernel, Rng& rng) {
  params_.create_uniform(name + ".w", n_ch, m_ch * kernel, n_ch * kernel, m_ch * kernel, rng);
}

int Network::head_fields(BranchKind kind) const {
  switch (kind) {
    case BranchKind::kClassification: return config_.num_classes + 1;
    case BranchKind::kProposal: return 3;
    case BranchKind::kRefinement: return config_.num_classes + 4;
  }
  throw std::logic_error("unreachable branch kind");
}

void Network::build_params(std::uint64_t seed) {
  Rng rng(seed);
  const int D = config_.input_dim;
  const int B = config_.base_channels;
  const int N = config_.num_layers();
  const int R = static_cast<int>(config_.anchors.ratios.size());
  const int hk = config_.head_kernel;

  create_conv("base.conv1", B, D, 3, rng);
  create_conv("base.conv2", B, B, 3, rng);
  create_conv("base.bridge", B, B, 3, rng);

  for (int j = 1; j <= N; ++j) create_conv("main.stage" + std::to_string(j), B, B, 3, rng);
  for (int j = 1; j <= N; ++j)
    create_conv("main.head" + std::to_string(j), R * (config_.num_classes + 4), B, hk, rng);

  const auto build_tower = [&](const std::string& prefix, BranchKind kind) {
    for (int u = 1; u <= 3; ++u) create_conv(prefix + ".top.u" + std::to_string(u), B, B, 3, rng);
    for (int j = 1; j <= N - 1; ++j) {
      create_conv(prefix + ".lat" + std::to_string(j), B, B, 3, rng);
      create_deconv(prefix + ".deconv" + std::to_string(j), B, B, 4, rng);
      create_conv(prefix + ".post" + std::to_string(j) + ".conv1", B, B, 3, rng);
      create_conv(prefix + ".post" + std::to_string(j) + ".conv2", B, B, 3, rng);
    }
    for (int j = 1; j <= N; ++j)
      create_conv(prefix + ".head" + std::to_string(j), R * head_fields(kind), B, hk, rng);
  };

  if (mode_ == AblationMode::kMainCls || mode_ == AblationMode::kFull)
    build_tower("cls", BranchKind::kClassification);
  if (mode_ == AblationMode::kMainProp || mode_ == AblationMode::kFull)
    build_tower("prop", BranchKind::kProposal);
  if (mode_ == AblationMode::kRefinement) build_tower("refine", BranchKind::kRefinement);
}

std::vector<std::string> Network::expected_param_names(const NetworkConfig& config,
                                                       AblationMode mode) {
  Network probe(config, mode, 0);
  return probe.params_.names();
}

Graph::NodeId Network::conv_unit(Graph& g, Graph::NodeId x, const std::string& name, int kernel,
                                 int stride, int padding) {
  const Graph::NodeId w = g.parameter(params_, name + ".w");
  const Graph::NodeId b = g.parameter(params_, name + ".b");
  return g.conv1d(x, w, b, kernel, stride, padding, name);
}

Graph::NodeId Network::base_forward(Graph& g, Graph::NodeId features) {
  const Tensor& f = g.value(features);
  if (f.channels() != config_.input_dim)
    throw std::invalid_argument("features have " + std::to_string(f.channels()) +
                                " channels, the network expects input_dim " +
                                std::to_string(config_.input_dim));
  if (f.length() != config_.window_length)
    throw std::invalid_argument("features have length " + std::to_string(f.length()) +
                                ", the network expects window_length " +
                                std::to_string(config_.window_length));
  Graph::NodeId x = g.relu(conv_unit(g, features, "base.conv1", 3, config_.base_conv1_stride, 1));
  x = g.relu(conv_unit(g, x, "base.conv2", 3, config_.base_conv2_stride, 1));
  x = g.maxpool1d(x, config_.base_pool_kernel, config_.base_pool_stride, "base.pool");
  x = g.relu(conv_unit(g, x, "base.bridge", 3, 2, 1));
  if (g.value(x).length() != config_.base_output_length())
    throw std::logic_error("base chain produced length " +
                           std::to_string(g.value(x).length()) + ", expected " +
                           std::to_string(config_.base_output_length()));
  return x;
}

Network::Streams Network::main_stream_forward(Graph& g, Graph::NodeId base) {
  Streams s;
  Graph::NodeId cur = base;
  for (int j = 1; j <= config_.num_layers(); ++j) {
    cur = g.relu(conv_unit(g, cur, "main.stage" + std::to_string(j), 3, 2, 1));
    const int want = config_.anchors.layer_lengths[static_cast<std::size_t>(j - 1)];
    if (g.value(cur).length() != want)
      throw std::logic_error("main stage " + std::to_string(j) + " produced length " +
                             std::to_string(g.value(cur).length()) + ", expected " +
                             std::to_string(want));
    s.maps.push_back(cur);
  }
  s.out = collect_heads(g, s.maps, "main", BranchKind::kRefinement);
  return s;
}

Network::Streams Network::branch_forward(Graph& g, BranchKind kind,
                                         const std::vector<Graph::NodeId>& main_maps) {
  std::string prefix;
  switch (kind) {
    case BranchKind::kClassification: prefix = "cls"; break;
    case BranchKind::kProposal: prefix = "prop"; break;
    case BranchKind::kRefinement: prefix = "refine"; break;
  }
  if (!params_.contains(prefix + ".top.u1.w"))
    throw std::logic_error("branch '" + prefix + "' is not built under mode " + to_string(mode_));
  const int n = config_.num_layers();
  if (static_cast<int>(main_maps.size()) != n)
    throw std::invalid_argument("branch_forward needs " + std::to_string(n) + " main maps, got " +
                                std::to_string(main_maps.size()));

  Streams s;
  s.maps.assign(main_maps.size(), 0);

  Graph::NodeId deep = main_maps[static_cast<std::size_t>(n - 1)];
  for (int u = 1; u <= 3; ++u)
    deep = g.relu(conv_unit(g, deep, prefix + ".top.u" + std::to_string(u), 3, 1, 1));
  s.maps[static_cast<std::size_t>(n - 1)] = deep;

  for (int j = n - 1; j >= 1; --j) {
    // lateral: ReLU - conv - ReLU on the main map at this level
    Graph::NodeId lat = g.relu(main_maps[static_cast<std::size_t>(j - 1)]);
    lat = conv_unit(g, lat, prefix + ".lat" + std::to_string(j), 3, 1, 1);
    lat = g.relu(lat);
    // deeper branch map, upsampled to this level's length
    const Graph::NodeId w = g.parameter(params_, prefix + ".deconv" + std::to_string(j) + ".w");
    const Graph::NodeId up = g.deconv1d(s.maps[static_cast<std::size_t>(j)], w, 4, 2, 1,
                                        prefix + ".deconv" + std::to_string(j));
    if (g.value(up).length() != g.value(lat).length())
      throw std::logic_error("deconv at level " + std::to_string(j) + " produced length " +
                             std::to_string(g.value(up).length()) + ", lateral map has " +
                             std::to_string(g.value(lat).length()));
    Graph::NodeId blended = g.weighted_sum(lat, up, config_.rho);
    // conv - ReLU - conv
    blended = conv_unit(g, blended, prefix + ".post" + std::to_string(j) + ".conv1", 3, 1, 1);
    blended = g.relu(blended);
    blended = conv_unit(g, blended, prefix + ".post" + std::to_string(j) + ".conv2", 3, 1, 1);
    s.maps[static_cast<std::size_t>(j - 1)] = blended;
  }

  s.out = collect_heads(g, s.maps, prefix, kind);
  return s;
}

BranchOutputs Network::collect_heads(Graph& g, const std::vector<Graph::NodeId>& maps,
                                     const std::string& prefix, BranchKind kind) {
  const int R = static_cast<int>(config_.anchors.ratios.size());
  const int C = config_.num_classes;
  const bool with_cls = kind != BranchKind::kProposal;
  const bool with_loc = kind != BranchKind::kClassification;
  const int pad = (config_.head_kernel - 1) / 2;

  std::vector<Graph::NodeId> parts;
  for (std::size_t j = 0; j < maps.size(); ++j) {
    const std::string name = prefix + ".head" + std::to_string(j + 1);
    const Graph::NodeId head = conv_unit(g, maps[j], name, config_.head_kernel, 1, pad);
    parts.push_back(g.interleave_blocks(head, R));
  }
  const Graph::NodeId all = g.concat_cols(parts);
  if (g.value(all).length() != static_cast<int>(anchors_.size()))
    throw std::logic_error("head columns (" + std::to_string(g.value(all).length()) +
                           ") do not match the anchor count (" +
                           std::to_string(anchors_.size()) + ")");

  BranchOutputs out;
  int row = 0;
  if (with_cls) {
    out.probs = g.softmax_cols(g.slice_rows(all, 0, C + 1));
    row = C + 1;
  }
  if (with_loc) {
    out.overlap = g.logistic(g.slice_rows(all, row, row + 1));
    out.dc = g.slice_rows(all, row + 1, row + 2);
    out.dw = g.slice_rows(all, row + 2, row + 3);
  }
  return out;
}

FusedOutputs fuse(Graph& g, const BranchOutputs& main, const BranchOutputs& cls,
                  const BranchOutputs& prop) {
  if (!main.probs || !main.overlap || !main.dc || !main.dw)
    throw std::invalid_argument("fuse: the main stream must provide all four outputs");
  const auto average = [&g](Graph::NodeId a, Graph::NodeId b) {
    if (!g.value(a).same_shape(g.value(b)))
      throw std::invalid_argument("fuse: misaligned outputs " + g.value(a).shape_str() + " vs " +
                                  g.value(b).shape_str());
    return g.weighted_sum(a, b, 0.5);
  };
  FusedOutputs f;
  f.probs = cls.probs ? average(*main.probs, *cls.probs) : *main.probs;
  f.overlap = prop.overlap ? average(*main.overlap, *prop.overlap) : *main.overlap;
  f.dc = prop.dc ? average(*main.dc, *prop.dc) : *main.dc;
  f.dw = prop.dw ? average(*main.dw, *prop.dw) : *main.dw;
  return f;
}

bool Network::has_cls_term() const {
  return mode_ == AblationMode::kMainCls || mode_ == AblationMode::kRefinement ||
         mode_ == AblationMode::kFull;
}

bool Network::has_prop_term() const {
  return mode_ == AblationMode::kMainProp || mode_ == AblationMode::kRefinement ||
         mode_ == AblationMode::kFull;
}

Network::Forward Network::forward(Graph& g, const Tensor& features) {
  Forward f;
  const Graph::NodeId x = g.input(features, "features");
  f.base = base_forward(g, x);
  Streams ms = main_stream_forward(g, f.base);
  f.main_maps = std::move(ms.maps);
  f.main = ms.out;

  BranchOutputs cls_role;
  BranchOutputs prop_role;
  if (mode_ == AblationMode::kMainCls || mode_ == AblationMode::kFull) {
    Streams cs = branch_forward(g, BranchKind::kClassification, f.main_maps);
    f.cls_maps = std::move(cs.maps);
    f.cls = cs.out;
    cls_role = f.cls;
  }
  if (mode_ == AblationMode::kMainProp || mode_ == AblationMode::kFull) {
    Streams ps = branch_forward(g, BranchKind::kProposal, f.main_maps);
    f.prop_maps = std::move(ps.maps);
    f.prop = ps.out;
    prop_role = f.prop;
  }
  if (mode_ == AblationMode::kRefinement) {
    Streams rs = branch_forward(g, BranchKind::kRefinement, f.main_maps);
    f.refine_maps = std::move(rs.maps);
    f.refine = rs.out;
    cls_role = f.refine;
    prop_role = f.refine;
  }
  f.fused = fuse(g, f.main, cls_role, prop_role);
  return f;
}

}  // namespace tadet
