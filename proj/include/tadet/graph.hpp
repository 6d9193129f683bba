#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tadet/tensor.hpp"

namespace tadet {

class ParamStore;

// Eager define-by-run tape. Every op computes its output immediately and records
// a closure that scatters the output gradient back to its inputs. backward()
// replays the closures in exact reverse execution order, so each forward value
// receives exactly one accumulated gradient.
class Graph {
 public:
  using NodeId = std::size_t;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaves.
  NodeId input(Tensor value, std::string tag = "input");
  // Copies the current parameter value in; after backward() the node gradient is
  // accumulated into the store entry's gradient slot.
  NodeId parameter(ParamStore& store, const std::string& name);

  // Cross-correlation with zero padding. w is [out_ch x in_ch*kernel], bias
  // (optional) is [out_ch x 1].
  NodeId conv1d(NodeId x, NodeId w, std::optional<NodeId> bias, int kernel, int stride,
                int padding, const std::string& tag = "conv1d");
  // Exact adjoint of conv1d with the same kernel tensor layout: x is
  // [out_ch x L], w is [out_ch x in_ch*kernel], output is [in_ch x L_up].
  NodeId deconv1d(NodeId x, NodeId w, int kernel, int stride, int padding,
                  const std::string& tag = "deconv1d");
  // Max pooling; ties inside a window resolve to the first index.
  NodeId maxpool1d(NodeId x, int kernel, int stride, const std::string& tag = "maxpool1d");
  NodeId relu(NodeId x);
  // rho * a + (1 - rho) * b with rho in [0, 1].
  NodeId weighted_sum(NodeId a, NodeId b, double rho);
  // Softmax over channels, independently per column.
  NodeId softmax_cols(NodeId x);
  NodeId logistic(NodeId x);
  NodeId exp(NodeId x);
  NodeId log(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId x, double factor);
  NodeId add_const(NodeId x, Tensor c);
  NodeId mul_const(NodeId x, Tensor c);
  // Elementwise Huber-style penalty: 0.5*x^2 for |x| < 1, |x| - 0.5 otherwise.
  NodeId smooth_l1(NodeId x);
  NodeId sum(NodeId x, const std::string& tag = "sum");
  NodeId slice_rows(NodeId x, int row_begin, int row_end);
  NodeId concat_cols(const std::vector<NodeId>& parts);
  // [B*F x T] -> [F x T*B]: output column t*B + b takes block b's column t.
  // Used to turn block-interleaved head maps into per-anchor columns.
  NodeId interleave_blocks(NodeId x, int num_blocks);
  NodeId select_cols(NodeId x, std::vector<int> cols);
  // Gathers (row, col) entries into a [1 x K] tensor.
  NodeId select_entries(NodeId x, std::vector<std::pair<int, int>> entries);

  // Reverse sweep from a scalar loss node; `seed` is dL/d(loss). May be called
  // once per graph, and only after at least one recorded operation.
  void backward(NodeId loss, double seed = 1.0);

  const Tensor& value(NodeId id) const;
  double scalar(NodeId id) const;
  const Tensor& grad(NodeId id) const;

  // Tag of the first tensor in execution order holding a NaN or Inf.
  std::optional<std::string> first_non_finite() const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::string tag;
  };
  struct Binding {
    NodeId node;
    ParamStore* store;
    std::string name;
  };

  NodeId emit(Tensor value, std::string tag);
  void check_id(NodeId id) const;
  Tensor& gbuf(NodeId id) { return grads_[id]; }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;  // parallel to nodes_, allocated by backward()
  std::vector<std::function<void(Graph&)>> tape_;
  std::vector<Binding> bindings_;
  bool backward_done_ = false;
};

}  // namespace tadet
