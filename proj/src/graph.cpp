#include "tadet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tadet/params.hpp"

namespace tadet {

namespace {

std::string shape_of(const Tensor& t) { return t.shape_str(); }

}  // namespace

Graph::NodeId Graph::emit(Tensor value, std::string tag) {
  if (backward_done_)
    throw std::logic_error("graph is frozen once backward has run");
  nodes_.push_back(Node{std::move(value), std::move(tag)});
  return nodes_.size() - 1;
}

void Graph::check_id(NodeId id) const {
  if (id >= nodes_.size()) throw std::out_of_range("invalid graph node id");
}

const Tensor& Graph::value(NodeId id) const {
  check_id(id);
  return nodes_[id].value;
}

double Graph::scalar(NodeId id) const {
  return value(id).item();
}

const Tensor& Graph::grad(NodeId id) const {
  check_id(id);
  if (!backward_done_) throw std::logic_error("gradient requested before backward");
  return grads_[id];
}

std::optional<std::string> Graph::first_non_finite() const {
  for (const Node& n : nodes_)
    if (!n.value.all_finite()) return n.tag;
  return std::nullopt;
}

Graph::NodeId Graph::input(Tensor value, std::string tag) {
  return emit(std::move(value), std::move(tag));
}

Graph::NodeId Graph::parameter(ParamStore& store, const std::string& name) {
  NodeId id = emit(store.value(name), "param:" + name);
  bindings_.push_back(Binding{id, &store, name});
  return id;
}

Graph::NodeId Graph::conv1d(NodeId xid, NodeId wid, std::optional<NodeId> bid, int kernel,
                            int stride, int padding, const std::string& tag) {
  const Tensor& x = value(xid);
  const Tensor& w = value(wid);
  if (kernel < 1) throw std::invalid_argument(tag + ": kernel size must be >= 1");
  if (stride < 1) throw std::invalid_argument(tag + ": stride must be >= 1");
  if (padding < 0) throw std::invalid_argument(tag + ": padding must be >= 0");
  const int in_ch = x.channels();
  const int out_ch = w.channels();
  if (w.length() != in_ch * kernel)
    throw std::invalid_argument(tag + ": kernel tensor length " + std::to_string(w.length()) +
                                " does not equal in_channels " + std::to_string(in_ch) +
                                " * kernel " + std::to_string(kernel));
  if (bid) {
    const Tensor& b = value(*bid);
    if (b.channels() != out_ch || b.length() != 1)
      throw std::invalid_argument(tag + ": bias shape " + shape_of(b) + " must be [" +
                                  std::to_string(out_ch) + " x 1]");
  }
  const int padded = x.length() + 2 * padding;
  if (padded < kernel)
    throw std::invalid_argument(tag + ": kernel " + std::to_string(kernel) +
                                " exceeds padded input length " + std::to_string(padded));
  const int in_len = x.length();
  const int out_len = (padded - kernel) / stride + 1;

  Tensor out(out_ch, out_len);
  for (int o = 0; o < out_ch; ++o) {
    const double bias_v = bid ? value(*bid).at(o, 0) : 0.0;
    for (int t = 0; t < out_len; ++t) {
      double acc = bias_v;
      const int base = t * stride - padding;
      for (int i = 0; i < in_ch; ++i) {
        for (int k = 0; k < kernel; ++k) {
          const int tau = base + k;
          if (tau >= 0 && tau < in_len) acc += x.at(i, tau) * w.at(o, i * kernel + k);
        }
      }
      out.at(o, t) = acc;
    }
  }
  const NodeId yid = emit(std::move(out), tag);
  const bool has_bias = bid.has_value();
  const NodeId bnode = bid.value_or(0);
  tape_.push_back([=](Graph& g) {
    const Tensor& xv = g.nodes_[xid].value;
    const Tensor& wv = g.nodes_[wid].value;
    const Tensor& gy = g.grads_[yid];
    Tensor& gx = g.grads_[xid];
    Tensor& gw = g.grads_[wid];
    const int L = xv.length();
    for (int o = 0; o < wv.channels(); ++o) {
      for (int t = 0; t < gy.length(); ++t) {
        const double gv = gy.at(o, t);
        if (gv == 0.0) continue;
        if (has_bias) g.grads_[bnode].at(o, 0) += gv;
        const int base = t * stride - padding;
        for (int i = 0; i < xv.channels(); ++i) {
          for (int k = 0; k < kernel; ++k) {
            const int tau = base + k;
            if (tau >= 0 && tau < L) {
              gx.at(i, tau) += gv * wv.at(o, i * kernel + k);
              gw.at(o, i * kernel + k) += gv * xv.at(i, tau);
            }
          }
        }
      }
    }
  });
  return yid;
}

Graph::NodeId Graph::deconv1d(NodeId xid, NodeId wid, int kernel, int stride, int padding,
                              const std::string& tag) {
  const Tensor& x = value(xid);
  const Tensor& w = value(wid);
  if (kernel < 1) throw std::invalid_argument(tag + ": kernel size must be >= 1");
  if (stride < 1) throw std::invalid_argument(tag + ": stride must be >= 1");
  if (padding < 0) throw std::invalid_argument(tag + ": padding must be >= 0");
  if (x.channels() != w.channels())
    throw std::invalid_argument(tag + ": input channels " + std::to_string(x.channels()) +
                                " do not match kernel channels " + std::to_string(w.channels()));
  if (w.length() % kernel != 0)
    throw std::invalid_argument(tag + ": kernel tensor length " + std::to_string(w.length()) +
                                " is not a multiple of kernel " + std::to_string(kernel));
  const int n_ch = x.channels();
  const int m_ch = w.length() / kernel;
  const int out_len = (x.length() - 1) * stride - 2 * padding + kernel;
  if (out_len < 1)
    throw std::invalid_argument(tag + ": computed output length " + std::to_string(out_len) +
                                " is < 1");

  Tensor out(m_ch, out_len);
  for (int n = 0; n < n_ch; ++n) {
    for (int t = 0; t < x.length(); ++t) {
      const double xv = x.at(n, t);
      if (xv == 0.0) continue;
      const int base = t * stride - padding;
      for (int m = 0; m < m_ch; ++m) {
        for (int k = 0; k < kernel; ++k) {
          const int tau = base + k;
          if (tau >= 0 && tau < out_len) out.at(m, tau) += xv * w.at(n, m * kernel + k);
        }
      }
    }
  }
  const NodeId yid = emit(std::move(out), tag);
  tape_.push_back([=](Graph& g) {
    const Tensor& xv = g.nodes_[xid].value;
    const Tensor& wv = g.nodes_[wid].value;
    const Tensor& gy = g.grads_[yid];
    Tensor& gx = g.grads_[xid];
    Tensor& gw = g.grads_[wid];
    const int up_len = gy.length();
    for (int n = 0; n < xv.channels(); ++n) {
      for (int t = 0; t < xv.length(); ++t) {
        const int base = t * stride - padding;
        double acc = 0.0;
        for (int m = 0; m < gy.channels(); ++m) {
          for (int k = 0; k < kernel; ++k) {
            const int tau = base + k;
            if (tau >= 0 && tau < up_len) {
              const double gv = gy.at(m, tau);
              acc += gv * wv.at(n, m * kernel + k);
              gw.at(n, m * kernel + k) += gv * xv.at(n, t);
            }
          }
        }
        gx.at(n, t) += acc;
      }
    }
  });
  return yid;
}

Graph::NodeId Graph::maxpool1d(NodeId xid, int kernel, int stride, const std::string& tag) {
  const Tensor& x = value(xid);
  if (kernel < 1) throw std::invalid_argument(tag + ": kernel size must be >= 1");
  if (stride < 1) throw std::invalid_argument(tag + ": stride must be >= 1");
  if (kernel > x.length())
    throw std::invalid_argument(tag + ": kernel " + std::to_string(kernel) +
                                " exceeds input length " + std::to_string(x.length()));
  const int out_len = (x.length() - kernel) / stride + 1;
  Tensor out(x.channels(), out_len);
  std::vector<int> argmax(static_cast<std::size_t>(x.channels()) * out_len);
  for (int c = 0; c < x.channels(); ++c) {
    for (int t = 0; t < out_len; ++t) {
      int best_idx = t * stride;
      double best = x.at(c, best_idx);
      for (int k = 1; k < kernel; ++k) {
        const double v = x.at(c, t * stride + k);
        if (v > best) {  // strict: ties keep the first index
          best = v;
          best_idx = t * stride + k;
        }
      }
      out.at(c, t) = best;
      argmax[static_cast<std::size_t>(c) * out_len + t] = best_idx;
    }
  }
  const NodeId yid = emit(std::move(out), tag);
  tape_.push_back([xid, yid, argmax, out_len](Graph& g) {
    const Tensor& gy = g.grads_[yid];
    Tensor& gx = g.grads_[xid];
    for (int c = 0; c < gy.channels(); ++c)
      for (int t = 0; t < gy.length(); ++t)
        gx.at(c, argmax[static_cast<std::size_t>(c) * out_len + t]) += gy.at(c, t);
  });
  return yid;
}

Graph::NodeId Graph::relu(NodeId xid) {
  const Tensor& x = value(xid);
  Tensor out(x.channels(), x.length());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
  const NodeId yid = emit(std::move(out), "relu");
  tape_.push_back([xid, yid](Graph& g) {
    const Tensor& xv = g.nodes_[xid].value;
    const Tensor& gy = g.grads_[yid];
    Tensor& gx = g.grads_[xid];
    // subgradient 0 at exactly 0
    for (std::size_t i = 0; i < xv.size(); ++i)
      if (xv.data()[i] > 0.0) gx.data()[i] += gy.data()[i];
  });
  return yid;
}

Graph::NodeId Graph::weighted_sum(NodeId aid, NodeId bid, double rho) {
  const Tensor& a = value(aid);
  const Tensor& b = value(bid);
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::invalid_argument("weighted_sum: rho must be in [0, 1]");
  if (!a.same_shape(b))
    throw std::invalid_argument("weighted_sum: shape mismatch " + shape_of(a) + " vs " +
                                shape_of(b));
  Tensor out(a.channels(), a.length());
  for (std::size_t i = 0; i < a.size(); ++i)
    out.data()[i] = rho * a.data()[i] + (1.0 - rho) * b.data()[i];
  const NodeId yid = emit(std::move(out), "weighted_sum");
  tape_.push_back([aid, bid, yid, rho](Graph& g) {
    const Tensor& gy = g.grads_[yid];
    Tensor& ga = g.grads_[aid];
    Tensor& gb = g.grads_[bid];
    for (std::size_t i = 0; i < gy.size(); ++i) {
      ga.data()[i] += rho * gy.data()[i];
      gb.data()[i] += (1.0 - rho) * gy.data()[i];
    }
  });
  return yid;
}

Graph::NodeId Graph::softmax_cols(NodeId xid) {
  const Tensor& x = value(xid);
  Tensor out(x.channels(), x.length());
  for (int t = 0; t < x.length(); ++t) {
    double m = x.at(0, t);
    for (int c = 1; c < x.channels(); ++c) m = std::max(m, x.at(c, t));
    double total = 0.0;
    for (int c = 0; c < x.channels(); ++c) {
      out.at(c, t) = std::exp(x.at(c, t) - m);
      total += out.at(c, t);
    }
    for (int c = 0; c < x.channels(); ++c) out.at(c, t) /= total;
  }
  const NodeId yid = emit(std::move(out), "softmax");
  tape_.push_back([xid, yid](Graph& g) {
    const Tensor& y = g.nodes_[yid].value;
    const Tensor& gy = g.grads_[yid];
    Tensor& gx = g.grads_[xid];
    for (int t = 0; t < y.length(); ++t) {
      double dot = 0.0;
      for (int c = 0; c < y.channels(); ++c) dot += gy.at(c, t) * y.at(c, t);
      for (int c = 0; c < y.channels(); ++c)
        gx.at(c, t) += y.at(c, t) * (gy.at(c, t) - dot);
    }
  });
  return yid;
}

Graph::NodeId Graph::logistic(NodeId xid) {
  const Tensor& x = value(xid);
  Tensor out(x.channels(), x.length());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = tadet::logistic(x.data()[i]);
  const NodeId yid = emit(std::move(out), "logistic");
  tape_.push_back([xid, yid](Graph& g) {
    const Tensor& y = g.nodes_[yid].value;
    const Tensor& gy = g.grads_[yid];
    Tensor& gx = g.grads_[xid];
    for (std::size_t i = 0; i < y.size(); ++i)
      gx.data()[i] += y.data()[i] * (1.0 - y.data()[i]) * gy.data()[i];
  });
  return yid;
}

Graph::NodeId Graph::exp(NodeId xid) {
  const Tensor& x = value(xid);
  Tensor out(x.channels(), x.length());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = std::exp(x.data()[i]);
  const NodeId yid = emit(std::move(out), "exp");
  tape_.push_back([xid, yid](Graph& g) {
    const Tensor& y = g.nodes_[yid].value;
    const Tensor& gy = g.grads_[yid];
    Tensor& gx = g.grads_[xid];
    for (std::size_t i = 0; i < y.size(); ++i) gx.data()[i] += y.data()[i] * gy.data()[i];
  });
  return yid;
}

Graph::NodeId Graph::log(NodeId xid) {
  const Tensor& x = value(xid);
  Tensor out(x.channels(), x.length());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = std::log(x.data()[i]);
  const NodeId yid = emit(std::move(out), "log");
  tape_.push_back([xid, yid](Graph& g) {
    const Tensor& xv = g.nodes_[xid].value;
    const Tensor& gy = g.grads_[yid];
    Tensor& gx = g.grads_[xid];
    for (std::size_t i = 0; i < xv.size(); ++i) gx.data()[i] += gy.data()[i] / xv.data()[i];
  });
  return yid;
}

Graph::NodeId Graph::add(NodeId aid, NodeId bid) {
  const Tensor& a = value(aid);
  const Tensor& b = value(bid);
  if (!a.same_shape(b))
    throw std::invalid_argument("add: shape mismatch " + shape_of(a) + " vs " + shape_of(b));
  Tensor out(a.channels(), a.length());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  const NodeId yid = emit(std::move(out), "add");
  tape_.push_back([aid, bid, yid](Graph& g) {
    const Tensor& gy = g.grads_[yid];
    for (std::size_t i = 0; i < gy.size(); ++i) {
      g.grads_[aid].data()[i] += gy.data()[i];
      g.grads_[bid].data()[i] += gy.data()[i];
    }
  });
  return yid;
}

Graph::NodeId Graph::sub(NodeId aid, NodeId bid) {
  const Tensor& a = value(aid);
  const Tensor& b = value(bid);
  if (!a.same_shape(b))
    throw std::invalid_argument("sub: shape mismatch " + shape_of(a) + " vs " + shape_of(b));
  Tensor out(a.channels(), a.length());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  const NodeId yid = emit(std::move(out), "sub");
  tape_.push_back([aid, bid, yid](Graph& g) {
    const Tensor& gy = g.grads_[yid];
    for (std::size_t i = 0; i < gy.size(); ++i) {
      g.grads_[aid].data()[i] += gy.data()[i];
      g.grads_[bid].data()[i] -= gy.data()[i];
    }
  });
  return yid;
}

Graph::NodeId Graph::mul(NodeId aid, NodeId bid) {
  const Tensor& a = value(aid);
  const Tensor& b = value(bid);
  if (!a.same_shape(b))
    throw std::invalid_argument("mul: shape mismatch " + shape_of(a) + " vs " + shape_of(b));
  Tensor out(a.channels(), a.length());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  const NodeId yid = emit(std::move(out), "mul");
  tape_.push_back([aid, bid, yid](Graph& g) {
    const Tensor& av = g.nodes_[aid].value;
    const Tensor& bv = g.nodes_[bid].value;
    const Tensor& gy = g.grads_[yid];
    for (std::size_t i = 0; i < gy.size(); ++i) {
      g.grads_[aid].data()[i] += gy.data()[i] * bv.data()[i];
      g.grads_[bid].data()[i] += gy.data()[i] * av.data()[i];
    }
  });
  return yid;
}

Graph::NodeId Graph::scale(NodeId xid, double factor) {
  const Tensor& x = value(xid);
  Tensor out(x.channels(), x.length());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = factor * x.data()[i];
  const NodeId yid = emit(std::move(out), "scale");
  tape_.push_back([xid, yid, factor](Graph& g) {
    const Tensor& gy = g.grads_[yid];
    for (std::size_t i = 0; i < gy.size(); ++i) g.grads_[xid].data()[i] += factor * gy.data()[i];
  });
  return yid;
}

Graph::NodeId Graph::add_const(NodeId xid, Tensor c) {
  const Tensor& x = value(xid);
  if (!x.same_shape(c))
    throw std::invalid_argument("add_const: shape mismatch " + shape_of(x) + " vs " + shape_of(c));
  Tensor out(x.channels(), x.length());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] + c.data()[i];
  const NodeId yid = emit(std::move(out), "add_const");
  tape_.push_back([xid, yid](Graph& g) {
    const Tensor& gy = g.grads_[yid];
    for (std::size_t i = 0; i < gy.size(); ++i) g.grads_[xid].data()[i] += gy.data()[i];
  });
  return yid;
}

Graph::NodeId Graph::mul_const(NodeId xid, Tensor c) {
  const Tensor& x = value(xid);
  if (!x.same_shape(c))
    throw std::invalid_argument("mul_const: shape mismatch " + shape_of(x) + " vs " + shape_of(c));
  Tensor out(x.channels(), x.length());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] * c.data()[i];
  const NodeId yid = emit(std::move(out), "mul_const");
  tape_.push_back([xid, yid, c = std::move(c)](Graph& g) {
    const Tensor& gy = g.grads_[yid];
    for (std::size_t i = 0; i < gy.size(); ++i)
      g.grads_[xid].data()[i] += c.data()[i] * gy.data()[i];
  });
  return yid;
}

Graph::NodeId Graph::smooth_l1(NodeId xid) {
  const Tensor& x = value(xid);
  Tensor out(x.channels(), x.length());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    const double a = std::abs(v);
    out.data()[i] = a < 1.0 ? 0.5 * v * v : a - 0.5;
  }
  const NodeId yid = emit(std::move(out), "smooth_l1");
  tape_.push_back([xid, yid](Graph& g) {
    const Tensor& xv = g.nodes_[xid].value;
    const Tensor& gy = g.grads_[yid];
    Tensor& gx = g.grads_[xid];
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double v = xv.data()[i];
      const double d = std::abs(v) < 1.0 ? v : (v > 0.0 ? 1.0 : -1.0);
      gx.data()[i] += d * gy.data()[i];
    }
  });
  return yid;
}

Graph::NodeId Graph::sum(NodeId xid, const std::string& tag) {
  const Tensor& x = value(xid);
  double total = 0.0;
  for (double v : x.data()) total += v;
  const NodeId yid = emit(Tensor::scalar(total), tag);
  tape_.push_back([xid, yid](Graph& g) {
    const double gv = g.grads_[yid].data()[0];
    Tensor& gx = g.grads_[xid];
    for (std::size_t i = 0; i < gx.size(); ++i) gx.data()[i] += gv;
  });
  return yid;
}

Graph::NodeId Graph::slice_rows(NodeId xid, int row_begin, int row_end) {
  const Tensor& x = value(xid);
  if (row_begin < 0 || row_end > x.channels() || row_begin >= row_end)
    throw std::invalid_argument("slice_rows: range [" + std::to_string(row_begin) + ", " +
                                std::to_string(row_end) + ") invalid for " + shape_of(x));
  Tensor out(row_end - row_begin, x.length());
  for (int c = row_begin; c < row_end; ++c)
    for (int t = 0; t < x.length(); ++t) out.at(c - row_begin, t) = x.at(c, t);
  const NodeId yid = emit(std::move(out), "slice_rows");
  tape_.push_back([xid, yid, row_begin](Graph& g) {
    const Tensor& gy = g.grads_[yid];
    Tensor& gx = g.grads_[xid];
    for (int c = 0; c < gy.channels(); ++c)
      for (int t = 0; t < gy.length(); ++t) gx.at(c + row_begin, t) += gy.at(c, t);
  });
  return yid;
}

Graph::NodeId Graph::concat_cols(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const int ch = value(parts[0]).channels();
  int total = 0;
  for (NodeId p : parts) {
    if (value(p).channels() != ch)
      throw std::invalid_argument("concat_cols: channel mismatch " +
                                  shape_of(value(parts[0])) + " vs " + shape_of(value(p)));
    total += value(p).length();
  }
  Tensor out(ch, total);
  std::vector<int> offsets(parts.size());
  int off = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor& p = value(parts[i]);
    offsets[i] = off;
    for (int c = 0; c < ch; ++c)
      for (int t = 0; t < p.length(); ++t) out.at(c, off + t) = p.at(c, t);
    off += p.length();
  }
  const NodeId yid = emit(std::move(out), "concat_cols");
  tape_.push_back([parts, offsets, yid](Graph& g) {
    const Tensor& gy = g.grads_[yid];
    for (std::size_t i = 0; i < parts.size(); ++i) {
      Tensor& gp = g.grads_[parts[i]];
      for (int c = 0; c < gp.channels(); ++c)
        for (int t = 0; t < gp.length(); ++t) gp.at(c, t) += gy.at(c, offsets[i] + t);
    }
  });
  return yid;
}

Graph::NodeId Graph::interleave_blocks(NodeId xid, int num_blocks) {
  const Tensor& x = value(xid);
  if (num_blocks < 1 || x.channels() % num_blocks != 0)
    throw std::invalid_argument("interleave_blocks: channels " + std::to_string(x.channels()) +
                                " not divisible by block count " + std::to_string(num_blocks));
  const int fields = x.channels() / num_blocks;
  Tensor out(fields, x.length() * num_blocks);
  for (int b = 0; b < num_blocks; ++b)
    for (int f = 0; f < fields; ++f)
      for (int t = 0; t < x.length(); ++t)
        out.at(f, t * num_blocks + b) = x.at(b * fields + f, t);
  const NodeId yid = emit(std::move(out), "interleave_blocks");
  tape_.push_back([xid, yid, num_blocks, fields](Graph& g) {
    const Tensor& gy = g.grads_[yid];
    Tensor& gx = g.grads_[xid];
    const int in_len = gx.length();
    for (int b = 0; b < num_blocks; ++b)
      for (int f = 0; f < fields; ++f)
        for (int t = 0; t < in_len; ++t)
          gx.at(b * fields + f, t) += gy.at(f, t * num_blocks + b);
  });
  return yid;
}

Graph::NodeId Graph::select_cols(NodeId xid, std::vector<int> cols) {
  const Tensor& x = value(xid);
  if (cols.empty()) throw std::invalid_argument("select_cols: empty selection");
  for (int c : cols)
    if (c < 0 || c >= x.length())
      throw std::invalid_argument("select_cols: column " + std::to_string(c) +
                                  " out of range for " + shape_of(x));
  Tensor out(x.channels(), static_cast<int>(cols.size()));
  for (int r = 0; r < x.channels(); ++r)
    for (std::size_t j = 0; j < cols.size(); ++j) out.at(r, static_cast<int>(j)) = x.at(r, cols[j]);
  const NodeId yid = emit(std::move(out), "select_cols");
  tape_.push_back([xid, yid, cols = std::move(cols)](Graph& g) {
    const Tensor& gy = g.grads_[yid];
    Tensor& gx = g.grads_[xid];
    for (int r = 0; r < gy.channels(); ++r)
      for (std::size_t j = 0; j < cols.size(); ++j)
        gx.at(r, cols[j]) += gy.at(r, static_cast<int>(j));
  });
  return yid;
}

Graph::NodeId Graph::select_entries(NodeId xid, std::vector<std::pair<int, int>> entries) {
  const Tensor& x = value(xid);
  if (entries.empty()) throw std::invalid_argument("select_entries: empty selection");
  for (const auto& [r, c] : entries)
    if (r < 0 || r >= x.channels() || c < 0 || c >= x.length())
      throw std::invalid_argument("select_entries: entry (" + std::to_string(r) + ", " +
                                  std::to_string(c) + ") out of range for " + shape_of(x));
  Tensor out(1, static_cast<int>(entries.size()));
  for (std::size_t j = 0; j < entries.size(); ++j)
    out.at(0, static_cast<int>(j)) = x.at(entries[j].first, entries[j].second);
  const NodeId yid = emit(std::move(out), "select_entries");
  tape_.push_back([xid, yid, entries = std::move(entries)](Graph& g) {
    const Tensor& gy = g.grads_[yid];
    Tensor& gx = g.grads_[xid];
    for (std::size_t j = 0; j < entries.size(); ++j)
      gx.at(entries[j].first, entries[j].second) += gy.at(0, static_cast<int>(j));
  });
  return yid;
}

void Graph::backward(NodeId loss, double seed) {
  if (tape_.empty())
    throw std::logic_error("backward called before any forward operation was recorded");
  if (backward_done_) throw std::logic_error("backward already run on this graph");
  check_id(loss);
  const Tensor& lv = nodes_[loss].value;
  if (lv.channels() != 1 || lv.length() != 1)
    throw std::invalid_argument("backward requires a scalar loss node, got " + lv.shape_str());

  grads_.clear();
  grads_.reserve(nodes_.size());
  for (const Node& n : nodes_) grads_.emplace_back(n.value.channels(), n.value.length(), 0.0);
  grads_[loss].data()[0] = seed;

  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)(*this);

  for (const Binding& b : bindings_) b.store->accumulate_grad(b.name, grads_[b.node]);
  backward_done_ = true;
}

}  // namespace tadet
