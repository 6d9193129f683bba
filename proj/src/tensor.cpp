#include "tadet/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace tadet {

Tensor::Tensor(int channels, int length, double fill)
    : channels_(channels), length_(length) {
  if (channels < 1 || length < 1)
    throw std::invalid_argument("tensor shape [" + std::to_string(channels) + " x " +
                                std::to_string(length) + "] is invalid; both dims must be >= 1");
  data_.assign(static_cast<std::size_t>(channels) * length, fill);
}

Tensor Tensor::scalar(double v) {
  Tensor t(1, 1);
  t.data_[0] = v;
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("Tensor::row needs at least one value");
  Tensor t(1, static_cast<int>(values.size()));
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("Tensor::from_rows needs at least one row");
  const std::size_t len = rows.front().size();
  Tensor t(static_cast<int>(rows.size()), static_cast<int>(len));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    if (rows[c].size() != len)
      throw std::invalid_argument("Tensor::from_rows: ragged rows");
    for (std::size_t i = 0; i < len; ++i) t.data_[c * len + i] = rows[c][i];
  }
  return t;
}

std::string Tensor::shape_str() const {
  return "[" + std::to_string(channels_) + " x " + std::to_string(length_) + "]";
}

double Tensor::item() const {
  if (channels_ != 1 || length_ != 1)
    throw std::logic_error("item() requires a 1x1 tensor, got " + shape_str());
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::vector<double>& Tensor::grad() {
  if (!grad_) grad_.emplace(data_.size(), 0.0);
  return *grad_;
}

const std::vector<double>& Tensor::grad() const {
  if (!grad_) throw std::logic_error("gradient requested but never populated");
  return *grad_;
}

void Tensor::zero_grad() {
  if (!grad_)
    grad_.emplace(data_.size(), 0.0);
  else
    grad_->assign(data_.size(), 0.0);
}

std::vector<double> softmax(const std::vector<double>& scores) {
  if (scores.empty()) throw std::invalid_argument("softmax of an empty vector");
  double m = scores[0];
  for (double s : scores) m = std::max(m, s);
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - m);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace tadet
