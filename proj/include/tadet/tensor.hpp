#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace tadet {

// Dense rank-2 real array: channels x length, row-major by channel, double
// precision. Carries an optional gradient buffer of identical shape.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int length, double fill = 0.0);

  static Tensor scalar(double v);
  static Tensor row(std::vector<double> values);
  static Tensor from_rows(const std::vector<std::vector<double>>& rows);

  int channels() const { return channels_; }
  int length() const { return length_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int c, int t) { return data_[static_cast<std::size_t>(c) * length_ + t]; }
  double at(int c, int t) const { return data_[static_cast<std::size_t>(c) * length_ + t]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor& other) const {
    return channels_ == other.channels_ && length_ == other.length_;
  }
  std::string shape_str() const;

  // Value of a 1x1 tensor; throws std::logic_error otherwise.
  double item() const;

  bool all_finite() const;

  // Gradient slot.
  bool has_grad() const { return grad_.has_value(); }
  std::vector<double>& grad();              // allocates zeros on first use
  const std::vector<double>& grad() const;  // throws std::logic_error if absent
  void zero_grad();
  void clear_grad() { grad_.reset(); }

 private:
  int channels_ = 0;
  int length_ = 0;
  std::vector<double> data_;
  std::optional<std::vector<double>> grad_;
};

// Numerically stable softmax of a score vector (max-subtracted exponentials).
std::vector<double> softmax(const std::vector<double>& scores);

// Stable logistic squashing.
double logistic(double x);

}  // namespace tadet
