#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tadet/rng.hpp"
#include "tadet/tensor.hpp"

namespace tadet {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'D', 'S', 'S', 'D'};

// One learnable tensor plus its Adam state. The value tensor's gradient slot
// carries the accumulated gradient between backward() and the next step.
struct ParamEntry {
  Tensor value;
  Tensor m;
  Tensor v;
  std::uint64_t step = 0;
};

class ParamStore {
 public:
  // Uniform [-s, s] with s = sqrt(6 / (fan_in + fan_out)).
  Tensor& create_uniform(const std::string& name, int channels, int length, int fan_in,
                         int fan_out, Rng& rng);
  Tensor& create_zero(const std::string& name, int channels, int length);

  bool contains(const std::string& name) const;
  const Tensor& value(const std::string& name) const;
  Tensor& value(const std::string& name);
  ParamEntry& entry(const std::string& name);
  const ParamEntry& entry(const std::string& name) const;

  void accumulate_grad(const std::string& name, const Tensor& grad);
  void clear_grads();

  std::vector<std::string> names() const;  // lexicographic
  std::size_t num_params() const { return entries_.size(); }
  std::size_t total_scalars() const;

  std::map<std::string, ParamEntry>& entries() { return entries_; }
  const std::map<std::string, ParamEntry>& entries() const { return entries_; }

 private:
  std::map<std::string, ParamEntry> entries_;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One Adam update over every parameter; requires every parameter to carry a
// populated gradient (state error otherwise) and clears gradients afterwards.
void adam_step(ParamStore& store, const AdamConfig& cfg);

// Binary checkpoint: magic "DSSD", format version u32, then for each parameter
// in lexicographic name order: name (u32 length + bytes), u32 ndims (always 2),
// u32 channels, u32 length, f64 values, f64 first moments, f64 second moments,
// f64 step counter. All fields little-endian. Written atomically.
void save_checkpoint(const ParamStore& store, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

}  // namespace tadet
