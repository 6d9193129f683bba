#include "tadet/params.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "tadet/errors.hpp"
#include "tadet/serialize.hpp"

namespace tadet {

Tensor& ParamStore::create_uniform(const std::string& name, int channels, int length, int fan_in,
                                   int fan_out, Rng& rng) {
  if (entries_.count(name)) throw std::logic_error("parameter '" + name + "' already exists");
  if (fan_in < 1 || fan_out < 1)
    throw std::invalid_argument("parameter '" + name + "': fan_in and fan_out must be >= 1");
  ParamEntry e;
  e.value = Tensor(channels, length);
  const double s = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : e.value.data()) v = rng.uniform(-s, s);
  e.m = Tensor(channels, length);
  e.v = Tensor(channels, length);
  return entries_.emplace(name, std::move(e)).first->second.value;
}

Tensor& ParamStore::create_zero(const std::string& name, int channels, int length) {
  if (entries_.count(name)) throw std::logic_error("parameter '" + name + "' already exists");
  ParamEntry e;
  e.value = Tensor(channels, length);
  e.m = Tensor(channels, length);
  e.v = Tensor(channels, length);
  return entries_.emplace(name, std::move(e)).first->second.value;
}

bool ParamStore::contains(const std::string& name) const { return entries_.count(name) > 0; }

const Tensor& ParamStore::value(const std::string& name) const { return entry(name).value; }
Tensor& ParamStore::value(const std::string& name) { return entry(name).value; }

ParamEntry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::invalid_argument("unknown parameter '" + name + "'");
  return it->second;
}

const ParamEntry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::invalid_argument("unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::accumulate_grad(const std::string& name, const Tensor& grad) {
  ParamEntry& e = entry(name);
  if (!e.value.same_shape(grad))
    throw std::invalid_argument("gradient shape " + grad.shape_str() + " does not match '" +
                                name + "' " + e.value.shape_str());
  std::vector<double>& g = e.value.grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += grad.data()[i];
}

void ParamStore::clear_grads() {
  for (auto& [name, e] : entries_) e.value.clear_grad();
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::size_t ParamStore::total_scalars() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  if (store.entries().empty()) throw std::logic_error("adam_step on an empty parameter store");
  for (const auto& [name, e] : store.entries())
    if (!e.value.has_grad())
      throw std::logic_error("adam_step: parameter '" + name + "' has no populated gradient");

  for (auto& [name, e] : store.entries()) {
    e.step += 1;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(e.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(e.step));
    const std::vector<double>& g = e.value.grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      e.m.data()[i] = cfg.beta1 * e.m.data()[i] + (1.0 - cfg.beta1) * g[i];
      e.v.data()[i] = cfg.beta2 * e.v.data()[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = e.m.data()[i] / c1;
      const double v_hat = e.v.data()[i] / c2;
      e.value.data()[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
  store.clear_grads();
}

void save_checkpoint(const ParamStore& store, const std::string& path) {
  ByteWriter w;
  w.raw(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  for (const auto& [name, e] : store.entries()) {
    w.str(name);
    w.u32(2);
    w.u32(static_cast<std::uint32_t>(e.value.channels()));
    w.u32(static_cast<std::uint32_t>(e.value.length()));
    for (double v : e.value.data()) w.f64(v);
    for (double v : e.m.data()) w.f64(v);
    for (double v : e.v.data()) w.f64(v);
    w.f64(static_cast<double>(e.step));
  }
  atomic_write_file(path, w.take());
}

ParamStore load_checkpoint(const std::string& path) {
  ByteReader r(read_file_bytes(path), "checkpoint " + path);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw ParseError("checkpoint " + path + ": bad magic, not a checkpoint file");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw VersionError(version, kCheckpointVersion);

  ParamStore store;
  while (!r.at_end()) {
    const std::string name = r.str();
    if (name.empty()) throw ParseError("checkpoint " + path + ": empty parameter name");
    if (store.contains(name))
      throw ParseError("checkpoint " + path + ": duplicate parameter '" + name + "'");
    const std::uint32_t ndims = r.u32();
    if (ndims != 2)
      throw ParseError("checkpoint " + path + ": parameter '" + name + "' declares " +
                       std::to_string(ndims) + " dims, expected 2");
    const std::uint32_t channels = r.u32();
    const std::uint32_t length = r.u32();
    if (channels < 1 || length < 1 || channels > (1u << 24) || length > (1u << 24))
      throw ParseError("checkpoint " + path + ": parameter '" + name + "' has invalid shape");
    ParamEntry& e = store.entries()[name];
    e.value = Tensor(static_cast<int>(channels), static_cast<int>(length));
    e.m = Tensor(static_cast<int>(channels), static_cast<int>(length));
    e.v = Tensor(static_cast<int>(channels), static_cast<int>(length));
    for (double& v : e.value.data()) v = r.f64();
    for (double& v : e.m.data()) v = r.f64();
    for (double& v : e.v.data()) v = r.f64();
    const double step = r.f64();
    if (!(step >= 0.0) || step != std::floor(step))
      throw ParseError("checkpoint " + path + ": parameter '" + name +
                       "' has a non-integral step counter");
    e.step = static_cast<std::uint64_t>(step);
  }
  r.expect_end();
  return store;
}

}  // namespace tadet
