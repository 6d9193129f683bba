#include "tadet/serialize.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "tadet/errors.hpp"

namespace tadet {

namespace {

template <typename T>
void append_le(std::string& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(const std::string& buf, std::size_t pos) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, buf.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace

void ByteWriter::u32(std::uint32_t v) { append_le(out_, v); }
void ByteWriter::u64(std::uint64_t v) { append_le(out_, v); }
void ByteWriter::f32(float v) { append_le(out_, v); }
void ByteWriter::f64(double v) { append_le(out_, v); }
void ByteWriter::raw(const void* data, std::size_t n) {
  out_.append(static_cast<const char*>(data), n);
}
void ByteWriter::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  out_.append(s);
}

ByteReader::ByteReader(std::string bytes, std::string context)
    : buf_(std::move(bytes)), context_(std::move(context)) {}

void ByteReader::need(std::size_t n) const {
  if (pos_ + n > buf_.size())
    throw ParseError(context_ + ": truncated (needed " + std::to_string(n) + " bytes at offset " +
                     std::to_string(pos_) + ", file has " + std::to_string(buf_.size()) + ")");
}

std::uint32_t ByteReader::u32() {
  need(4);
  auto v = read_le<std::uint32_t>(buf_, pos_);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  auto v = read_le<std::uint64_t>(buf_, pos_);
  pos_ += 8;
  return v;
}

float ByteReader::f32() {
  need(4);
  auto v = read_le<float>(buf_, pos_);
  pos_ += 4;
  return v;
}

double ByteReader::f64() {
  need(8);
  auto v = read_le<double>(buf_, pos_);
  pos_ += 8;
  return v;
}

std::string ByteReader::str() {
  const std::uint32_t n = u32();
  need(n);
  std::string s = buf_.substr(pos_, n);
  pos_ += n;
  return s;
}

void ByteReader::raw(void* dst, std::size_t n) {
  need(n);
  std::memcpy(dst, buf_.data() + pos_, n);
  pos_ += n;
}

void ByteReader::expect_end() const {
  if (pos_ != buf_.size())
    throw ParseError(context_ + ": " + std::to_string(buf_.size() - pos_) +
                     " trailing bytes after the declared payload");
}

void atomic_write_file(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace tadet
