#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tadet {

// Little-endian byte packing for the binary file formats.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void raw(const void* data, std::size_t n);
  void str(const std::string& s);  // u32 length prefix + bytes

  const std::string& bytes() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

// Cursor over a byte buffer; throws ParseError on truncation. `context` names
// the file kind in error messages.
class ByteReader {
 public:
  ByteReader(std::string bytes, std::string context);

  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string str();
  void raw(void* dst, std::size_t n);

  bool at_end() const { return pos_ == buf_.size(); }
  std::size_t remaining() const { return buf_.size() - pos_; }
  // Throws ParseError if any bytes are left over.
  void expect_end() const;

 private:
  void need(std::size_t n) const;

  std::string buf_;
  std::size_t pos_ = 0;
  std::string context_;
};

// Write-then-rename so readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& bytes);
std::string read_file_bytes(const std::string& path);

}  // namespace tadet
