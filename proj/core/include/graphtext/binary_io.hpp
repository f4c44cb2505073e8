#pragma once

// Little-endian primitives shared by the binary file formats (features,
// similarity matrices, checkpoints).

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>

namespace graphtext::io {

class ByteWriter {
 public:
  void bytes(std::string_view b) { buf_.append(b); }
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f32(float v);

  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

/// Bounds-checked cursor over an in-memory buffer; every read past the end
/// throws DataError naming `what`.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  std::string_view bytes(std::size_t n);
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  float f32();

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::string_view data_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename, so readers never see a partial file.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace graphtext::io
