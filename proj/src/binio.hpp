#pragma once

// Little-endian byte packing shared by the binary formats.

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "arecon/mesh.hpp"

namespace arecon::binio {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    v = to_little(v);
    out_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view in, std::string what) : in_(in), what_(std::move(what)) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > in_.size()) throw Error(what_ + ": truncated data");
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }
  std::string_view raw(std::size_t n) {
    if (pos_ + n > in_.size()) throw Error(what_ + ": truncated data");
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  // Reads through the next '\n' and returns the line without it.
  std::string_view line() {
    const auto end = in_.find('\n', pos_);
    if (end == std::string_view::npos) throw Error(what_ + ": truncated header");
    auto s = in_.substr(pos_, end - pos_);
    pos_ = end + 1;
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace arecon::binio
