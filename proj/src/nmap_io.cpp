#include "arecon/nmap_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "arecon/fileio.hpp"

namespace arecon {
namespace {

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
    const auto* p = reinterpret_cast<const char*>(&v);
    out_.append(p, sizeof(T));
  }
  template <typename T>
  void put_all(const std::vector<T>& values) {
    for (const auto& v : values) put(v);
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > in_.size()) throw Error("nmap: truncated file");
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }
  template <typename T>
  std::vector<T> get_n(std::size_t n) {
    if (n > (in_.size() - pos_) / sizeof(T)) throw Error("nmap: truncated file");
    std::vector<T> out(n);
    for (auto& v : out) v = get<T>();
    return out;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename into " + path.string() + ": " + ec.message());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string encode_nmap(const MapBundle& b) {
  const std::size_t px = b.pixels();
  if (b.pose.size() != b.num_joints || b.coords.size() != px * 3 || b.mask.size() != px ||
      b.part_labels.size() != px || b.votes.size() != px * b.num_joints * 6 ||
      b.confidences.size() != px * b.num_joints || b.features.size() != px * b.channels) {
    throw Error("nmap: bundle arrays do not match header dimensions");
  }
  Writer w;
  w.raw("NMAP");
  w.put(kNmapVersion);
  w.put(b.height);
  w.put(b.width);
  w.put(b.num_joints);
  w.put(b.num_parts);
  w.put(b.channels);
  w.put_all(b.pose);
  w.put_all(b.coords);
  w.put_all(b.mask);
  w.put_all(b.part_labels);
  w.put_all(b.votes);
  w.put_all(b.confidences);
  w.put_all(b.features);
  return w.take();
}

MapBundle decode_nmap(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "NMAP") throw Error("nmap: bad magic");
  Reader r(bytes.substr(4));
  const auto version = r.get<std::uint32_t>();
  if (version != kNmapVersion) throw Error("nmap: unsupported version " + std::to_string(version));
  MapBundle b;
  b.height = r.get<std::uint32_t>();
  b.width = r.get<std::uint32_t>();
  b.num_joints = r.get<std::uint32_t>();
  b.num_parts = r.get<std::uint32_t>();
  b.channels = r.get<std::uint32_t>();
  const std::size_t px = b.pixels();
  b.pose = r.get_n<float>(b.num_joints);
  b.coords = r.get_n<float>(px * 3);
  b.mask = r.get_n<std::uint8_t>(px);
  b.part_labels = r.get_n<std::uint16_t>(px);
  b.votes = r.get_n<float>(px * b.num_joints * 6);
  b.confidences = r.get_n<float>(px * b.num_joints);
  b.features = r.get_n<float>(px * b.channels);
  if (!r.done()) throw Error("nmap: trailing bytes");
  return b;
}

void write_nmap(const std::filesystem::path& path, const MapBundle& bundle) {
  write_file_atomic(path, encode_nmap(bundle));
}

MapBundle read_nmap(const std::filesystem::path& path) { return decode_nmap(read_file(path)); }

}  // namespace arecon
