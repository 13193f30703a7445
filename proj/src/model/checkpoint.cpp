#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <zlib.h>

#include "emssl/model/model.hpp"

// Layout (little-endian):
//   "EMSSLCK\0" | u32 version | u64 config hash | u32 len + config text |
//   u64 adam step | u32 tensor count | per tensor: u32 len + name, u32 rank,
//   u64 dims..., u64 count, f32 data... | u32 crc32 of everything before it.
// Adam moments are stored as tensors named "adam.m.<name>" / "adam.v.<name>".

namespace emssl::model {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'E', 'M', 'S', 'S', 'L', 'C', 'K', '\0'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void put_floats(std::span<const float> v) {
    const auto* p = reinterpret_cast<const char*>(v.data());
    buf_.insert(buf_.end(), p, p + v.size_bytes());
  }
  std::vector<char>& bytes() { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<char>& buf, std::size_t end, std::string path) : buf_(buf), end_(end), path_(std::move(path)) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void get_floats(float* out, std::size_t n) {
    need(n * sizeof(float));
    std::memcpy(out, buf_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw IoError(path_ + ": checkpoint is truncated");
  }
  const std::vector<char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string path_;
};

std::uint32_t checksum(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void put_tensor(Writer& w, const std::string& name, const std::vector<std::size_t>& shape, std::span<const float> data) {
  w.put_string(name);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) w.put<std::uint64_t>(d);
  w.put<std::uint64_t>(data.size());
  w.put_floats(data);
}

}  // namespace

void save_checkpoint(const RegressorModel& m, const std::filesystem::path& path) {
  Writer w;
  w.bytes().insert(w.bytes().end(), std::begin(kMagic), std::end(kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(m.config().hash());
  w.put_string(m.config().to_text());
  w.put<std::uint64_t>(m.adam().step);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(3 * m.tensors().size()));
  const auto values = m.values();
  for (const auto& t : m.tensors()) put_tensor(w, t.name, t.shape, values.subspan(t.offset, t.size));
  for (const auto& t : m.tensors()) {
    put_tensor(w, "adam.m." + t.name, t.shape, std::span<const float>(m.adam().m).subspan(t.offset, t.size));
  }
  for (const auto& t : m.tensors()) {
    put_tensor(w, "adam.v." + t.name, t.shape, std::span<const float>(m.adam().v).subspan(t.offset, t.size));
  }
  w.put<std::uint32_t>(checksum(w.bytes().data(), w.bytes().size()));

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RegressorModel load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (buf.size() < sizeof(kMagic) + 4 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError(name + ": not a checkpoint file");
  }
  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
  if (checksum(buf.data(), buf.size() - 4) != stored_crc) throw IoError(name + ": checksum mismatch (corrupt or truncated)");

  Reader r(buf, buf.size() - 4, name);
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.get<char>();
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw IoError(fmt::format("{}: checkpoint version {} is not supported (expected {})", name, version,
                              kCheckpointVersion));
  }
  const auto hash = r.get<std::uint64_t>();
  const auto cfg = ModelConfig::from_text(r.get_string());
  if (cfg.hash() != hash) throw IoError(name + ": config hash does not match the stored config");
  if (expected && expected->hash() != hash) {
    throw IoError(name + ": checkpoint was written for a different model config");
  }
  RegressorModel m(cfg);
  m.adam().step = r.get<std::uint64_t>();
  const auto count = r.get<std::uint32_t>();
  if (count != 3 * m.tensors().size()) throw IoError(name + ": unexpected tensor count");
  std::vector<float> values(m.parameter_count());
  auto& st = m.adam();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto& t = m.tensors()[i % m.tensors().size()];
    const char* prefix = i < m.tensors().size() ? "" : (i < 2 * m.tensors().size() ? "adam.m." : "adam.v.");
    const auto tname = r.get_string();
    if (tname != prefix + t.name) throw IoError(name + ": expected tensor " + prefix + t.name + ", found " + tname);
    const auto rank = r.get<std::uint32_t>();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = r.get<std::uint64_t>();
    if (shape != t.shape) throw IoError(name + ": shape mismatch for " + tname);
    const auto n = r.get<std::uint64_t>();
    if (n != t.size) throw IoError(name + ": size mismatch for " + tname);
    float* dst = i < m.tensors().size() ? values.data() : (i < 2 * m.tensors().size() ? st.m.data() : st.v.data());
    r.get_floats(dst + t.offset, n);
  }
  if (!r.done()) throw IoError(name + ": trailing bytes after tensors");
  m.set_values(values);
  return m;
}

}  // namespace emssl::model
