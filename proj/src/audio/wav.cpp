#include "emssl/audio/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "emssl/common.hpp"

namespace emssl {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV codec assumes a little-endian host");

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}
std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto fail = [&](const std::string& why) { return IoError(path.string() + ": " + why); };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // tolerate a truncated data chunk, reject anything else
      if (std::memcmp(chunk, "data", 4) != 0) throw fail("truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw fail("short fmt chunk");
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == 0xFFFE && size >= 26) format = read_u16(chunk + 32);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
    }
    pos = body + size + (size & 1u);
  }
  if (channels == 0 || rate == 0) throw fail("missing fmt chunk");
  if (data == nullptr) throw fail("missing data chunk");
  const bool is_float = format == 3;
  if (!(format == 1 || is_float)) throw fail("unsupported format tag " + std::to_string(format));
  if (is_float ? (bits != 32 && bits != 64) : (bits != 8 && bits != 16 && bits != 24 && bits != 32)) {
    throw fail("unsupported bit depth " + std::to_string(bits));
  }

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (f * channels + c) * width;
      double v = 0.0;
      if (is_float && bits == 32) {
        float x;
        std::memcpy(&x, p, 4);
        v = x;
      } else if (is_float) {
        std::memcpy(&v, p, 8);
      } else if (bits == 8) {
        v = (static_cast<double>(p[0]) - 128.0) / 128.0;
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(read_u16(p)) / 32768.0;
      } else if (bits == 24) {
        std::int32_t x = static_cast<std::int32_t>(p[0] | p[1] << 8 | p[2] << 16);
        if (x & 0x800000) x -= 0x1000000;
        v = x / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(read_u32(p)) / 2147483648.0;
      }
      acc += v;
    }
    w.samples[f] = acc / channels;
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  const auto rate = static_cast<std::uint32_t>(std::lround(w.sample_rate));
  std::string out;
  out.reserve(44 + 2 * n);
  out += "RIFF";
  put_u32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, 2 * n);
  for (double s : w.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0))));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

}  // namespace emssl
