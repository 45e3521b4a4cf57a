#include <confloc/wav.hpp>

#include <confloc/errors.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace confloc {
namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t off) {
  if (off + sizeof(T) > buf.size()) throw InputError("truncated WAV header");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

}  // namespace

void write_wav(const std::filesystem::path& path,
               const MultichannelRecording& recording, WavFormat format) {
  const auto channels = static_cast<std::uint16_t>(recording.num_channels());
  const auto frames = static_cast<std::uint32_t>(recording.num_samples());
  const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
  const std::uint16_t block = channels * (bits / 8);
  const auto rate = static_cast<std::uint32_t>(std::lround(recording.sample_rate));
  const std::uint32_t data_bytes = frames * block;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os.write("RIFF", 4);
  put<std::uint32_t>(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put<std::uint32_t>(os, 16);
  put<std::uint16_t>(os, format == WavFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  put<std::uint16_t>(os, channels);
  put<std::uint32_t>(os, rate);
  put<std::uint32_t>(os, rate * block);
  put<std::uint16_t>(os, block);
  put<std::uint16_t>(os, bits);
  os.write("data", 4);
  put<std::uint32_t>(os, data_bytes);

  const auto& s = recording.samples;
  for (Eigen::Index t = 0; t < s.cols(); ++t) {
    for (Eigen::Index ch = 0; ch < s.rows(); ++ch) {
      if (format == WavFormat::Pcm16) {
        const double v = std::clamp(s(ch, t), -1.0, 1.0);
        put<std::int16_t>(os, static_cast<std::int16_t>(std::lround(v * 32767.0)));
      } else {
        put<float>(os, static_cast<float>(s(ch, t)));
      }
    }
  }
  if (!os) throw InputError("failed writing " + path.string());
}

MultichannelRecording read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(is)),
                        std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw InputError(path.string() + " is not a RIFF/WAVE file");

  std::uint16_t tag = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;
  std::size_t off = 12;
  while (off + 8 <= buf.size()) {
    const std::string id(buf.data() + off, 4);
    const auto len = get<std::uint32_t>(buf, off + 4);
    const std::size_t body = off + 8;
    if (id == "fmt ") {
      tag = get<std::uint16_t>(buf, body);
      channels = get<std::uint16_t>(buf, body + 2);
      rate = get<std::uint32_t>(buf, body + 4);
      bits = get<std::uint16_t>(buf, body + 14);
      if (tag == kFormatExtensible) tag = get<std::uint16_t>(buf, body + 24);
    } else if (id == "data") {
      data_off = body;
      data_len = std::min<std::size_t>(len, buf.size() - body);
    }
    off = body + len + (len & 1U);
  }
  if (channels == 0 || data_off == 0)
    throw InputError(path.string() + " lacks fmt or data chunk");
  const bool pcm16 = tag == kFormatPcm && bits == 16;
  const bool f32 = tag == kFormatFloat && bits == 32;
  if (!pcm16 && !f32)
    throw InputError(path.string() +
                     ": only 16-bit PCM and 32-bit float WAV are supported");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_len / (width * channels);
  MultichannelRecording rec;
  rec.sample_rate = rate;
  rec.samples.resize(channels, static_cast<Eigen::Index>(frames));
  const char* p = buf.data() + data_off;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t ch = 0; ch < channels; ++ch, p += width) {
      double v;
      if (pcm16) {
        std::int16_t x;
        std::memcpy(&x, p, 2);
        v = x / 32767.0;
      } else {
        float x;
        std::memcpy(&x, p, 4);
        v = x;
      }
      rec.samples(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(t)) = v;
    }
  }
  return rec;
}

}  // namespace confloc
