#include "uap/wav.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "uap/errors.hpp"

namespace uap {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

double pcm_to_unit(std::int16_t s) { return (static_cast<double>(s) / 32768.0 + 1.0) / 2.0; }

std::int16_t unit_to_pcm(double x) {
  const double scaled = std::round((2.0 * x - 1.0) * 32768.0);
  if (scaled >= 32767.0) return 32767;
  if (scaled <= -32768.0) return -32768;
  return static_cast<std::int16_t>(scaled);
}

AudioSample load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open WAV file: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file: " + path.string());
  }

  bool have_fmt = false;
  int sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    if (pos + 8 + size > bytes.size()) throw FormatError("truncated WAV chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("WAV fmt chunk too small");
      const std::uint16_t format = read_u16(chunk + 8);
      const std::uint16_t channels = read_u16(chunk + 10);
      const std::uint16_t bits = read_u16(chunk + 22);
      if (format != 1) throw FormatError("WAV is not PCM");
      if (channels != 1) throw FormatError("WAV is not mono");
      if (bits != 16) throw FormatError("WAV is not 16-bit");
      sample_rate = static_cast<int>(read_u32(chunk + 12));
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = size;
    }
    pos += 8 + size + (size & 1u);
  }
  if (!have_fmt || data == nullptr) throw FormatError("WAV missing fmt or data chunk");
  if (data_size % 2 != 0 || data_size == 0) throw FormatError("WAV data chunk has bad size");

  AudioSample sample;
  sample.sample_rate = sample_rate;
  sample.samples.resize(data_size / 2);
  for (std::size_t i = 0; i < sample.samples.size(); ++i) {
    const auto raw = static_cast<std::int16_t>(read_u16(data + 2 * i));
    sample.samples[i] = pcm_to_unit(raw);
  }
  return sample;
}

void save_wav(const AudioSample& sample, const std::filesystem::path& path) {
  constexpr std::uint32_t rate = kDefaultSampleRate;
  const auto data_bytes = static_cast<std::uint32_t>(sample.samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double x : sample.samples) put_u16(out, static_cast<std::uint16_t>(unit_to_pcm(x)));

  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write WAV file: " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

}  // namespace uap
