#include "perturbench/wav.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace perturbench {
namespace {

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_wav(const std::filesystem::path& path, const Waveform& samples,
               int sample_rate) {
  if (sample_rate < 1) throw std::invalid_argument("write_wav: bad sample rate");
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size()) * 2;

  std::vector<unsigned char> bytes;
  bytes.reserve(44 + data_bytes);
  bytes.insert(bytes.end(), {'R', 'I', 'F', 'F'});
  put_u32(bytes, 36 + data_bytes);
  bytes.insert(bytes.end(), {'W', 'A', 'V', 'E'});
  bytes.insert(bytes.end(), {'f', 'm', 't', ' '});
  put_u32(bytes, 16);
  put_u16(bytes, 1);  // PCM
  put_u16(bytes, 1);  // mono
  put_u32(bytes, static_cast<std::uint32_t>(sample_rate));
  put_u32(bytes, static_cast<std::uint32_t>(sample_rate) * 2);
  put_u16(bytes, 2);   // block align
  put_u16(bytes, 16);  // bits per sample
  bytes.insert(bytes.end(), {'d', 'a', 't', 'a'});
  put_u32(bytes, data_bytes);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    double v = samples(i);
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    const auto q = static_cast<std::int16_t>(std::lround(v * 32767.0));
    put_u16(bytes, static_cast<std::uint16_t>(q));
  }

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write wav: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write on wav: " + path.string());
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open wav: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  auto fail = [&](const std::string& why) -> std::runtime_error {
    return std::runtime_error("malformed wav " + path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::string(bytes.begin(), bytes.begin() + 4) != "RIFF" ||
      std::string(bytes.begin() + 8, bytes.begin() + 12) != "WAVE")
    throw fail("not a RIFF/WAVE file");

  WavData wav;
  bool got_fmt = false;
  std::size_t at = 12;
  while (at + 8 <= bytes.size()) {
    const std::string chunk_id(bytes.begin() + static_cast<std::ptrdiff_t>(at),
                               bytes.begin() + static_cast<std::ptrdiff_t>(at) + 4);
    const std::uint32_t chunk_size = get_u32(&bytes[at + 4]);
    at += 8;
    if (at + chunk_size > bytes.size()) throw fail("truncated chunk " + chunk_id);
    if (chunk_id == "fmt ") {
      if (chunk_size < 16) throw fail("short fmt chunk");
      if (get_u16(&bytes[at]) != 1) throw fail("not PCM");
      if (get_u16(&bytes[at + 2]) != 1) throw fail("not mono");
      wav.sample_rate = static_cast<int>(get_u32(&bytes[at + 4]));
      if (get_u16(&bytes[at + 14]) != 16) throw fail("not 16-bit");
      got_fmt = true;
    } else if (chunk_id == "data") {
      if (!got_fmt) throw fail("data chunk before fmt");
      const std::size_t n = chunk_size / 2;
      wav.samples.resize(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const auto q = static_cast<std::int16_t>(get_u16(&bytes[at + 2 * i]));
        wav.samples(static_cast<Eigen::Index>(i)) = q / 32767.0;
      }
      return wav;
    }
    at += chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }
  throw fail("no data chunk");
}

}  // namespace perturbench
