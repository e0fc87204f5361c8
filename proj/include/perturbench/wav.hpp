#ifndef PERTURBENCH_WAV_HPP
#define PERTURBENCH_WAV_HPP

#include <filesystem>

#include "perturbench/types.hpp"

namespace perturbench {

struct WavData {
  Waveform samples;
  int sample_rate = 0;
};

// 16-bit PCM mono. Samples are scaled by 32767 and rounded; values outside
// [-1, 1] are clamped. Reading divides by 32767, so a write/read round trip
// moves a sample by at most half an LSB.
void write_wav(const std::filesystem::path& path, const Waveform& samples,
               int sample_rate);
WavData read_wav(const std::filesystem::path& path);

}  // namespace perturbench

#endif  // PERTURBENCH_WAV_HPP
