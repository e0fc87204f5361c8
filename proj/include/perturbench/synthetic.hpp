#ifndef PERTURBENCH_SYNTHETIC_HPP
#define PERTURBENCH_SYNTHETIC_HPP

#include <vector>

#include "perturbench/targets.hpp"
#include "perturbench/types.hpp"

namespace perturbench {

// Tone-coded speech stand-in: each letter of the toy alphabet maps to a
// fixed sine voice, spaces to silence, with per-segment phase jitter and a
// low noise floor. Deterministic in the seed.
struct SyntheticAudioConfig {
  int count = 30;
  int sample_rate = 8000;
  int samples_per_char = 160;
  double amplitude = 0.22;
  double noise_level = 0.004;
  int min_words = 2;
  int max_words = 3;
  std::uint64_t seed = 0;
};

std::vector<AudioSample> make_synthetic_audio(const SyntheticAudioConfig& config);

// Images drawn as a fixed random template per class plus pixel noise,
// clamped to [0, 1].
struct SyntheticImageConfig {
  int count = 60;
  int image_h = 16;
  int image_w = 16;
  int classes = 10;
  double noise_level = 0.06;
  std::uint64_t seed = 0;
};

std::vector<LabeledImage> make_synthetic_images(const SyntheticImageConfig& config);

// Words spellable in the toy sequence alphabet.
const std::vector<std::string>& toy_word_list();

// Candidate attack targets spellable in the toy sequence alphabet.
TargetCorpus toy_target_corpus();

}  // namespace perturbench

#endif  // PERTURBENCH_SYNTHETIC_HPP
