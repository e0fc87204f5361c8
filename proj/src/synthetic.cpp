#include "perturbench/synthetic.hpp"

#include <cmath>
#include <sstream>

#include "perturbench/rng.hpp"

namespace perturbench {
namespace {

constexpr char kToyLetters[] = "ABCDENOSTU";
constexpr double kTau = 2.0 * 3.14159265358979323846;

double letter_frequency(int letter_index) {
  return 350.0 + 170.0 * letter_index;
}

void append_segment(std::vector<double>& out, char c, int samples,
                    int sample_rate, double amplitude, Rng& rng) {
  if (c == ' ') {
    out.insert(out.end(), static_cast<std::size_t>(samples), 0.0);
    return;
  }
  const std::string_view letters(kToyLetters);
  const auto pos = letters.find(c);
  const double f = letter_frequency(static_cast<int>(pos));
  const double phase = rng.uniform() * kTau;
  const double a = amplitude * (1.0 + 0.1 * (rng.uniform() - 0.5));
  for (int t = 0; t < samples; ++t) {
    const double arg = kTau * f * t / sample_rate + phase;
    out.push_back(a * std::sin(arg) + 0.35 * a * std::sin(2.0 * arg + 1.7 * phase));
  }
}

}  // namespace

const std::vector<std::string>& toy_word_list() {
  static const std::vector<std::string> words = {
      "SUN",   "SEA",   "TOAST", "BEAN",  "DUNE",  "STONE",
      "CANOE", "SOUND", "OCEAN", "DANCE", "SCOUT", "NOTES",
  };
  return words;
}

TargetCorpus toy_target_corpus() {
  TargetCorpus corpus;
  corpus.candidates = {
      "SUN SEA",
      "TUNA BOAT",
      "DUNE DANCE",
      "STONE CANOE",
      "SEA AND SAND",
      "DANCE ON A DUNE",
      "NOTES ON A COAST",
      "SUN AND SEA SOUND",
      "A CANOE ON AN OCEAN",
  };
  corpus.validate();
  return corpus;
}

std::vector<AudioSample> make_synthetic_audio(const SyntheticAudioConfig& config) {
  if (config.count < 1 || config.samples_per_char < 1 || config.sample_rate < 1 ||
      config.min_words < 1 || config.max_words < config.min_words)
    throw std::invalid_argument("make_synthetic_audio: bad config");
  const auto& words = toy_word_list();
  Rng rng = Rng(config.seed).child("synthetic-audio");
  std::vector<AudioSample> samples;
  samples.reserve(static_cast<std::size_t>(config.count));
  for (int i = 0; i < config.count; ++i) {
    const int n_words =
        config.min_words +
        static_cast<int>(rng.below(
            static_cast<std::uint64_t>(config.max_words - config.min_words + 1)));
    std::string transcript;
    for (int w = 0; w < n_words; ++w) {
      if (w > 0) transcript += ' ';
      transcript += words[rng.below(words.size())];
    }

    std::vector<double> wave;
    wave.reserve(transcript.size() * static_cast<std::size_t>(config.samples_per_char));
    for (char c : transcript)
      append_segment(wave, c, config.samples_per_char, config.sample_rate,
                     config.amplitude, rng);

    AudioSample sample;
    std::ostringstream id;
    id << "utt-" << i;
    sample.id = id.str();
    sample.transcript = transcript;
    sample.sample_rate = config.sample_rate;
    sample.waveform.resize(static_cast<Eigen::Index>(wave.size()));
    for (std::size_t t = 0; t < wave.size(); ++t)
      sample.waveform(static_cast<Eigen::Index>(t)) =
          wave[t] + config.noise_level * rng.normal();
    samples.push_back(std::move(sample));
  }
  return samples;
}

std::vector<LabeledImage> make_synthetic_images(const SyntheticImageConfig& config) {
  if (config.count < 1 || config.classes < 1 || config.image_h < 1 || config.image_w < 1)
    throw std::invalid_argument("make_synthetic_images: bad config");
  const Eigen::Index pixels =
      static_cast<Eigen::Index>(config.image_h) * config.image_w;
  Rng rng = Rng(config.seed).child("synthetic-images");

  std::vector<Waveform> templates(static_cast<std::size_t>(config.classes));
  for (auto& t : templates) {
    t.resize(pixels);
    for (Eigen::Index p = 0; p < pixels; ++p) t(p) = rng.uniform();
  }

  std::vector<LabeledImage> images;
  images.reserve(static_cast<std::size_t>(config.count));
  for (int i = 0; i < config.count; ++i) {
    LabeledImage image;
    image.label = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.classes)));
    std::ostringstream id;
    id << "img-" << i;
    image.id = id.str();
    image.pixels.resize(pixels);
    const Waveform& base = templates[static_cast<std::size_t>(image.label)];
    for (Eigen::Index p = 0; p < pixels; ++p) {
      const double v = base(p) + config.noise_level * rng.normal();
      image.pixels(p) = std::min(std::max(v, 0.0), 1.0);
    }
    images.push_back(std::move(image));
  }
  return images;
}

}  // namespace perturbench
