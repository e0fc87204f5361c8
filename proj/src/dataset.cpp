#include "perturbench/dataset.hpp"

#include <fstream>
#include <json.hpp>

#include "perturbench/wav.hpp"

namespace perturbench {

void write_clean_dataset(const std::vector<AudioSample>& samples,
                         const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory / "audio");
  std::ofstream manifest(directory / "manifest.jsonl");
  if (!manifest)
    throw std::runtime_error("cannot write manifest in " + directory.string());
  for (const AudioSample& sample : samples) {
    if (sample.id.empty() || sample.id.find('/') != std::string::npos ||
        sample.id.find('\\') != std::string::npos)
      throw std::invalid_argument("write_clean_dataset: unusable sample id '" +
                                  sample.id + "'");
    const std::string rel = "audio/" + sample.id + ".wav";
    write_wav(directory / rel, sample.waveform, sample.sample_rate);
    const nlohmann::json j{{"id", sample.id},
                           {"path", rel},
                           {"transcript", sample.transcript},
                           {"sample_rate", sample.sample_rate}};
    manifest << j.dump() << '\n';
  }
}

std::vector<AudioSample> load_clean_dataset(const std::filesystem::path& directory) {
  std::ifstream manifest(directory / "manifest.jsonl");
  if (!manifest)
    throw std::runtime_error("load_clean_dataset: no manifest.jsonl in " +
                             directory.string());
  std::vector<AudioSample> samples;
  std::string line;
  int line_number = 0;
  while (std::getline(manifest, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      AudioSample sample;
      sample.id = j.at("id").get<std::string>();
      sample.transcript = j.at("transcript").get<std::string>();
      sample.sample_rate = j.at("sample_rate").get<int>();
      const WavData wav = read_wav(directory / j.at("path").get<std::string>());
      if (wav.sample_rate != sample.sample_rate)
        throw std::runtime_error("sample rate disagrees with manifest");
      sample.waveform = wav.samples;
      samples.push_back(std::move(sample));
    } catch (const std::exception& e) {
      throw std::runtime_error("manifest line " + std::to_string(line_number) +
                               ": " + e.what());
    }
  }
  return samples;
}

void write_labeled_images(const std::vector<LabeledImage>& images, int image_h,
                          int image_w, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  nlohmann::json rows = nlohmann::json::array();
  for (const LabeledImage& image : images) {
    if (image.pixels.size() != static_cast<Eigen::Index>(image_h) * image_w)
      throw std::invalid_argument("write_labeled_images: pixel count mismatch on '" +
                                  image.id + "'");
    std::vector<double> pixels(image.pixels.data(),
                               image.pixels.data() + image.pixels.size());
    rows.push_back({{"id", image.id}, {"label", image.label}, {"pixels", pixels}});
  }
  const nlohmann::json j{{"type", "labeled_images"},
                         {"image_h", image_h},
                         {"image_w", image_w},
                         {"images", rows}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<LabeledImage> load_labeled_images(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_labeled_images: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_labeled_images: " + path.string() +
                             " is not valid JSON: " + e.what());
  }
  if (j.value("type", "") != "labeled_images")
    throw std::runtime_error("load_labeled_images: " + path.string() +
                             " is not a labeled image file");
  const int image_h = j.at("image_h").get<int>();
  const int image_w = j.at("image_w").get<int>();
  std::vector<LabeledImage> images;
  for (const auto& row : j.at("images")) {
    LabeledImage image;
    image.id = row.at("id").get<std::string>();
    image.label = row.at("label").get<int>();
    const auto pixels = row.at("pixels").get<std::vector<double>>();
    if (pixels.size() != static_cast<std::size_t>(image_h) * image_w)
      throw std::runtime_error("load_labeled_images: pixel count mismatch on '" +
                               image.id + "'");
    image.pixels = Eigen::Map<const Eigen::VectorXd>(
        pixels.data(), static_cast<Eigen::Index>(pixels.size()));
    images.push_back(std::move(image));
  }
  return images;
}

}  // namespace perturbench
