#ifndef PERTURBENCH_DATASET_HPP
#define PERTURBENCH_DATASET_HPP

#include <filesystem>
#include <vector>

#include "perturbench/types.hpp"

namespace perturbench {

// Clean (unperturbed) audio dataset on disk: manifest.jsonl with one record
// {id, path, transcript, sample_rate} per line, wav files under audio/.
void write_clean_dataset(const std::vector<AudioSample>& samples,
                         const std::filesystem::path& directory);
std::vector<AudioSample> load_clean_dataset(const std::filesystem::path& directory);

// Labeled image set as a single JSON file; pixel counts are validated
// against the stored height and width.
void write_labeled_images(const std::vector<LabeledImage>& images, int image_h,
                          int image_w, const std::filesystem::path& path);
std::vector<LabeledImage> load_labeled_images(const std::filesystem::path& path);

}  // namespace perturbench

#endif  // PERTURBENCH_DATASET_HPP
