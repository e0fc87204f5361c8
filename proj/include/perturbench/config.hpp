#ifndef PERTURBENCH_CONFIG_HPP
#define PERTURBENCH_CONFIG_HPP

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "perturbench/types.hpp"

namespace perturbench {

// Declarative experiment configuration: file values override defaults, CLI
// overrides beat both. Unknown keys are rejected everywhere.
struct ExperimentConfig {
  // inputs
  std::string dataset_dir;
  std::string targets_file;
  std::vector<std::string> proxies;
  std::string validation;
  std::vector<std::string> models;
  std::string examples_dir;
  std::string images_file;
  std::string results_file;
  std::string report_format = "csv";
  std::string output_dir = "out";

  AttackConfig attack;
  std::uint64_t seed = 0;
  int workers = 1;

  // precision sweep
  std::vector<int> ks = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int sweep_inputs = 20;
  int repeats = 3;
  int steps_per_k = 1000;
  double sweep_learning_rate = 0.1;

  // prefix experiment
  std::string prefix_word = "BUT";
  double target_snr_db = 30.0;

  // toy pool training
  std::string arch = "both";  // toy_ctc | toy_classifier | both
  std::vector<std::uint64_t> pool_seeds = {2, 3, 4};
  bool shared_base = false;  // true: one base model, pool members fine-tuned from it
  int finetune_epochs = 15;
  int epochs = 80;
  double train_learning_rate = 0.002;
  double dropout_rate = 0.1;
  int audio_count = 30;
  int image_count = 60;

  // Applies one key from a config file or override; unknown key -> error.
  void set_key(const std::string& key, const nlohmann::json& value);
  // Parses "key=value"; the value is read as JSON when possible, else as a
  // bare string.
  void apply_override(const std::string& assignment);

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // Stable hex hash of every generation-relevant key (output location,
  // worker count and report selection excluded).
  std::string fingerprint() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace perturbench

#endif  // PERTURBENCH_CONFIG_HPP
