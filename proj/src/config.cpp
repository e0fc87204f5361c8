#include "perturbench/config.hpp"

#include <fstream>
#include <sstream>

#include "perturbench/rng.hpp"

namespace perturbench {
namespace {

NormKind parse_norm(const std::string& name) {
  if (name == "linf") return NormKind::linf;
  if (name == "l2") return NormKind::l2;
  throw std::invalid_argument("config: norm must be \"linf\" or \"l2\", got \"" +
                              name + "\"");
}

std::string norm_name(NormKind norm) {
  return norm == NormKind::linf ? "linf" : "l2";
}

}  // namespace

void ExperimentConfig::set_key(const std::string& key, const nlohmann::json& value) {
  try {
    if (key == "dataset_dir") dataset_dir = value.get<std::string>();
    else if (key == "targets_file") targets_file = value.get<std::string>();
    else if (key == "proxies") proxies = value.get<std::vector<std::string>>();
    else if (key == "validation") validation = value.get<std::string>();
    else if (key == "models") models = value.get<std::vector<std::string>>();
    else if (key == "examples_dir") examples_dir = value.get<std::string>();
    else if (key == "images_file") images_file = value.get<std::string>();
    else if (key == "results_file") results_file = value.get<std::string>();
    else if (key == "report_format") report_format = value.get<std::string>();
    else if (key == "output_dir") output_dir = value.get<std::string>();
    else if (key == "epsilon") attack.linf_radius = value.get<double>();
    else if (key == "learning_rate") attack.learning_rate = value.get<double>();
    else if (key == "iterations") attack.iterations = value.get<int>();
    else if (key == "reg_const") attack.reg_const = value.get<double>();
    else if (key == "norm") attack.norm = parse_norm(value.get<std::string>());
    else if (key == "l2_radius") attack.l2_radius = value.get<double>();
    else if (key == "checkpoint_every") attack.checkpoint_every = value.get<int>();
    else if (key == "stochastic_proxy") attack.stochastic_proxy = value.get<bool>();
    else if (key == "clip_min") attack.clip_min = value.get<double>();
    else if (key == "clip_max") attack.clip_max = value.get<double>();
    else if (key == "seed") seed = value.get<std::uint64_t>();
    else if (key == "workers") workers = value.get<int>();
    else if (key == "ks") ks = value.get<std::vector<int>>();
    else if (key == "sweep_inputs") sweep_inputs = value.get<int>();
    else if (key == "repeats") repeats = value.get<int>();
    else if (key == "steps_per_k") steps_per_k = value.get<int>();
    else if (key == "sweep_learning_rate") sweep_learning_rate = value.get<double>();
    else if (key == "prefix_word") prefix_word = value.get<std::string>();
    else if (key == "target_snr_db") target_snr_db = value.get<double>();
    else if (key == "arch") arch = value.get<std::string>();
    else if (key == "pool_seeds") pool_seeds = value.get<std::vector<std::uint64_t>>();
    else if (key == "shared_base") shared_base = value.get<bool>();
    else if (key == "finetune_epochs") finetune_epochs = value.get<int>();
    else if (key == "epochs") epochs = value.get<int>();
    else if (key == "train_learning_rate") train_learning_rate = value.get<double>();
    else if (key == "dropout_rate") dropout_rate = value.get<double>();
    else if (key == "audio_count") audio_count = value.get<int>();
    else if (key == "image_count") image_count = value.get<int>();
    else throw std::invalid_argument("config: unknown key \"" + key + "\"");
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: bad value for \"" + key + "\": " + e.what());
  }
}

void ExperimentConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("config: override must look like key=value, got \"" +
                                assignment + "\"");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;  // bare strings need no quotes
  set_key(key, value);
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  ExperimentConfig config;
  for (const auto& [key, value] : j.items()) config.set_key(key, value);
  return config;
}

nlohmann::json ExperimentConfig::to_json() const {
  return {
      {"dataset_dir", dataset_dir},
      {"targets_file", targets_file},
      {"proxies", proxies},
      {"validation", validation},
      {"models", models},
      {"examples_dir", examples_dir},
      {"images_file", images_file},
      {"results_file", results_file},
      {"report_format", report_format},
      {"output_dir", output_dir},
      {"epsilon", attack.linf_radius},
      {"learning_rate", attack.learning_rate},
      {"iterations", attack.iterations},
      {"reg_const", attack.reg_const},
      {"norm", norm_name(attack.norm)},
      {"l2_radius", attack.l2_radius},
      {"checkpoint_every", attack.checkpoint_every},
      {"stochastic_proxy", attack.stochastic_proxy},
      {"clip_min", attack.clip_min},
      {"clip_max", attack.clip_max},
      {"seed", seed},
      {"workers", workers},
      {"ks", ks},
      {"sweep_inputs", sweep_inputs},
      {"repeats", repeats},
      {"steps_per_k", steps_per_k},
      {"sweep_learning_rate", sweep_learning_rate},
      {"prefix_word", prefix_word},
      {"target_snr_db", target_snr_db},
      {"arch", arch},
      {"pool_seeds", pool_seeds},
      {"shared_base", shared_base},
      {"finetune_epochs", finetune_epochs},
      {"epochs", epochs},
      {"train_learning_rate", train_learning_rate},
      {"dropout_rate", dropout_rate},
      {"audio_count", audio_count},
      {"image_count", image_count},
  };
}

std::string ExperimentConfig::fingerprint() const {
  nlohmann::json j = to_json();
  j.erase("output_dir");
  j.erase("workers");
  j.erase("results_file");
  j.erase("report_format");
  const std::uint64_t hash = fnv1a64(j.dump());
  std::ostringstream hex;
  hex << std::hex;
  hex.width(16);
  hex.fill('0');
  hex << hash;
  return hex.str();
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: " + path.string() + " is not valid JSON: " +
                                e.what());
  }
  return ExperimentConfig::from_json(j);
}

}  // namespace perturbench
