#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "perturbench/config.hpp"
#include "perturbench/dataset.hpp"
#include "perturbench/harness.hpp"
#include "perturbench/metrics.hpp"
#include "perturbench/model.hpp"
#include "perturbench/synthetic.hpp"
#include "perturbench/train.hpp"

namespace pb = perturbench;

namespace {

// Checkpoint paths resolve against the working directory first, then the
// optional PERTURBENCH_MODEL_DIR cache.
std::filesystem::path resolve_model_path(const std::string& spec) {
  const std::filesystem::path direct(spec);
  if (std::filesystem::exists(direct)) return direct;
  if (const char* cache = std::getenv("PERTURBENCH_MODEL_DIR")) {
    const std::filesystem::path cached = std::filesystem::path(cache) / spec;
    if (std::filesystem::exists(cached)) return cached;
  }
  throw std::invalid_argument("model checkpoint not found: " + spec);
}

std::vector<std::unique_ptr<pb::DifferentiableModel>> load_models(
    const std::vector<std::string>& specs) {
  std::vector<std::unique_ptr<pb::DifferentiableModel>> models;
  models.reserve(specs.size());
  for (const std::string& spec : specs)
    models.push_back(pb::load_checkpoint(resolve_model_path(spec)));
  return models;
}

std::vector<pb::DifferentiableModel*> raw_pointers(
    const std::vector<std::unique_ptr<pb::DifferentiableModel>>& models) {
  std::vector<pb::DifferentiableModel*> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back(m.get());
  return out;
}

void write_resolved_config(const pb::ExperimentConfig& config,
                           const std::string& command) {
  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  const nlohmann::json j{{"command", command},
                         {"fingerprint", config.fingerprint()},
                         {"config", config.to_json()}};
  std::ofstream out(dir / "resolved_config.json");
  if (!out)
    throw std::runtime_error("cannot write resolved config under " + dir.string());
  out << j.dump(2) << '\n';
}

// Accepts "1..10" (inclusive range) or a comma list like "1,2,5".
std::vector<int> parse_ks(const std::string& text) {
  std::vector<int> ks;
  const auto range = text.find("..");
  try {
    if (range != std::string::npos) {
      const int lo = std::stoi(text.substr(0, range));
      const int hi = std::stoi(text.substr(range + 2));
      if (lo > hi) throw std::invalid_argument("empty range");
      for (int k = lo; k <= hi; ++k) ks.push_back(k);
    } else {
      std::size_t start = 0;
      while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string piece =
            text.substr(start, comma == std::string::npos ? comma : comma - start);
        ks.push_back(std::stoi(piece));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("--ks expects \"lo..hi\" or a comma list, got \"" +
                                text + "\"");
  }
  return ks;
}

pb::LossTraces traces_of(const pb::AdversarialExample& example) {
  pb::LossTraces traces;
  traces.title = "loss over attack steps, " + example.id;
  traces.series.push_back({"proxy ensemble", example.proxy_loss_trace});
  if (!example.validation_loss_trace.empty())
    traces.series.push_back(
        {example.validation.empty() ? "checkpoint ensemble"
                                    : "validation " + example.validation,
         example.validation_loss_trace});
  for (const auto& [name, points] : example.model_traces)
    traces.series.push_back({name, points});
  return traces;
}

int warn_failures(const std::vector<pb::AdversarialExample>& examples) {
  int failed = 0;
  for (const auto& e : examples)
    if (!e.ok()) ++failed;
  if (failed > 0)
    std::cerr << "warning: " << failed << " of " << examples.size()
              << " attacks failed; statuses recorded per example\n";
  return failed;
}

double mean_finite_snr(const std::vector<pb::AdversarialExample>& examples) {
  double sum = 0.0;
  int n = 0;
  for (const auto& e : examples)
    if (e.ok() && std::isfinite(e.snr_db)) {
      sum += e.snr_db;
      ++n;
    }
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

int cmd_attack(const pb::ExperimentConfig& config) {
  if (config.dataset_dir.empty())
    throw std::invalid_argument("attack needs dataset_dir");
  if (config.targets_file.empty())
    throw std::invalid_argument("attack needs targets_file");
  if (config.proxies.empty()) throw std::invalid_argument("attack needs proxies");

  const auto samples = pb::load_clean_dataset(config.dataset_dir);
  auto corpus = pb::TargetCorpus::from_file(config.targets_file);
  corpus.validate();
  auto proxies = load_models(config.proxies);
  std::unique_ptr<pb::DifferentiableModel> validation;
  if (!config.validation.empty())
    validation = pb::load_checkpoint(resolve_model_path(config.validation));
  auto trace_models = load_models(config.models);

  pb::BatchOptions options;
  options.config_fingerprint = config.fingerprint();
  options.workers = config.workers;
  options.trace_models = raw_pointers(trace_models);

  const auto examples = pb::run_attack_batch(
      samples, raw_pointers(proxies), validation.get(), corpus, config.attack,
      options);

  const std::filesystem::path out(config.output_dir);
  pb::export_dataset(examples, out / "dataset");
  for (const auto& example : examples) {
    if (example.proxy_loss_trace.empty()) continue;
    const pb::LossTraces traces = traces_of(example);
    pb::render_report(traces, "csv", out / "traces", example.id);
    std::ofstream json_out(out / "traces" / (example.id + ".json"));
    json_out << traces.to_json().dump(2) << '\n';
  }

  warn_failures(examples);
  std::cout << "wrote " << examples.size() << " examples to "
            << (out / "dataset").string() << "\nmean SNR over successful attacks: "
            << mean_finite_snr(examples) << " dB\n";
  return 0;
}

int cmd_evaluate(const pb::ExperimentConfig& config) {
  if (config.examples_dir.empty())
    throw std::invalid_argument("evaluate needs examples_dir");
  if (config.models.empty()) throw std::invalid_argument("evaluate needs models");
  const auto examples = pb::import_dataset(config.examples_dir);
  auto models = load_models(config.models);
  const pb::TransferMatrix matrix =
      pb::evaluate_transfer(raw_pointers(models), examples);

  const std::filesystem::path out(config.output_dir);
  std::filesystem::create_directories(out);
  std::ofstream json_out(out / "matrix.json");
  json_out << matrix.to_json().dump(2) << '\n';
  const auto path = pb::render_report(matrix, config.report_format, out);
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_matrix(const pb::ExperimentConfig& config) {
  if (config.dataset_dir.empty())
    throw std::invalid_argument("matrix needs dataset_dir");
  if (config.targets_file.empty())
    throw std::invalid_argument("matrix needs targets_file");
  if (config.models.empty())
    throw std::invalid_argument("matrix needs models (the pool)");

  const auto samples = pb::load_clean_dataset(config.dataset_dir);
  auto corpus = pb::TargetCorpus::from_file(config.targets_file);
  corpus.validate();
  auto pool = load_models(config.models);

  pb::BatchOptions options;
  options.config_fingerprint = config.fingerprint();
  options.workers = config.workers;

  std::vector<pb::AdversarialExample> all;
  for (const auto& proxy : pool) {
    auto batch = pb::run_attack_batch(samples, {proxy.get()}, nullptr, corpus,
                                      config.attack, options);
    all.insert(all.end(), std::make_move_iterator(batch.begin()),
               std::make_move_iterator(batch.end()));
  }

  const pb::TransferMatrix matrix = pb::evaluate_transfer(raw_pointers(pool), all);
  const std::filesystem::path out(config.output_dir);
  std::filesystem::create_directories(out);
  std::ofstream json_out(out / "matrix.json");
  json_out << matrix.to_json().dump(2) << '\n';
  const auto path = pb::render_report(matrix, config.report_format, out);
  warn_failures(all);
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_precision_sweep(const pb::ExperimentConfig& config) {
  if (config.images_file.empty())
    throw std::invalid_argument("precision-sweep needs images_file");
  if (config.models.size() != 2)
    throw std::invalid_argument(
        "precision-sweep needs exactly two models: proxy then private");

  const auto images = pb::load_labeled_images(config.images_file);
  auto models = load_models(config.models);

  pb::SweepOptions options;
  options.ks = config.ks;
  options.n_inputs = config.sweep_inputs;
  options.repeats = config.repeats;
  options.steps_per_k = config.steps_per_k;
  options.learning_rate = config.sweep_learning_rate;
  options.seed = config.seed;
  options.workers = config.workers;

  pb::AttackConfig attack = config.attack;
  attack.norm = pb::NormKind::l2;  // ranked-target attacks run in an L2 ball

  const pb::PrecisionCurve curve =
      pb::run_precision_sweep(*models[0], *models[1], images, options, attack);

  const std::filesystem::path out(config.output_dir);
  std::filesystem::create_directories(out);
  std::ofstream json_out(out / "curve.json");
  json_out << curve.to_json().dump(2) << '\n';
  const auto csv = pb::render_report(curve, "csv", out);
  const auto png = pb::render_report(curve, "png", out);
  std::cout << "wrote " << csv.string() << " and " << png.string() << '\n';
  return 0;
}

int cmd_prefix_attack(const pb::ExperimentConfig& config) {
  if (config.dataset_dir.empty())
    throw std::invalid_argument("prefix-attack needs dataset_dir");
  if (config.models.empty())
    throw std::invalid_argument("prefix-attack needs models (the pool)");

  const auto samples = pb::load_clean_dataset(config.dataset_dir);
  auto pool = load_models(config.models);

  pb::PrefixOptions options;
  options.word = config.prefix_word;
  options.target_snr_db = config.target_snr_db;
  options.seed = config.seed;
  options.workers = config.workers;

  const pb::TransferMatrix matrix = pb::run_prefix_experiment(
      raw_pointers(pool), samples, options, config.attack);

  const std::filesystem::path out(config.output_dir);
  std::filesystem::create_directories(out);
  std::ofstream json_out(out / "prefix_matrix.json");
  json_out << matrix.to_json().dump(2) << '\n';
  const auto path =
      pb::render_report(matrix, config.report_format, out, "prefix_matrix");
  if (matrix.has_off_diagonal_stats)
    std::cout << "off-diagonal prefix success: mean " << matrix.off_diagonal_mean
              << ", sd " << matrix.off_diagonal_sd << '\n';
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_export(const pb::ExperimentConfig&, const std::string& from,
               const std::string& to) {
  if (from.empty() || to.empty())
    throw std::invalid_argument("export needs --from and --to directories");
  const auto examples = pb::import_dataset(from);
  pb::export_dataset(examples, to);
  std::cout << "wrote " << examples.size() << " examples to " << to << '\n';
  return 0;
}

int cmd_import(const pb::ExperimentConfig&, const std::string& from) {
  if (from.empty()) throw std::invalid_argument("import needs --from");
  const auto examples = pb::import_dataset(from);
  int ok = 0;
  double max_snr_gap = 0.0;
  for (const auto& e : examples) {
    if (e.ok()) ++ok;
    if (std::isfinite(e.snr_db) && e.delta.size() > 0 &&
        e.delta.squaredNorm() > 0 && e.clean.squaredNorm() > 0)
      max_snr_gap =
          std::max(max_snr_gap, std::abs(e.snr_db - pb::snr_db(e.clean, e.delta)));
  }
  std::cout << examples.size() << " examples (" << ok << " ok)\n"
            << "mean SNR over successful attacks: " << mean_finite_snr(examples)
            << " dB\n"
            << "largest manifest-vs-waveform SNR gap: " << max_snr_gap << " dB\n";
  return 0;
}

int cmd_report(const pb::ExperimentConfig& config, const std::string& input) {
  if (input.empty()) throw std::invalid_argument("report needs --input");
  std::ifstream in(input);
  if (!in) throw std::invalid_argument("report: cannot open " + input);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("report: " + input + " is not valid JSON: " +
                                e.what());
  }
  const std::string type = j.value("type", "");
  const std::filesystem::path out(config.output_dir);
  std::filesystem::path path;
  if (type == "transfer_matrix")
    path = pb::render_report(pb::TransferMatrix::from_json(j),
                             config.report_format, out);
  else if (type == "precision_curve")
    path = pb::render_report(pb::PrecisionCurve::from_json(j),
                             config.report_format, out);
  else if (type == "loss_traces")
    path = pb::render_report(pb::LossTraces::from_json(j), config.report_format,
                             out);
  else
    throw std::invalid_argument("report: unknown result type \"" + type + "\"");
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_train_toys(const pb::ExperimentConfig& config) {
  const bool want_ctc = config.arch == "toy_ctc" || config.arch == "both";
  const bool want_classifier =
      config.arch == "toy_classifier" || config.arch == "both";
  if (!want_ctc && !want_classifier)
    throw std::invalid_argument(
        "arch must be toy_ctc, toy_classifier or both, got \"" + config.arch +
        "\"");
  if (config.pool_seeds.empty())
    throw std::invalid_argument("train-toys needs pool_seeds");

  pb::TrainConfig train;
  train.epochs = config.epochs;
  train.learning_rate = config.train_learning_rate;
  train.validate();

  const std::filesystem::path out(config.output_dir);
  std::filesystem::create_directories(out / "models");

  pb::TrainConfig finetune = train;
  finetune.epochs = config.finetune_epochs;

  if (want_ctc) {
    pb::SyntheticAudioConfig audio;
    audio.count = config.audio_count;
    audio.seed = config.seed;
    const auto samples = pb::make_synthetic_audio(audio);
    pb::write_clean_dataset(samples, out / "clean");
    pb::toy_target_corpus().to_file(out / "targets.txt");

    pb::ToyCtcConfig base;
    base.dropout_rate = config.dropout_rate;
    std::vector<std::unique_ptr<pb::ToyCtcModel>> pool;
    if (config.shared_base) {
      auto bases = pb::train_toy_pool(base, samples, {config.seed}, train);
      pb::save_checkpoint(*bases[0],
                          out / "models" / (bases[0]->name() + ".json"));
      pool = pb::finetune_toy_pool(*bases[0], samples, config.pool_seeds, finetune);
    } else {
      pool = pb::train_toy_pool(base, samples, config.pool_seeds, train);
    }
    for (auto& model : pool) {
      pb::save_checkpoint(*model, out / "models" / (model->name() + ".json"));
      std::cout << model->name()
                << " training CER: " << pb::training_cer(*model, samples) << '\n';
    }
  }

  if (want_classifier) {
    pb::SyntheticImageConfig images;
    images.count = config.image_count;
    images.seed = config.seed;
    const auto dataset = pb::make_synthetic_images(images);
    pb::write_labeled_images(dataset, images.image_h, images.image_w,
                             out / "images.json");

    pb::ToyClassifierConfig base;
    base.dropout_rate = config.dropout_rate;
    std::vector<std::unique_ptr<pb::ToyClassifier>> pool;
    if (config.shared_base) {
      auto bases = pb::train_toy_pool(base, dataset, {config.seed}, train);
      pb::save_checkpoint(*bases[0],
                          out / "models" / (bases[0]->name() + ".json"));
      pool = pb::finetune_toy_pool(*bases[0], dataset, config.pool_seeds, finetune);
    } else {
      pool = pb::train_toy_pool(base, dataset, config.pool_seeds, train);
    }
    for (auto& model : pool) {
      pb::save_checkpoint(*model, out / "models" / (model->name() + ".json"));
      std::cout << model->name() << " training accuracy: "
                << pb::training_accuracy(*model, dataset) << '\n';
    }
  }
  return 0;
}

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  std::string out_dir;
  int workers = 1;
  double epsilon = 0.015;
  double learning_rate = 0.0005;
  int iterations = 10000;
  double reg_const = 10.0;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
  CLI::Option* epsilon_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* iterations_opt = nullptr;
  CLI::Option* reg_opt = nullptr;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config file (JSON)");
    sub->add_option("--set", overrides,
                    "config override as key=value (repeatable)");
    seed_opt = sub->add_option("--seed", seed, "master seed for the run");
    out_opt = sub->add_option("--out", out_dir, "output directory");
    workers_opt = sub->add_option("--workers", workers, "worker thread count");
    epsilon_opt = sub->add_option("--epsilon", epsilon, "attack radius")
                      ->capture_default_str();
    lr_opt = sub->add_option("--learning-rate", learning_rate,
                             "attack step size")
                 ->capture_default_str();
    iterations_opt =
        sub->add_option("--iterations", iterations, "attack iteration count")
            ->capture_default_str();
    reg_opt = sub->add_option("--reg-const", reg_const,
                              "perturbation energy penalty weight")
                  ->capture_default_str();
  }

  pb::ExperimentConfig resolve() const {
    pb::ExperimentConfig config;
    if (!config_path.empty()) config = pb::load_experiment_config(config_path);
    for (const std::string& assignment : overrides)
      config.apply_override(assignment);
    if (seed_opt && seed_opt->count() > 0) config.seed = seed;
    if (out_opt && out_opt->count() > 0) config.output_dir = out_dir;
    if (workers_opt && workers_opt->count() > 0) config.workers = workers;
    if (epsilon_opt && epsilon_opt->count() > 0) config.attack.linf_radius = epsilon;
    if (lr_opt && lr_opt->count() > 0) config.attack.learning_rate = learning_rate;
    if (iterations_opt && iterations_opt->count() > 0)
      config.attack.iterations = iterations;
    if (reg_opt && reg_opt->count() > 0) config.attack.reg_const = reg_const;
    config.attack.seed = config.seed;
    if (config.workers < 1)
      throw std::invalid_argument("config: workers must be >= 1");
    return config;
  }
};

std::string config_key_footer() {
  const nlohmann::json defaults = pb::ExperimentConfig().to_json();
  std::string footer =
      "Config keys (set in the --config file or via --set key=value):\n";
  for (const auto& [key, value] : defaults.items())
    footer += "  " + key + " (default " + value.dump() + ")\n";
  return footer;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"targeted audio/classifier perturbation benchmark"};
  app.require_subcommand(1);
  const std::string footer = config_key_footer();

  struct SubState {
    CommonFlags common;
    CLI::App* sub = nullptr;
  };
  std::map<std::string, SubState> subs;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"attack", "generate targeted adversarial audio for a clean dataset"},
      {"evaluate", "score an adversarial dataset against a model list"},
      {"matrix", "full cross-model grid: attack with each pool member, "
                 "evaluate on all"},
      {"precision-sweep", "top-k targeted attacks at growing precision "
                          "(proxy, then private model)"},
      {"prefix-attack", "force a target word in front of each transcription "
                        "across a model pool"},
      {"export", "re-export an adversarial dataset (--from, --to)"},
      {"import", "load and summarize an adversarial dataset"},
      {"report", "render a stored result (matrix as csv/md, curve or traces "
                 "as csv/png)"},
      {"train-toys", "generate synthetic data and train toy model pools"},
  };
  for (const auto& [name, description] : commands) {
    SubState& state = subs[name];
    state.sub = app.add_subcommand(name, description);
    state.sub->footer(footer);
    state.common.attach(state.sub);
  }

  std::string export_from, export_to, import_from, report_input, report_format;
  std::string ks_text;
  subs["export"].sub->add_option("--from", export_from, "source dataset directory");
  subs["export"].sub->add_option("--to", export_to, "destination directory");
  subs["import"].sub->add_option("--from", import_from, "dataset directory");
  subs["report"].sub->add_option("--input", report_input, "stored result JSON");
  auto* format_opt = subs["report"].sub->add_option(
      "--format", report_format, "csv, md or png depending on result type");
  auto* ks_opt = subs["precision-sweep"].sub->add_option(
      "--ks", ks_text, "precision levels, \"lo..hi\" or comma list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    pb::ExperimentConfig config = subs[name].common.resolve();
    if (format_opt->count() > 0) config.report_format = report_format;
    if (ks_opt->count() > 0) config.ks = parse_ks(ks_text);
    write_resolved_config(config, name);

    if (name == "attack") return cmd_attack(config);
    if (name == "evaluate") return cmd_evaluate(config);
    if (name == "matrix") return cmd_matrix(config);
    if (name == "precision-sweep") return cmd_precision_sweep(config);
    if (name == "prefix-attack") return cmd_prefix_attack(config);
    if (name == "export") return cmd_export(config, export_from, export_to);
    if (name == "import") return cmd_import(config, import_from);
    if (name == "report") return cmd_report(config, report_input);
    if (name == "train-toys") return cmd_train_toys(config);
    std::cerr << "error: unhandled subcommand " << name << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
