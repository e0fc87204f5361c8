#ifndef PERTURBENCH_HARNESS_HPP
#define PERTURBENCH_HARNESS_HPP

#include <filesystem>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "perturbench/attack.hpp"
#include "perturbench/model.hpp"
#include "perturbench/targets.hpp"
#include "perturbench/types.hpp"

namespace perturbench {

struct AdversarialExample {
  std::string id;
  Waveform clean;
  Waveform delta;
  std::string transcript;  // reference for the clean input
  AttackTarget target;
  std::vector<std::string> proxies;
  std::string validation;  // empty when no validation proxy ran
  double snr_db = 0.0;
  std::string config_fingerprint;
  int best_iteration = 0;
  int sample_rate = 8000;
  std::string status = "ok";  // "ok" or the per-sample failure message

  // Kept in memory for reports; not part of the exported dataset.
  std::vector<TracePoint> proxy_loss_trace;
  std::vector<TracePoint> validation_loss_trace;
  std::vector<std::pair<std::string, std::vector<TracePoint>>> model_traces;

  bool ok() const { return status == "ok"; }
};

struct TransferCell {
  double targeted_word = 0.0;
  double targeted_char = 0.0;
  double untargeted_word = 0.0;
  double prefix_rate = 0.0;  // meaningful when the matrix has_prefix
  bool diagonal = false;     // evaluated model is (or shares lineage with) a proxy
  bool valid = true;
  int examples = 0;
};

// Raw transcription evidence behind each cell, kept for audits.
struct TransferRecord {
  std::string example_id;
  std::string proxy_row;
  std::string model;
  std::string clean_prediction;
  std::string adv_prediction;
};

struct TransferMatrix {
  std::vector<std::string> proxies;  // row labels: "+"-joined proxy names
  std::vector<std::string> models;   // column labels
  std::vector<std::vector<TransferCell>> cells;  // [row][column]
  std::vector<double> clean_wer;     // per column, word level, uncapped
  std::vector<double> clean_prefix_rate;  // per column; prefix runs only
  std::string prefix_word;
  bool has_prefix = false;
  double off_diagonal_mean = 0.0;
  double off_diagonal_sd = 0.0;
  bool has_off_diagonal_stats = false;
  std::vector<TransferRecord> records;

  nlohmann::json to_json() const;
  static TransferMatrix from_json(const nlohmann::json& j);
};

struct PrecisionPoint {
  int k = 0;
  double white_box = 0.0;
  double transfer = 0.0;
  int repeats = 0;
};

struct PrecisionCurve {
  std::string proxy;
  std::string private_model;
  std::vector<PrecisionPoint> points;  // k strictly increasing

  nlohmann::json to_json() const;
  static PrecisionCurve from_json(const nlohmann::json& j);
};

struct LossTraces {
  struct Series {
    std::string label;
    std::vector<TracePoint> points;
  };
  std::string title;
  std::vector<Series> series;

  nlohmann::json to_json() const;
  static LossTraces from_json(const nlohmann::json& j);
};

struct BatchOptions {
  std::string config_fingerprint;
  int workers = 1;
  // Models whose deterministic targeted loss is recorded at every
  // checkpoint of every sample's attack (loss-evolution reports).
  std::vector<DifferentiableModel*> trace_models;
};

// Assigns length-matched targets, then runs the targeted attack per sample.
// Per-sample failures are recorded in `status` without aborting the batch.
// Deterministic in config.seed regardless of worker count.
std::vector<AdversarialExample> run_attack_batch(
    const std::vector<AudioSample>& samples,
    const std::vector<DifferentiableModel*>& proxies,
    DifferentiableModel* validation_proxy, const TargetCorpus& corpus,
    const AttackConfig& config, const BatchOptions& options = {});

// Scores every model on every example's clean and perturbed audio. Rows
// follow proxy provenance; cells where the evaluated model is a proxy (or
// shares its nonempty lineage) are flagged as non-transfer.
TransferMatrix evaluate_transfer(const std::vector<DifferentiableModel*>& models,
                                 const std::vector<AdversarialExample>& examples);

struct SweepOptions {
  std::vector<int> ks = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int n_inputs = 20;
  int repeats = 3;
  int steps_per_k = 1000;   // attack runs k * steps_per_k iterations
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  int workers = 1;
};

// Top-k targeted attacks on the proxy at each precision k, scoring ranked
// agreement on the proxy (white box) and the private model (transfer).
PrecisionCurve run_precision_sweep(DifferentiableModel& proxy,
                                   DifferentiableModel& private_model,
                                   const std::vector<LabeledImage>& images,
                                   const SweepOptions& options,
                                   const AttackConfig& attack);

struct PrefixOptions {
  std::string word = "BUT";
  double target_snr_db = 30.0;  // sets each sample's L2 radius
  std::uint64_t seed = 0;
  int workers = 1;
};

// Every pool member serves as proxy once; success is the prefix predicate
// on greedy transcriptions of every pool member. Off-diagonal mean/sd are
// over the non-diagonal prefix rates (population variance).
TransferMatrix run_prefix_experiment(const std::vector<DifferentiableModel*>& pool,
                                     const std::vector<AudioSample>& samples,
                                     const PrefixOptions& options,
                                     const AttackConfig& attack);

// Dataset directory layout: manifest.jsonl plus audio/<id>_{clean,adv}.wav
// as 16-bit PCM mono. Import inverts export up to PCM quantization and
// preserves manifest fields exactly.
void export_dataset(const std::vector<AdversarialExample>& examples,
                    const std::filesystem::path& directory);
std::vector<AdversarialExample> import_dataset(const std::filesystem::path& directory);

// Matrices render to "csv" or "md"; curves and traces to "csv" or "png".
// Returns the path written.
std::filesystem::path render_report(const TransferMatrix& matrix,
                                    const std::string& format,
                                    const std::filesystem::path& out_dir,
                                    const std::string& stem = "matrix");
std::filesystem::path render_report(const PrecisionCurve& curve,
                                    const std::string& format,
                                    const std::filesystem::path& out_dir,
                                    const std::string& stem = "curve");
std::filesystem::path render_report(const LossTraces& traces,
                                    const std::string& format,
                                    const std::filesystem::path& out_dir,
                                    const std::string& stem = "traces");

}  // namespace perturbench

#endif  // PERTURBENCH_HARNESS_HPP
