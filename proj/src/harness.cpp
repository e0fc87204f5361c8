#include "perturbench/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "perturbench/metrics.hpp"
#include "perturbench/plot.hpp"
#include "perturbench/rng.hpp"
#include "perturbench/wav.hpp"

namespace perturbench {
namespace {

std::string fmt(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.6g", v);
  return buffer;
}

// Runs body(0..n-1) over `workers` threads, each with its own state from
// make_state(). Work order is dynamic but every result lands in its own
// slot, so output is independent of scheduling.
template <typename StateFactory, typename Body>
void parallel_for(int n, int workers, StateFactory make_state, Body body) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    auto state = make_state();
    for (int i = 0; i < n; ++i) body(i, state);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      try {
        auto state = make_state();
        while (true) {
          const int i = next.fetch_add(1);
          if (i >= n) break;
          body(i, state);
        }
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += '+';
    out += names[i];
  }
  return out;
}

std::string kind_to_string(AttackTarget::Kind kind) {
  switch (kind) {
    case AttackTarget::Kind::transcript: return "transcript";
    case AttackTarget::Kind::prefix: return "prefix";
    case AttackTarget::Kind::class_distribution: return "class_distribution";
  }
  return "transcript";
}

AttackTarget::Kind kind_from_string(const std::string& s) {
  if (s == "transcript") return AttackTarget::Kind::transcript;
  if (s == "prefix") return AttackTarget::Kind::prefix;
  if (s == "class_distribution") return AttackTarget::Kind::class_distribution;
  throw std::runtime_error("unknown target kind \"" + s + "\"");
}

// JSON keeps no infinities, so non-finite SNR values travel as strings.
nlohmann::json snr_to_json(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

double snr_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::runtime_error("bad snr_db value \"" + s + "\"");
  }
  return j.get<double>();
}

void require_unique_names(const std::vector<DifferentiableModel*>& models,
                          const char* where) {
  std::map<std::string, int> seen;
  for (const DifferentiableModel* m : models)
    if (++seen[m->name()] > 1)
      throw std::invalid_argument(std::string(where) + ": duplicate model name '" +
                                  m->name() + "'");
}

}  // namespace

std::vector<AdversarialExample> run_attack_batch(
    const std::vector<AudioSample>& samples,
    const std::vector<DifferentiableModel*>& proxies,
    DifferentiableModel* validation_proxy, const TargetCorpus& corpus,
    const AttackConfig& config, const BatchOptions& options) {
  if (samples.empty())
    throw std::invalid_argument("run_attack_batch: empty sample set");
  if (proxies.empty()) throw std::invalid_argument("run_attack_batch: no proxies");
  config.validate();
  require_unique_names(proxies, "run_attack_batch");

  std::vector<std::string> proxy_names;
  proxy_names.reserve(proxies.size());
  for (const DifferentiableModel* p : proxies) proxy_names.push_back(p->name());
  if (validation_proxy != nullptr)
    for (const std::string& name : proxy_names)
      if (name == validation_proxy->name())
        throw std::invalid_argument(
            "run_attack_batch: proxy/validation name collision on '" + name + "'");

  const std::vector<AttackTarget> targets =
      assign_length_matched_targets(samples, corpus);
  const Rng master(config.seed);
  std::vector<AdversarialExample> results(samples.size());

  struct WorkerState {
    std::vector<std::unique_ptr<DifferentiableModel>> proxy_clones;
    std::vector<DifferentiableModel*> proxy_ptrs;
    std::unique_ptr<DifferentiableModel> validation_clone;
    std::vector<std::unique_ptr<DifferentiableModel>> trace_clones;
  };
  auto make_state = [&] {
    WorkerState state;
    for (const DifferentiableModel* p : proxies) {
      state.proxy_clones.push_back(p->clone());
      state.proxy_ptrs.push_back(state.proxy_clones.back().get());
    }
    if (validation_proxy != nullptr)
      state.validation_clone = validation_proxy->clone();
    for (const DifferentiableModel* t : options.trace_models) {
      state.trace_clones.push_back(t->clone());
      state.trace_clones.back()->set_mode(ModelMode::deterministic);
    }
    return state;
  };

  parallel_for(
      static_cast<int>(samples.size()), options.workers, make_state,
      [&](int i, WorkerState& state) {
        const AudioSample& sample = samples[static_cast<std::size_t>(i)];
        AdversarialExample ex;
        ex.id = sample.id;
        ex.clean = sample.waveform;
        ex.transcript = sample.transcript;
        ex.sample_rate = sample.sample_rate;
        ex.target = targets[static_cast<std::size_t>(i)];
        ex.proxies = proxy_names;
        ex.validation =
            validation_proxy != nullptr ? validation_proxy->name() : "";
        ex.config_fingerprint = options.config_fingerprint;

        AttackConfig per_sample = config;
        per_sample.seed = master.child("sample-" + sample.id).seed();
        try {
          std::vector<std::pair<std::string, std::vector<TracePoint>>> model_traces;
          std::vector<OutputObjective> trace_objectives;
          AttackObserver observer;
          const AttackObserver* observer_ptr = nullptr;
          if (!state.trace_clones.empty()) {
            for (const auto& tm : state.trace_clones) {
              model_traces.emplace_back(tm->name(), std::vector<TracePoint>{});
              trace_objectives.push_back(tm->objective_for(ex.target));
            }
            observer.on_checkpoint = [&](int iteration, double, const Waveform& delta) {
              for (std::size_t t = 0; t < state.trace_clones.size(); ++t) {
                const double loss = state.trace_clones[t]->objective_gradient(
                    sample.waveform + delta, trace_objectives[t], nullptr);
                model_traces[t].second.push_back({iteration, loss});
              }
            };
            observer_ptr = &observer;
          }

          PerturbationResult result =
              cw_attack(state.proxy_ptrs, state.validation_clone.get(), sample,
                        ex.target, per_sample, observer_ptr);
          ex.delta = std::move(result.delta);
          ex.snr_db = result.achieved_snr_db;
          ex.best_iteration = result.best_iteration;
          ex.proxy_loss_trace = std::move(result.proxy_loss_trace);
          ex.validation_loss_trace = std::move(result.validation_loss_trace);
          ex.model_traces = std::move(model_traces);
        } catch (const std::exception& e) {
          ex.status = std::string("failed: ") + e.what();
          ex.delta = Waveform::Zero(sample.waveform.size());
          ex.snr_db = std::numeric_limits<double>::infinity();
        }
        results[static_cast<std::size_t>(i)] = std::move(ex);
      });
  return results;
}

TransferMatrix evaluate_transfer(const std::vector<DifferentiableModel*>& models,
                                 const std::vector<AdversarialExample>& examples) {
  if (models.empty()) throw std::invalid_argument("evaluate_transfer: no models");
  if (examples.empty())
    throw std::invalid_argument("evaluate_transfer: no examples");
  require_unique_names(models, "evaluate_transfer");

  TransferMatrix matrix;
  std::map<std::string, std::string> lineage;
  for (DifferentiableModel* m : models) {
    m->set_mode(ModelMode::deterministic);
    matrix.models.push_back(m->name());
    lineage[m->name()] = m->lineage();
  }

  std::map<std::string, std::size_t> row_of;
  std::vector<std::vector<std::string>> row_proxies;
  for (const AdversarialExample& e : examples) {
    const std::string key = join_names(e.proxies);
    if (row_of.emplace(key, matrix.proxies.size()).second) {
      matrix.proxies.push_back(key);
      row_proxies.push_back(e.proxies);
    }
  }

  matrix.has_prefix = !examples.empty();
  for (const AdversarialExample& e : examples)
    if (e.target.kind != AttackTarget::Kind::prefix) matrix.has_prefix = false;
  if (matrix.has_prefix) {
    const TokenSequence words =
        normalize_text(examples.front().target.text, TextLevel::word);
    matrix.prefix_word = words.empty() ? "" : words.tokens.front();
  }

  struct Acc {
    double targeted_word = 0, targeted_char = 0, untargeted_word = 0, prefix = 0;
    int n = 0;
    bool valid = true;
  };
  std::vector<std::vector<Acc>> acc(
      matrix.proxies.size(), std::vector<Acc>(matrix.models.size()));
  std::vector<double> clean_wer_sum(matrix.models.size(), 0.0);
  std::vector<double> clean_prefix_sum(matrix.models.size(), 0.0);
  std::vector<int> clean_count(matrix.models.size(), 0);

  for (const AdversarialExample& e : examples) {
    const std::size_t row = row_of[join_names(e.proxies)];
    const Waveform adv = e.clean + e.delta;
    for (std::size_t j = 0; j < models.size(); ++j) {
      std::string clean_pred, adv_pred;
      try {
        clean_pred = models[j]->predict(e.clean);
        adv_pred = models[j]->predict(adv);
      } catch (const std::exception&) {
        acc[row][j].valid = false;
        continue;
      }
      matrix.records.push_back(
          {e.id, matrix.proxies[row], matrix.models[j], clean_pred, adv_pred});
      clean_wer_sum[j] += error_rate(normalize_text(e.transcript, TextLevel::word),
                                     normalize_text(clean_pred, TextLevel::word));
      if (matrix.has_prefix)
        clean_prefix_sum[j] += prefix_success(clean_pred, matrix.prefix_word) ? 1 : 0;
      ++clean_count[j];
      if (!e.ok()) continue;
      Acc& a = acc[row][j];
      a.targeted_word +=
          targeted_success(adv_pred, e.target.text, TextLevel::word).value;
      a.targeted_char +=
          targeted_success(adv_pred, e.target.text, TextLevel::character).value;
      a.untargeted_word +=
          untargeted_success(adv_pred, e.transcript, TextLevel::word).value;
      if (matrix.has_prefix)
        a.prefix += prefix_success(adv_pred, matrix.prefix_word) ? 1 : 0;
      ++a.n;
    }
  }

  matrix.cells.assign(matrix.proxies.size(),
                      std::vector<TransferCell>(matrix.models.size()));
  for (std::size_t r = 0; r < matrix.proxies.size(); ++r) {
    for (std::size_t j = 0; j < matrix.models.size(); ++j) {
      const Acc& a = acc[r][j];
      TransferCell& cell = matrix.cells[r][j];
      cell.examples = a.n;
      cell.valid = a.valid && a.n > 0;
      if (cell.valid) {
        cell.targeted_word = a.targeted_word / a.n;
        cell.targeted_char = a.targeted_char / a.n;
        cell.untargeted_word = a.untargeted_word / a.n;
        cell.prefix_rate = matrix.has_prefix ? a.prefix / a.n : 0.0;
      }
      const std::string& model_name = matrix.models[j];
      const std::string& model_lineage = lineage[model_name];
      for (const std::string& proxy : row_proxies[r]) {
        if (proxy == model_name) cell.diagonal = true;
        const auto it = lineage.find(proxy);
        if (!model_lineage.empty() && it != lineage.end() &&
            it->second == model_lineage)
          cell.diagonal = true;
      }
    }
  }

  matrix.clean_wer.resize(matrix.models.size());
  for (std::size_t j = 0; j < matrix.models.size(); ++j)
    matrix.clean_wer[j] =
        clean_count[j] > 0 ? clean_wer_sum[j] / clean_count[j] : 0.0;
  if (matrix.has_prefix) {
    matrix.clean_prefix_rate.resize(matrix.models.size());
    for (std::size_t j = 0; j < matrix.models.size(); ++j)
      matrix.clean_prefix_rate[j] =
          clean_count[j] > 0 ? clean_prefix_sum[j] / clean_count[j] : 0.0;
  }
  return matrix;
}

PrecisionCurve run_precision_sweep(DifferentiableModel& proxy,
                                   DifferentiableModel& private_model,
                                   const std::vector<LabeledImage>& images,
                                   const SweepOptions& options,
                                   const AttackConfig& attack) {
  if (images.empty()) throw std::invalid_argument("run_precision_sweep: no images");
  if (options.ks.empty()) throw std::invalid_argument("run_precision_sweep: no ks");
  if (options.n_inputs < 1 || options.repeats < 1 || options.steps_per_k < 1)
    throw std::invalid_argument("run_precision_sweep: bad options");
  attack.validate();

  std::vector<int> ks = options.ks;
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] <= ks[i - 1])
      throw std::invalid_argument("run_precision_sweep: ks must be strictly increasing");

  proxy.set_mode(ModelMode::deterministic);
  private_model.set_mode(ModelMode::deterministic);
  const int classes =
      static_cast<int>(proxy.forward(images.front().pixels).cols());
  if (static_cast<int>(private_model.forward(images.front().pixels).cols()) !=
      classes)
    throw std::invalid_argument("run_precision_sweep: class count mismatch");
  for (int k : ks)
    if (k < 1 || k > classes)
      throw std::invalid_argument("run_precision_sweep: k out of range");

  const int tasks = static_cast<int>(ks.size()) * options.repeats;
  std::vector<double> white(static_cast<std::size_t>(tasks), 0.0);
  std::vector<double> transfer(static_cast<std::size_t>(tasks), 0.0);

  struct WorkerState {
    std::unique_ptr<DifferentiableModel> proxy;
    std::unique_ptr<DifferentiableModel> private_model;
  };
  auto make_state = [&] {
    WorkerState state;
    state.proxy = proxy.clone();
    state.private_model = private_model.clone();
    return state;
  };

  parallel_for(tasks, options.workers, make_state, [&](int t, WorkerState& state) {
    const int k = ks[static_cast<std::size_t>(t) / options.repeats];
    const int repeat = t % options.repeats;
    Rng rng = Rng(options.seed)
                  .child("sweep-k" + std::to_string(k) + "-r" + std::to_string(repeat));

    std::vector<std::size_t> chosen;
    chosen.reserve(static_cast<std::size_t>(options.n_inputs));
    if (images.size() >= static_cast<std::size_t>(options.n_inputs)) {
      std::vector<std::size_t> indices(images.size());
      std::iota(indices.begin(), indices.end(), std::size_t{0});
      for (int i = 0; i < options.n_inputs; ++i) {
        const std::size_t j = i + rng.below(indices.size() - i);
        std::swap(indices[static_cast<std::size_t>(i)], indices[j]);
        chosen.push_back(indices[static_cast<std::size_t>(i)]);
      }
    } else {
      for (int i = 0; i < options.n_inputs; ++i)
        chosen.push_back(rng.below(images.size()));
    }

    double white_sum = 0.0, transfer_sum = 0.0;
    for (const std::size_t index : chosen) {
      const LabeledImage& image = images[index];
      const AttackTarget target = sample_topk_target(classes, k, rng);
      AttackConfig config = attack;
      config.iterations = k * options.steps_per_k;
      config.learning_rate = options.learning_rate;
      config.seed = rng.raw();
      const PerturbationResult result = pgd_attack(
          *state.proxy, image.pixels, state.proxy->objective_for(target), config);
      const Waveform adv = image.pixels + result.delta;
      state.proxy->set_mode(ModelMode::deterministic);
      white_sum += topk_match_accuracy(
          state.proxy->forward(adv).row(0).transpose(), target.distribution, k);
      transfer_sum += topk_match_accuracy(
          state.private_model->forward(adv).row(0).transpose(),
          target.distribution, k);
    }
    white[static_cast<std::size_t>(t)] = white_sum / options.n_inputs;
    transfer[static_cast<std::size_t>(t)] = transfer_sum / options.n_inputs;
  });

  PrecisionCurve curve;
  curve.proxy = proxy.name();
  curve.private_model = private_model.name();
  for (std::size_t i = 0; i < ks.size(); ++i) {
    PrecisionPoint point;
    point.k = ks[i];
    point.repeats = options.repeats;
    for (int r = 0; r < options.repeats; ++r) {
      const std::size_t t = i * static_cast<std::size_t>(options.repeats) +
                            static_cast<std::size_t>(r);
      point.white_box += white[t];
      point.transfer += transfer[t];
    }
    point.white_box /= options.repeats;
    point.transfer /= options.repeats;
    curve.points.push_back(point);
  }
  return curve;
}

TransferMatrix run_prefix_experiment(const std::vector<DifferentiableModel*>& pool,
                                     const std::vector<AudioSample>& samples,
                                     const PrefixOptions& options,
                                     const AttackConfig& attack) {
  if (pool.empty()) throw std::invalid_argument("run_prefix_experiment: empty pool");
  require_unique_names(pool, "run_prefix_experiment");
  attack.validate();
  const std::vector<AudioSample> eligible =
      filter_prefix_eligible(samples, options.word);
  if (eligible.empty())
    throw std::invalid_argument("run_prefix_experiment: no eligible samples");

  const int pool_size = static_cast<int>(pool.size());
  const int sample_count = static_cast<int>(eligible.size());

  TransferMatrix matrix;
  matrix.has_prefix = true;
  matrix.prefix_word = join_tokens(normalize_text(options.word, TextLevel::word));
  for (DifferentiableModel* m : pool) {
    m->set_mode(ModelMode::deterministic);
    matrix.proxies.push_back(m->name());
    matrix.models.push_back(m->name());
  }

  // clean-side statistics per evaluated model
  matrix.clean_wer.assign(static_cast<std::size_t>(pool_size), 0.0);
  matrix.clean_prefix_rate.assign(static_cast<std::size_t>(pool_size), 0.0);
  std::vector<std::vector<std::string>> clean_preds(
      static_cast<std::size_t>(pool_size));
  for (int j = 0; j < pool_size; ++j) {
    auto& preds = clean_preds[static_cast<std::size_t>(j)];
    preds.reserve(static_cast<std::size_t>(sample_count));
    for (const AudioSample& sample : eligible) {
      const std::string pred = pool[static_cast<std::size_t>(j)]->predict(sample.waveform);
      preds.push_back(pred);
      matrix.clean_wer[static_cast<std::size_t>(j)] +=
          error_rate(normalize_text(sample.transcript, TextLevel::word),
                     normalize_text(pred, TextLevel::word));
      if (prefix_success(pred, options.word))
        matrix.clean_prefix_rate[static_cast<std::size_t>(j)] += 1.0;
    }
    matrix.clean_wer[static_cast<std::size_t>(j)] /= sample_count;
    matrix.clean_prefix_rate[static_cast<std::size_t>(j)] /= sample_count;
  }

  struct TaskResult {
    bool failed = false;
    std::vector<std::string> predictions;  // per evaluated model
  };
  std::vector<TaskResult> task_results(
      static_cast<std::size_t>(pool_size) * sample_count);

  struct WorkerState {
    std::vector<std::unique_ptr<DifferentiableModel>> clones;
  };
  auto make_state = [&] {
    WorkerState state;
    for (const DifferentiableModel* m : pool) state.clones.push_back(m->clone());
    return state;
  };

  const Rng master(options.seed);
  parallel_for(
      pool_size * sample_count, options.workers, make_state,
      [&](int t, WorkerState& state) {
        const int p = t / sample_count;
        const int s = t % sample_count;
        const AudioSample& sample = eligible[static_cast<std::size_t>(s)];
        TaskResult& task = task_results[static_cast<std::size_t>(t)];
        try {
          const AttackTarget target =
              make_prefix_target(sample.transcript, options.word);
          AttackConfig config = attack;
          config.norm = NormKind::l2;
          config.l2_radius = sample.waveform.norm() *
                             std::pow(10.0, -options.target_snr_db / 20.0);
          config.seed =
              master.child("prefix-" + matrix.proxies[static_cast<std::size_t>(p)] +
                           "-" + sample.id)
                  .seed();
          DifferentiableModel& proxy = *state.clones[static_cast<std::size_t>(p)];
          const PerturbationResult result = pgd_attack(
              proxy, sample.waveform, proxy.objective_for(target), config);
          const Waveform adv = sample.waveform + result.delta;
          task.predictions.reserve(state.clones.size());
          for (auto& model : state.clones)
            task.predictions.push_back(model->predict(adv));
        } catch (const std::exception&) {
          task.failed = true;
        }
      });

  matrix.cells.assign(static_cast<std::size_t>(pool_size),
                      std::vector<TransferCell>(static_cast<std::size_t>(pool_size)));
  for (int p = 0; p < pool_size; ++p) {
    for (int j = 0; j < pool_size; ++j) {
      TransferCell& cell = matrix.cells[static_cast<std::size_t>(p)]
                                       [static_cast<std::size_t>(j)];
      int n = 0;
      for (int s = 0; s < sample_count; ++s) {
        const TaskResult& task =
            task_results[static_cast<std::size_t>(p) * sample_count + s];
        if (task.failed) continue;
        const AudioSample& sample = eligible[static_cast<std::size_t>(s)];
        const std::string& pred = task.predictions[static_cast<std::size_t>(j)];
        const AttackTarget target =
            make_prefix_target(sample.transcript, options.word);
        cell.prefix_rate += prefix_success(pred, options.word) ? 1.0 : 0.0;
        cell.targeted_word +=
            targeted_success(pred, target.text, TextLevel::word).value;
        cell.targeted_char +=
            targeted_success(pred, target.text, TextLevel::character).value;
        cell.untargeted_word +=
            untargeted_success(pred, sample.transcript, TextLevel::word).value;
        matrix.records.push_back({sample.id, matrix.proxies[static_cast<std::size_t>(p)],
                                  matrix.models[static_cast<std::size_t>(j)],
                                  clean_preds[static_cast<std::size_t>(j)]
                                             [static_cast<std::size_t>(s)],
                                  pred});
        ++n;
      }
      cell.examples = n;
      cell.valid = n > 0;
      if (n > 0) {
        cell.prefix_rate /= n;
        cell.targeted_word /= n;
        cell.targeted_char /= n;
        cell.untargeted_word /= n;
      }
      // identity only: ancestry is shared across this kind of pool by
      // design, so lineage must not swallow the off-diagonal cells
      cell.diagonal = p == j;
    }
  }

  if (pool_size >= 2) {
    double sum = 0.0, sum_sq = 0.0;
    int n = 0;
    for (int p = 0; p < pool_size; ++p)
      for (int j = 0; j < pool_size; ++j) {
        const TransferCell& cell = matrix.cells[static_cast<std::size_t>(p)]
                                                [static_cast<std::size_t>(j)];
        if (cell.diagonal || !cell.valid) continue;
        sum += cell.prefix_rate;
        sum_sq += cell.prefix_rate * cell.prefix_rate;
        ++n;
      }
    if (n > 0) {
      matrix.off_diagonal_mean = sum / n;
      const double variance =
          std::max(sum_sq / n - matrix.off_diagonal_mean * matrix.off_diagonal_mean,
                   0.0);
      matrix.off_diagonal_sd = std::sqrt(variance);
      matrix.has_off_diagonal_stats = true;
    }
  }
  return matrix;
}

void export_dataset(const std::vector<AdversarialExample>& examples,
                    const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory / "audio");
  std::ofstream manifest(directory / "manifest.jsonl");
  if (!manifest)
    throw std::runtime_error("cannot write manifest in " + directory.string());
  for (const AdversarialExample& e : examples) {
    if (e.id.empty() || e.id.find('/') != std::string::npos ||
        e.id.find('\\') != std::string::npos)
      throw std::invalid_argument("export_dataset: unusable example id '" + e.id + "'");
    const std::string clean_rel = "audio/" + e.id + "_clean.wav";
    const std::string adv_rel = "audio/" + e.id + "_adv.wav";
    write_wav(directory / clean_rel, e.clean, e.sample_rate);
    write_wav(directory / adv_rel, e.clean + e.delta, e.sample_rate);

    nlohmann::json j{
        {"id", e.id},
        {"clean_path", clean_rel},
        {"adv_path", adv_rel},
        {"transcript", e.transcript},
        {"target_kind", kind_to_string(e.target.kind)},
        {"target", e.target.text},
        {"proxies", e.proxies},
        {"validation", e.validation},
        {"snr_db", snr_to_json(e.snr_db)},
        {"config_fingerprint", e.config_fingerprint},
        {"best_iteration", e.best_iteration},
        {"sample_rate", e.sample_rate},
        {"status", e.status},
    };
    if (e.target.kind == AttackTarget::Kind::class_distribution) {
      std::vector<double> dist(e.target.distribution.data(),
                               e.target.distribution.data() + e.target.distribution.size());
      j["target_distribution"] = dist;
      j["target_k"] = e.target.k;
    }
    manifest << j.dump() << '\n';
  }
  if (!manifest)
    throw std::runtime_error("short write on manifest in " + directory.string());
}

std::vector<AdversarialExample> import_dataset(
    const std::filesystem::path& directory) {
  std::ifstream manifest(directory / "manifest.jsonl");
  if (!manifest)
    throw std::runtime_error("import_dataset: no manifest.jsonl in " +
                             directory.string());
  std::vector<AdversarialExample> examples;
  std::string line;
  int line_number = 0;
  while (std::getline(manifest, line)) {
    ++line_number;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("manifest line " + std::to_string(line_number) +
                               ": " + e.what());
    }
    try {
      AdversarialExample ex;
      ex.id = j.at("id").get<std::string>();
      ex.transcript = j.at("transcript").get<std::string>();
      ex.target.kind = kind_from_string(j.at("target_kind").get<std::string>());
      ex.target.text = j.at("target").get<std::string>();
      if (j.contains("target_distribution")) {
        const auto dist = j.at("target_distribution").get<std::vector<double>>();
        ex.target.distribution =
            Eigen::Map<const Eigen::VectorXd>(dist.data(),
                                              static_cast<Eigen::Index>(dist.size()));
        ex.target.k = j.at("target_k").get<int>();
      }
      ex.proxies = j.at("proxies").get<std::vector<std::string>>();
      ex.validation = j.at("validation").get<std::string>();
      ex.snr_db = snr_from_json(j.at("snr_db"));
      ex.config_fingerprint = j.at("config_fingerprint").get<std::string>();
      ex.best_iteration = j.at("best_iteration").get<int>();
      ex.sample_rate = j.at("sample_rate").get<int>();
      ex.status = j.at("status").get<std::string>();

      const WavData clean = read_wav(directory / j.at("clean_path").get<std::string>());
      const WavData adv = read_wav(directory / j.at("adv_path").get<std::string>());
      if (clean.sample_rate != ex.sample_rate || adv.sample_rate != ex.sample_rate)
        throw std::runtime_error("sample rate disagrees with manifest");
      if (clean.samples.size() != adv.samples.size())
        throw std::runtime_error("clean/adversarial length mismatch");
      ex.clean = clean.samples;
      ex.delta = adv.samples - clean.samples;
      examples.push_back(std::move(ex));
    } catch (const std::exception& e) {
      throw std::runtime_error("manifest line " + std::to_string(line_number) +
                               ": " + e.what());
    }
  }
  return examples;
}

nlohmann::json TransferMatrix::to_json() const {
  nlohmann::json cell_rows = nlohmann::json::array();
  for (const auto& row : cells) {
    nlohmann::json row_json = nlohmann::json::array();
    for (const TransferCell& cell : row)
      row_json.push_back({{"targeted_word", cell.targeted_word},
                          {"targeted_char", cell.targeted_char},
                          {"untargeted_word", cell.untargeted_word},
                          {"prefix_rate", cell.prefix_rate},
                          {"diagonal", cell.diagonal},
                          {"valid", cell.valid},
                          {"examples", cell.examples}});
    cell_rows.push_back(std::move(row_json));
  }
  nlohmann::json record_rows = nlohmann::json::array();
  for (const TransferRecord& r : records)
    record_rows.push_back({{"example_id", r.example_id},
                           {"proxy_row", r.proxy_row},
                           {"model", r.model},
                           {"clean_prediction", r.clean_prediction},
                           {"adv_prediction", r.adv_prediction}});
  return {{"type", "transfer_matrix"},
          {"proxies", proxies},
          {"models", models},
          {"cells", cell_rows},
          {"clean_wer", clean_wer},
          {"clean_prefix_rate", clean_prefix_rate},
          {"prefix_word", prefix_word},
          {"has_prefix", has_prefix},
          {"off_diagonal_mean", off_diagonal_mean},
          {"off_diagonal_sd", off_diagonal_sd},
          {"has_off_diagonal_stats", has_off_diagonal_stats},
          {"records", record_rows}};
}

TransferMatrix TransferMatrix::from_json(const nlohmann::json& j) {
  TransferMatrix matrix;
  matrix.proxies = j.at("proxies").get<std::vector<std::string>>();
  matrix.models = j.at("models").get<std::vector<std::string>>();
  for (const auto& row_json : j.at("cells")) {
    std::vector<TransferCell> row;
    for (const auto& c : row_json) {
      TransferCell cell;
      cell.targeted_word = c.at("targeted_word").get<double>();
      cell.targeted_char = c.at("targeted_char").get<double>();
      cell.untargeted_word = c.at("untargeted_word").get<double>();
      cell.prefix_rate = c.at("prefix_rate").get<double>();
      cell.diagonal = c.at("diagonal").get<bool>();
      cell.valid = c.at("valid").get<bool>();
      cell.examples = c.at("examples").get<int>();
      row.push_back(cell);
    }
    matrix.cells.push_back(std::move(row));
  }
  matrix.clean_wer = j.at("clean_wer").get<std::vector<double>>();
  matrix.clean_prefix_rate = j.at("clean_prefix_rate").get<std::vector<double>>();
  matrix.prefix_word = j.at("prefix_word").get<std::string>();
  matrix.has_prefix = j.at("has_prefix").get<bool>();
  matrix.off_diagonal_mean = j.at("off_diagonal_mean").get<double>();
  matrix.off_diagonal_sd = j.at("off_diagonal_sd").get<double>();
  matrix.has_off_diagonal_stats = j.at("has_off_diagonal_stats").get<bool>();
  if (j.contains("records"))
    for (const auto& r : j.at("records"))
      matrix.records.push_back({r.at("example_id").get<std::string>(),
                                r.at("proxy_row").get<std::string>(),
                                r.at("model").get<std::string>(),
                                r.at("clean_prediction").get<std::string>(),
                                r.at("adv_prediction").get<std::string>()});
  return matrix;
}

nlohmann::json PrecisionCurve::to_json() const {
  nlohmann::json point_rows = nlohmann::json::array();
  for (const PrecisionPoint& p : points)
    point_rows.push_back({{"k", p.k},
                          {"white_box", p.white_box},
                          {"transfer", p.transfer},
                          {"repeats", p.repeats}});
  return {{"type", "precision_curve"},
          {"proxy", proxy},
          {"private", private_model},
          {"points", point_rows}};
}

PrecisionCurve PrecisionCurve::from_json(const nlohmann::json& j) {
  PrecisionCurve curve;
  curve.proxy = j.at("proxy").get<std::string>();
  curve.private_model = j.at("private").get<std::string>();
  for (const auto& p : j.at("points")) {
    PrecisionPoint point;
    point.k = p.at("k").get<int>();
    point.white_box = p.at("white_box").get<double>();
    point.transfer = p.at("transfer").get<double>();
    point.repeats = p.at("repeats").get<int>();
    curve.points.push_back(point);
  }
  return curve;
}

nlohmann::json LossTraces::to_json() const {
  nlohmann::json series_rows = nlohmann::json::array();
  for (const Series& s : series) {
    std::vector<int> iterations;
    std::vector<double> losses;
    for (const TracePoint& p : s.points) {
      iterations.push_back(p.iteration);
      losses.push_back(p.loss);
    }
    series_rows.push_back(
        {{"label", s.label}, {"iterations", iterations}, {"losses", losses}});
  }
  return {{"type", "loss_traces"}, {"title", title}, {"series", series_rows}};
}

LossTraces LossTraces::from_json(const nlohmann::json& j) {
  LossTraces traces;
  traces.title = j.at("title").get<std::string>();
  for (const auto& s : j.at("series")) {
    Series series;
    series.label = s.at("label").get<std::string>();
    const auto iterations = s.at("iterations").get<std::vector<int>>();
    const auto losses = s.at("losses").get<std::vector<double>>();
    if (iterations.size() != losses.size())
      throw std::runtime_error("loss traces: iteration/loss length mismatch");
    for (std::size_t i = 0; i < iterations.size(); ++i)
      series.points.push_back({iterations[i], losses[i]});
    traces.series.push_back(std::move(series));
  }
  return traces;
}

namespace {

[[noreturn]] void unknown_format(const std::string& format, const char* expected) {
  throw std::invalid_argument("render_report: unknown format \"" + format +
                              "\" (expected " + expected + ")");
}

std::ofstream open_report(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  return out;
}

}  // namespace

std::filesystem::path render_report(const TransferMatrix& matrix,
                                    const std::string& format,
                                    const std::filesystem::path& out_dir,
                                    const std::string& stem) {
  if (format == "csv") {
    const auto path = out_dir / (stem + ".csv");
    auto out = open_report(path);
    out << "proxy,model,clean_wer,targeted_word,targeted_char,untargeted_word";
    if (matrix.has_prefix) out << ",prefix_rate";
    out << ",non_transfer,examples,valid\n";
    for (std::size_t r = 0; r < matrix.proxies.size(); ++r)
      for (std::size_t j = 0; j < matrix.models.size(); ++j) {
        const TransferCell& cell = matrix.cells[r][j];
        out << matrix.proxies[r] << ',' << matrix.models[j] << ','
            << fmt(matrix.clean_wer[j]) << ',' << fmt(cell.targeted_word) << ','
            << fmt(cell.targeted_char) << ',' << fmt(cell.untargeted_word);
        if (matrix.has_prefix) out << ',' << fmt(cell.prefix_rate);
        out << ',' << (cell.diagonal ? 1 : 0) << ',' << cell.examples << ','
            << (cell.valid ? 1 : 0) << '\n';
      }
    return path;
  }
  if (format == "md") {
    const auto path = out_dir / (stem + ".md");
    auto out = open_report(path);
    out << "| Proxy | Model | Clean WER | Targeted (word) | Targeted (char) | "
           "Untargeted (word) |";
    if (matrix.has_prefix) out << " Prefix |";
    out << "\n|---|---|---|---|---|---|";
    if (matrix.has_prefix) out << "---|";
    out << '\n';
    for (std::size_t r = 0; r < matrix.proxies.size(); ++r)
      for (std::size_t j = 0; j < matrix.models.size(); ++j) {
        const TransferCell& cell = matrix.cells[r][j];
        // non-transfer cells are italicized, mirroring the usual table style
        const char* em = cell.diagonal ? "*" : "";
        out << "| " << matrix.proxies[r] << " | " << matrix.models[j] << " | "
            << fmt(matrix.clean_wer[j]) << " | ";
        if (!cell.valid) {
          out << "n/a | n/a | n/a |";
          if (matrix.has_prefix) out << " n/a |";
          out << '\n';
          continue;
        }
        out << em << fmt(cell.targeted_word) << em << " | " << em
            << fmt(cell.targeted_char) << em << " | " << em
            << fmt(cell.untargeted_word) << em << " |";
        if (matrix.has_prefix)
          out << ' ' << em << fmt(cell.prefix_rate) << em << " |";
        out << '\n';
      }
    if (matrix.has_prefix && !matrix.clean_prefix_rate.empty()) {
      out << "\nClean rate of \"" << matrix.prefix_word << "\" appearing first:";
      for (std::size_t j = 0; j < matrix.models.size(); ++j)
        out << ' ' << matrix.models[j] << "=" << fmt(matrix.clean_prefix_rate[j]);
      out << '\n';
    }
    if (matrix.has_off_diagonal_stats)
      out << "\nOff-diagonal prefix success: mean " << fmt(matrix.off_diagonal_mean)
          << ", sd " << fmt(matrix.off_diagonal_sd) << '\n';
    return path;
  }
  unknown_format(format, "csv or md");
}

std::filesystem::path render_report(const PrecisionCurve& curve,
                                    const std::string& format,
                                    const std::filesystem::path& out_dir,
                                    const std::string& stem) {
  if (format == "csv") {
    const auto path = out_dir / (stem + ".csv");
    auto out = open_report(path);
    out << "k,white_box,transfer,repeats\n";
    for (const PrecisionPoint& p : curve.points)
      out << p.k << ',' << fmt(p.white_box) << ',' << fmt(p.transfer) << ','
          << p.repeats << '\n';
    return path;
  }
  if (format == "png") {
    const auto path = out_dir / (stem + ".png");
    PlotSeries white{"white box " + curve.proxy, {}, {}};
    PlotSeries transfer{"transfer " + curve.private_model, {}, {}};
    for (const PrecisionPoint& p : curve.points) {
      white.x.push_back(p.k);
      white.y.push_back(p.white_box);
      transfer.x.push_back(p.k);
      transfer.y.push_back(p.transfer);
    }
    PlotOptions options;
    options.title = "top-k success vs precision";
    options.x_label = "k";
    options.y_label = "success rate";
    render_line_plot({white, transfer}, options, path);
    return path;
  }
  unknown_format(format, "csv or png");
}

std::filesystem::path render_report(const LossTraces& traces,
                                    const std::string& format,
                                    const std::filesystem::path& out_dir,
                                    const std::string& stem) {
  if (format == "csv") {
    const auto path = out_dir / (stem + ".csv");
    auto out = open_report(path);
    out << "series,iteration,loss\n";
    for (const LossTraces::Series& s : traces.series)
      for (const TracePoint& p : s.points)
        out << s.label << ',' << p.iteration << ',' << fmt(p.loss) << '\n';
    return path;
  }
  if (format == "png") {
    const auto path = out_dir / (stem + ".png");
    std::vector<PlotSeries> series;
    for (const LossTraces::Series& s : traces.series) {
      PlotSeries ps{s.label, {}, {}};
      for (const TracePoint& p : s.points) {
        ps.x.push_back(p.iteration);
        ps.y.push_back(p.loss);
      }
      series.push_back(std::move(ps));
    }
    PlotOptions options;
    options.title = traces.title.empty() ? "loss over attack steps" : traces.title;
    options.x_label = "iteration";
    options.y_label = "loss";
    render_line_plot(series, options, path);
    return path;
  }
  unknown_format(format, "csv or png");
}

}  // namespace perturbench
