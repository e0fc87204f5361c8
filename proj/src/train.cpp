#include "perturbench/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "perturbench/metrics.hpp"
#include "perturbench/rng.hpp"

namespace perturbench {

Adam::Adam(Eigen::Index size, double learning_rate, double beta1, double beta2,
           double epsilon)
    : learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw std::invalid_argument("adam: size mismatch");
  ++steps_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grads;
  v_ = beta2_ * v_.array() + (1.0 - beta2_) * grads.array().square();
  const double m_scale = 1.0 - std::pow(beta1_, steps_);
  const double v_scale = 1.0 - std::pow(beta2_, steps_);
  params.array() -= learning_rate_ * (m_.array() / m_scale) /
                    ((v_.array() / v_scale).sqrt() + epsilon_);
}

namespace {

[[noreturn]] void report_divergence(const char* arch, std::uint64_t seed,
                                    int epoch, double loss) {
  std::ostringstream msg;
  msg << arch << " training diverged at seed " << seed << " (epoch " << epoch
      << ", loss " << loss << ")";
  throw std::runtime_error(msg.str());
}

// Single-example Adam over shuffled epochs. The model's parameter gradients
// are populated as a side effect of its input-gradient pass.
template <typename Model>
void fit(Model& model, const std::vector<Waveform>& inputs,
         const std::vector<OutputObjective>& objectives, const TrainConfig& train,
         std::uint64_t seed, const char* arch) {
  train.validate();
  Eigen::VectorXd params = model.flat_params();
  Adam optimizer(params.size(), train.learning_rate);
  Rng shuffle_rng = Rng(seed).child("train-shuffle");
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  Waveform input_grad;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    for (std::size_t i : order) {
      const double loss =
          model.objective_gradient(inputs[i], objectives[i], &input_grad);
      if (!std::isfinite(loss)) report_divergence(arch, seed, epoch, loss);
      Eigen::VectorXd grads = model.flat_grads();
      if (!grads.allFinite()) report_divergence(arch, seed, epoch, loss);
      if (train.grad_clip_norm > 0.0) {
        const double norm = grads.norm();
        if (norm > train.grad_clip_norm) grads *= train.grad_clip_norm / norm;
      }
      optimizer.step(params, grads);
      model.set_flat_params(params);
    }
  }
}

}  // namespace

std::vector<std::unique_ptr<ToyCtcModel>> train_toy_pool(
    const ToyCtcConfig& base, const std::vector<AudioSample>& dataset,
    const std::vector<std::uint64_t>& seeds, const TrainConfig& train) {
  if (dataset.empty()) throw std::invalid_argument("train_toy_pool: empty dataset");
  if (seeds.empty()) throw std::invalid_argument("train_toy_pool: no seeds");
  std::vector<std::unique_ptr<ToyCtcModel>> pool;
  pool.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    ToyCtcConfig config = base;
    config.init_seed = seed;
    config.name = base.name + "-s" + std::to_string(seed);
    auto model = std::make_unique<ToyCtcModel>(config);

    std::vector<Waveform> inputs;
    std::vector<OutputObjective> objectives;
    inputs.reserve(dataset.size());
    objectives.reserve(dataset.size());
    for (const AudioSample& sample : dataset) {
      inputs.push_back(sample.waveform);
      objectives.push_back(
          model->objective_for(AttackTarget::make_transcript(sample.transcript)));
    }

    model->set_mode(ModelMode::stochastic);
    fit(*model, inputs, objectives, train, seed, "toy_ctc");
    model->set_mode(ModelMode::deterministic);
    pool.push_back(std::move(model));
  }
  return pool;
}

std::vector<std::unique_ptr<ToyClassifier>> train_toy_pool(
    const ToyClassifierConfig& base, const std::vector<LabeledImage>& dataset,
    const std::vector<std::uint64_t>& seeds, const TrainConfig& train) {
  if (dataset.empty()) throw std::invalid_argument("train_toy_pool: empty dataset");
  if (seeds.empty()) throw std::invalid_argument("train_toy_pool: no seeds");
  std::vector<std::unique_ptr<ToyClassifier>> pool;
  pool.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    ToyClassifierConfig config = base;
    config.init_seed = seed;
    config.name = base.name + "-s" + std::to_string(seed);
    auto model = std::make_unique<ToyClassifier>(config);

    std::vector<Waveform> inputs;
    std::vector<OutputObjective> objectives;
    inputs.reserve(dataset.size());
    objectives.reserve(dataset.size());
    for (const LabeledImage& image : dataset) {
      inputs.push_back(image.pixels);
      objectives.push_back(
          model->objective_for(one_hot_target(image.label, config.classes)));
    }

    model->set_mode(ModelMode::stochastic);
    fit(*model, inputs, objectives, train, seed, "toy_classifier");
    model->set_mode(ModelMode::deterministic);
    pool.push_back(std::move(model));
  }
  return pool;
}

std::vector<std::unique_ptr<ToyCtcModel>> finetune_toy_pool(
    const ToyCtcModel& base, const std::vector<AudioSample>& dataset,
    const std::vector<std::uint64_t>& seeds, const TrainConfig& train) {
  if (dataset.empty())
    throw std::invalid_argument("finetune_toy_pool: empty dataset");
  if (seeds.empty()) throw std::invalid_argument("finetune_toy_pool: no seeds");
  const Eigen::VectorXd base_params = base.flat_params();
  std::vector<std::unique_ptr<ToyCtcModel>> pool;
  pool.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    ToyCtcConfig config = base.config();
    config.name = base.config().name + "-f" + std::to_string(seed);
    config.lineage = base.name();
    auto model = std::make_unique<ToyCtcModel>(config);
    model->set_flat_params(base_params);

    std::vector<Waveform> inputs;
    std::vector<OutputObjective> objectives;
    inputs.reserve(dataset.size());
    objectives.reserve(dataset.size());
    for (const AudioSample& sample : dataset) {
      inputs.push_back(sample.waveform);
      objectives.push_back(
          model->objective_for(AttackTarget::make_transcript(sample.transcript)));
    }

    model->set_mode(ModelMode::stochastic);
    model->reseed(Rng(seed).child("finetune-dropout").seed());
    fit(*model, inputs, objectives, train, seed, "toy_ctc");
    model->set_mode(ModelMode::deterministic);
    pool.push_back(std::move(model));
  }
  return pool;
}

std::vector<std::unique_ptr<ToyClassifier>> finetune_toy_pool(
    const ToyClassifier& base, const std::vector<LabeledImage>& dataset,
    const std::vector<std::uint64_t>& seeds, const TrainConfig& train) {
  if (dataset.empty())
    throw std::invalid_argument("finetune_toy_pool: empty dataset");
  if (seeds.empty()) throw std::invalid_argument("finetune_toy_pool: no seeds");
  const Eigen::VectorXd base_params = base.flat_params();
  std::vector<std::unique_ptr<ToyClassifier>> pool;
  pool.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    ToyClassifierConfig config = base.config();
    config.name = base.config().name + "-f" + std::to_string(seed);
    config.lineage = base.name();
    auto model = std::make_unique<ToyClassifier>(config);
    model->set_flat_params(base_params);

    std::vector<Waveform> inputs;
    std::vector<OutputObjective> objectives;
    inputs.reserve(dataset.size());
    objectives.reserve(dataset.size());
    for (const LabeledImage& image : dataset) {
      inputs.push_back(image.pixels);
      objectives.push_back(
          model->objective_for(one_hot_target(image.label, config.classes)));
    }

    model->set_mode(ModelMode::stochastic);
    model->reseed(Rng(seed).child("finetune-dropout").seed());
    fit(*model, inputs, objectives, train, seed, "toy_classifier");
    model->set_mode(ModelMode::deterministic);
    pool.push_back(std::move(model));
  }
  return pool;
}

double training_cer(ToyCtcModel& model, const std::vector<AudioSample>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("training_cer: empty dataset");
  double total = 0.0;
  for (const AudioSample& sample : dataset) {
    const std::string prediction = model.predict(sample.waveform);
    total += error_rate(normalize_text(sample.transcript, TextLevel::character),
                        normalize_text(prediction, TextLevel::character));
  }
  return total / static_cast<double>(dataset.size());
}

double training_accuracy(ToyClassifier& model,
                         const std::vector<LabeledImage>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("training_accuracy: empty dataset");
  int correct = 0;
  for (const LabeledImage& image : dataset)
    if (model.predict(image.pixels) == std::to_string(image.label)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

AttackTarget one_hot_target(int label, int classes) {
  if (label < 0 || label >= classes)
    throw std::invalid_argument("one_hot_target: label out of range");
  Eigen::VectorXd dist = Eigen::VectorXd::Zero(classes);
  dist(label) = 1.0;
  return AttackTarget::make_class_distribution(std::move(dist), 1);
}

}  // namespace perturbench
