#ifndef PERTURBENCH_TRAIN_HPP
#define PERTURBENCH_TRAIN_HPP

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "perturbench/toy_classifier.hpp"
#include "perturbench/toy_ctc_model.hpp"
#include "perturbench/types.hpp"

namespace perturbench {

// Adam over a flat parameter vector, with bias correction.
class Adam {
 public:
  Adam(Eigen::Index size, double learning_rate, double beta1 = 0.9,
       double beta2 = 0.999, double epsilon = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grads);

 private:
  double learning_rate_, beta1_, beta2_, epsilon_;
  int steps_ = 0;
  Eigen::VectorXd m_, v_;
};

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 2e-3;
  double grad_clip_norm = 5.0;  // global-norm clip; 0 disables

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("train config: learning_rate must be > 0");
    if (grad_clip_norm < 0.0) throw std::invalid_argument("train config: grad_clip_norm must be >= 0");
  }
};

// One trained model per seed; data, schedule and hyperparameters identical
// across the pool, only the seed differs. Pool members are named
// "<base name>-s<seed>" so they stay distinguishable in transfer matrices.
// A non-finite training loss aborts with the offending seed named.
std::vector<std::unique_ptr<ToyCtcModel>> train_toy_pool(
    const ToyCtcConfig& base, const std::vector<AudioSample>& dataset,
    const std::vector<std::uint64_t>& seeds, const TrainConfig& train);
std::vector<std::unique_ptr<ToyClassifier>> train_toy_pool(
    const ToyClassifierConfig& base, const std::vector<LabeledImage>& dataset,
    const std::vector<std::uint64_t>& seeds, const TrainConfig& train);

// One child per seed, each starting from the base model's weights and
// trained further under its own shuffle and dropout streams. Children are
// named "<base name>-f<seed>" and record the base as their lineage, so
// transfer grids can tell shared-ancestor cells from independent ones.
std::vector<std::unique_ptr<ToyCtcModel>> finetune_toy_pool(
    const ToyCtcModel& base, const std::vector<AudioSample>& dataset,
    const std::vector<std::uint64_t>& seeds, const TrainConfig& train);
std::vector<std::unique_ptr<ToyClassifier>> finetune_toy_pool(
    const ToyClassifier& base, const std::vector<LabeledImage>& dataset,
    const std::vector<std::uint64_t>& seeds, const TrainConfig& train);

// Mean character error rate of greedy transcriptions over the dataset.
double training_cer(ToyCtcModel& model, const std::vector<AudioSample>& dataset);

// Fraction of images classified correctly.
double training_accuracy(ToyClassifier& model,
                         const std::vector<LabeledImage>& dataset);

// One-hot class-distribution target for a label.
AttackTarget one_hot_target(int label, int classes);

}  // namespace perturbench

#endif  // PERTURBENCH_TRAIN_HPP
