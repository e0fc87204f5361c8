#ifndef PERTURBENCH_TOY_CLASSIFIER_HPP
#define PERTURBENCH_TOY_CLASSIFIER_HPP

#include <json.hpp>
#include <memory>
#include <string>

#include "perturbench/model.hpp"
#include "perturbench/nn.hpp"
#include "perturbench/rng.hpp"

namespace perturbench {

struct ToyClassifierConfig {
  std::string name = "toy_classifier";
  std::string lineage;
  int image_h = 16;
  int image_w = 16;
  int classes = 10;
  int conv_channels = 6;
  int conv_kernel = 3;
  int conv_stride = 2;
  double dropout_rate = 0.0;
  std::uint64_t init_seed = 1;

  nlohmann::json to_json() const;
  static ToyClassifierConfig from_json(const nlohmann::json& j);
};

// Small convolutional softmax classifier over flattened images. Output of
// forward() is a 1 x C row of class probabilities.
class ToyClassifier : public DifferentiableModel {
 public:
  explicit ToyClassifier(const ToyClassifierConfig& config);

  const std::string& name() const override { return config_.name; }
  const std::string& lineage() const override { return config_.lineage; }
  ModelMode mode() const override { return mode_; }
  void set_mode(ModelMode mode) override { mode_ = mode; }
  void reseed(std::uint64_t seed) override { dropout_rng_ = Rng(seed); }

  Eigen::MatrixXd forward(const Waveform& input) override;
  double objective_gradient(const Waveform& input,
                            const OutputObjective& objective,
                            Waveform* input_grad) override;
  OutputObjective objective_for(const AttackTarget& target) const override;
  std::string predict(const Waveform& input) override;
  std::unique_ptr<DifferentiableModel> clone() const override;
  nlohmann::json checkpoint() const override;

  const ToyClassifierConfig& config() const { return config_; }

  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& params);
  Eigen::VectorXd flat_grads() const;
  void zero_grads();

  static void register_adapter();
  static std::unique_ptr<ToyClassifier> from_checkpoint(const nlohmann::json& j);

 private:
  Eigen::MatrixXd run_forward(const Waveform& input, bool stochastic);
  Waveform run_backward(const Eigen::MatrixXd& grad_probs);

  ToyClassifierConfig config_;
  ModelMode mode_ = ModelMode::deterministic;
  Rng dropout_rng_;

  nn::Conv2d<double> conv_;
  nn::Relu<double> relu_;
  nn::Dropout<double> dropout_;
  nn::Dense<double> head_;
  Eigen::VectorXd cached_probs_;
};

// KL(target || probabilities) over the positions with target mass, as the
// classifier attack objective: sum_i y_i (log y_i - log p_i).
double kl_to_target(const Eigen::VectorXd& probs, const Eigen::VectorXd& target,
                    Eigen::VectorXd* grad_probs = nullptr);

}  // namespace perturbench

#endif  // PERTURBENCH_TOY_CLASSIFIER_HPP
