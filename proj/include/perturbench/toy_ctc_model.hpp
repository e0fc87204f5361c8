#ifndef PERTURBENCH_TOY_CTC_MODEL_HPP
#define PERTURBENCH_TOY_CTC_MODEL_HPP

#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "perturbench/model.hpp"
#include "perturbench/nn.hpp"
#include "perturbench/rng.hpp"

namespace perturbench {

struct ToyCtcConfig {
  std::string name = "toy_ctc";
  std::string lineage;            // empty = trained from scratch
  std::string alphabet = " ABCDENOSTU";  // vocab index = position + 1; 0 is blank
  int conv1_channels = 12;
  int conv1_kernel = 16;
  int conv1_stride = 8;
  int conv2_channels = 20;
  int conv2_kernel = 8;
  int conv2_stride = 4;
  int hidden = 28;
  double dropout_rate = 0.1;
  std::uint64_t init_seed = 1;

  nlohmann::json to_json() const;
  static ToyCtcConfig from_json(const nlohmann::json& j);
};

// Small convolution + recurrent stack emitting per-frame log-probabilities
// over a character vocabulary with a leading blank. Stands in for a
// CTC-trained speech recognizer at desk scale.
class ToyCtcModel : public DifferentiableModel {
 public:
  explicit ToyCtcModel(const ToyCtcConfig& config);

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

  const ToyCtcConfig& config() const { return config_; }
  int vocab_size() const { return static_cast<int>(config_.alphabet.size()) + 1; }
  // Normalized characters -> vocabulary labels (blank excluded).
  std::vector<int> encode(const std::string& text) const;
  std::string decode(const std::vector<int>& labels) const;

  // Flat parameter access for the training loop.
  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& params);
  Eigen::VectorXd flat_grads() const;
  void zero_grads();

  static void register_adapter();
  static std::unique_ptr<ToyCtcModel> from_checkpoint(const nlohmann::json& j);

 private:
  Eigen::MatrixXd run_forward(const Waveform& input, bool stochastic);
  Waveform run_backward(const Eigen::MatrixXd& grad_log_probs);

  ToyCtcConfig config_;
  ModelMode mode_ = ModelMode::deterministic;
  Rng dropout_rng_;

  nn::Conv1d<double> conv1_;
  nn::Conv1d<double> conv2_;
  nn::Relu<double> relu1_, relu2_;
  nn::Dropout<double> dropout_pre_rnn_, dropout_post_rnn_;
  nn::ElmanRnn<double> rnn_;
  nn::FrameDense<double> proj_;
  Eigen::MatrixXd cached_log_prob_cols_;  // vocab x frames
};

}  // namespace perturbench

#endif  // PERTURBENCH_TOY_CTC_MODEL_HPP
