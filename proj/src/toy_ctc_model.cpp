#include "perturbench/toy_ctc_model.hpp"

#include <stdexcept>

#include "perturbench/ctc.hpp"
#include "perturbench/serialize.hpp"
#include "perturbench/text.hpp"

namespace perturbench {

nlohmann::json ToyCtcConfig::to_json() const {
  return {
      {"name", name},
      {"lineage", lineage},
      {"alphabet", alphabet},
      {"conv1_channels", conv1_channels},
      {"conv1_kernel", conv1_kernel},
      {"conv1_stride", conv1_stride},
      {"conv2_channels", conv2_channels},
      {"conv2_kernel", conv2_kernel},
      {"conv2_stride", conv2_stride},
      {"hidden", hidden},
      {"dropout_rate", dropout_rate},
      {"init_seed", init_seed},
  };
}

ToyCtcConfig ToyCtcConfig::from_json(const nlohmann::json& j) {
  ToyCtcConfig c;
  c.name = j.value("name", c.name);
  c.lineage = j.value("lineage", c.lineage);
  c.alphabet = j.value("alphabet", c.alphabet);
  c.conv1_channels = j.value("conv1_channels", c.conv1_channels);
  c.conv1_kernel = j.value("conv1_kernel", c.conv1_kernel);
  c.conv1_stride = j.value("conv1_stride", c.conv1_stride);
  c.conv2_channels = j.value("conv2_channels", c.conv2_channels);
  c.conv2_kernel = j.value("conv2_kernel", c.conv2_kernel);
  c.conv2_stride = j.value("conv2_stride", c.conv2_stride);
  c.hidden = j.value("hidden", c.hidden);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.init_seed = j.value("init_seed", c.init_seed);
  return c;
}

ToyCtcModel::ToyCtcModel(const ToyCtcConfig& config)
    : config_(config), dropout_rng_(config.init_seed ^ 0x5eedull) {
  Rng init_rng(config_.init_seed);
  conv1_.init(config_.conv1_channels, 1, config_.conv1_kernel, config_.conv1_stride, init_rng);
  conv2_.init(config_.conv2_channels, config_.conv1_channels, config_.conv2_kernel,
              config_.conv2_stride, init_rng);
  rnn_.init(config_.hidden, config_.conv2_channels, init_rng);
  proj_.init(vocab_size(), config_.hidden, init_rng);
  dropout_pre_rnn_.rate = config_.dropout_rate;
  dropout_post_rnn_.rate = config_.dropout_rate;
}

std::vector<int> ToyCtcModel::encode(const std::string& text) const {
  const TokenSequence chars = normalize_text(text, TextLevel::character);
  std::vector<int> labels;
  labels.reserve(chars.size());
  for (const auto& token : chars.tokens) {
    const auto pos = config_.alphabet.find(token[0]);
    if (pos == std::string::npos)
      throw std::invalid_argument("toy_ctc: character '" + token +
                                  "' not in model alphabet");
    labels.push_back(static_cast<int>(pos) + 1);
  }
  return labels;
}

std::string ToyCtcModel::decode(const std::vector<int>& labels) const {
  std::string text;
  text.reserve(labels.size());
  for (int label : labels) {
    if (label < 1 || label > static_cast<int>(config_.alphabet.size()))
      throw std::invalid_argument("toy_ctc: label out of range");
    text.push_back(config_.alphabet[static_cast<std::size_t>(label - 1)]);
  }
  return text;
}

Eigen::MatrixXd ToyCtcModel::run_forward(const Waveform& input, bool stochastic) {
  if (input.size() < config_.conv1_kernel)
    throw std::invalid_argument("toy_ctc: input shorter than the receptive field");
  dropout_pre_rnn_.active = stochastic;
  dropout_post_rnn_.active = stochastic;

  Eigen::MatrixXd x = input.transpose();  // 1 x N
  x = relu1_.forward(conv1_.forward(x));
  x = relu2_.forward(conv2_.forward(x));
  x = dropout_pre_rnn_.forward(x, dropout_rng_);
  x = rnn_.forward(x);
  x = dropout_post_rnn_.forward(x, dropout_rng_);
  cached_log_prob_cols_ = nn::log_softmax_columns(proj_.forward(x));
  return cached_log_prob_cols_.transpose();  // frames x vocab
}

Waveform ToyCtcModel::run_backward(const Eigen::MatrixXd& grad_log_probs) {
  Eigen::MatrixXd g = grad_log_probs.transpose();  // vocab x frames
  g = nn::log_softmax_columns_backward(cached_log_prob_cols_, g);
  g = proj_.backward(g);
  g = dropout_post_rnn_.backward(g);
  g = rnn_.backward(g);
  g = dropout_pre_rnn_.backward(g);
  g = relu2_.backward(g);
  g = conv2_.backward(g);
  g = relu1_.backward(g);
  g = conv1_.backward(g);
  return g.transpose().col(0);
}

Eigen::MatrixXd ToyCtcModel::forward(const Waveform& input) {
  return run_forward(input, mode_ == ModelMode::stochastic);
}

double ToyCtcModel::objective_gradient(const Waveform& input,
                                       const OutputObjective& objective,
                                       Waveform* input_grad) {
  const Eigen::MatrixXd output = run_forward(input, mode_ == ModelMode::stochastic);
  if (input_grad == nullptr) return objective.eval(output, nullptr);
  zero_grads();
  Eigen::MatrixXd grad_output;
  const double loss = objective.eval(output, &grad_output);
  *input_grad = run_backward(grad_output);
  return loss;
}

OutputObjective ToyCtcModel::objective_for(const AttackTarget& target) const {
  if (target.kind == AttackTarget::Kind::class_distribution)
    throw std::invalid_argument("toy_ctc: class-distribution targets need a classifier");
  const std::vector<int> labels = encode(target.text);
  OutputObjective objective;
  objective.eval = [labels](const Eigen::MatrixXd& output,
                            Eigen::MatrixXd* grad_output) {
    return ctc_loss<double>(output, labels, grad_output);
  };
  return objective;
}

std::string ToyCtcModel::predict(const Waveform& input) {
  const Eigen::MatrixXd log_probs = run_forward(input, false);
  return decode(ctc_greedy_decode(log_probs));
}

std::unique_ptr<DifferentiableModel> ToyCtcModel::clone() const {
  return std::make_unique<ToyCtcModel>(*this);
}

Eigen::VectorXd ToyCtcModel::flat_params() const {
  const Eigen::Index total = conv1_.weight.size() + conv1_.bias.size() +
                             conv2_.weight.size() + conv2_.bias.size() +
                             rnn_.w_input.size() + rnn_.w_recur.size() + rnn_.bias.size() +
                             proj_.weight.size() + proj_.bias.size();
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  auto put = [&](const auto& block) {
    flat.segment(at, block.size()) =
        Eigen::Map<const Eigen::VectorXd>(block.data(), block.size());
    at += block.size();
  };
  put(conv1_.weight); put(conv1_.bias);
  put(conv2_.weight); put(conv2_.bias);
  put(rnn_.w_input); put(rnn_.w_recur); put(rnn_.bias);
  put(proj_.weight); put(proj_.bias);
  return flat;
}

void ToyCtcModel::set_flat_params(const Eigen::VectorXd& params) {
  Eigen::Index at = 0;
  auto take = [&](auto& block) {
    Eigen::Map<Eigen::VectorXd>(block.data(), block.size()) =
        params.segment(at, block.size());
    at += block.size();
  };
  take(conv1_.weight); take(conv1_.bias);
  take(conv2_.weight); take(conv2_.bias);
  take(rnn_.w_input); take(rnn_.w_recur); take(rnn_.bias);
  take(proj_.weight); take(proj_.bias);
  if (at != params.size())
    throw std::invalid_argument("toy_ctc: parameter vector size mismatch");
}

Eigen::VectorXd ToyCtcModel::flat_grads() const {
  Eigen::VectorXd flat(flat_params().size());
  Eigen::Index at = 0;
  auto put = [&](const auto& block) {
    flat.segment(at, block.size()) =
        Eigen::Map<const Eigen::VectorXd>(block.data(), block.size());
    at += block.size();
  };
  put(conv1_.weight_grad); put(conv1_.bias_grad);
  put(conv2_.weight_grad); put(conv2_.bias_grad);
  put(rnn_.w_input_grad); put(rnn_.w_recur_grad); put(rnn_.bias_grad);
  put(proj_.weight_grad); put(proj_.bias_grad);
  return flat;
}

void ToyCtcModel::zero_grads() {
  conv1_.zero_grads();
  conv2_.zero_grads();
  rnn_.zero_grads();
  proj_.zero_grads();
}

nlohmann::json ToyCtcModel::checkpoint() const {
  nlohmann::json j;
  j["format"] = "perturbench-checkpoint-v1";
  j["arch"] = "toy_ctc";
  j["config"] = config_.to_json();
  j["params"] = {
      {"conv1.weight", matrix_to_json(conv1_.weight)},
      {"conv1.bias", vector_to_json(conv1_.bias)},
      {"conv2.weight", matrix_to_json(conv2_.weight)},
      {"conv2.bias", vector_to_json(conv2_.bias)},
      {"rnn.w_input", matrix_to_json(rnn_.w_input)},
      {"rnn.w_recur", matrix_to_json(rnn_.w_recur)},
      {"rnn.bias", vector_to_json(rnn_.bias)},
      {"proj.weight", matrix_to_json(proj_.weight)},
      {"proj.bias", vector_to_json(proj_.bias)},
  };
  return j;
}

std::unique_ptr<ToyCtcModel> ToyCtcModel::from_checkpoint(const nlohmann::json& j) {
  auto model = std::make_unique<ToyCtcModel>(ToyCtcConfig::from_json(j.at("config")));
  if (j.contains("params")) {
    const auto& p = j.at("params");
    model->conv1_.weight = matrix_from_json(p.at("conv1.weight"));
    model->conv1_.bias = vector_from_json(p.at("conv1.bias"));
    model->conv2_.weight = matrix_from_json(p.at("conv2.weight"));
    model->conv2_.bias = vector_from_json(p.at("conv2.bias"));
    model->rnn_.w_input = matrix_from_json(p.at("rnn.w_input"));
    model->rnn_.w_recur = matrix_from_json(p.at("rnn.w_recur"));
    model->rnn_.bias = vector_from_json(p.at("rnn.bias"));
    model->proj_.weight = matrix_from_json(p.at("proj.weight"));
    model->proj_.bias = vector_from_json(p.at("proj.bias"));
  }
  return model;
}

void ToyCtcModel::register_adapter() {
  if (!adapter_registered("toy_ctc")) {
    perturbench::register_adapter("toy_ctc", [](const nlohmann::json& j) {
      return std::unique_ptr<DifferentiableModel>(
          j.contains("params") ? from_checkpoint(j).release()
                               : new ToyCtcModel(ToyCtcConfig::from_json(
                                     j.contains("config") ? j.at("config") : j)));
    });
  }
}

}  // namespace perturbench
