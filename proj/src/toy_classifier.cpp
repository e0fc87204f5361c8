#include "perturbench/toy_classifier.hpp"

#include <stdexcept>

#include "perturbench/serialize.hpp"

namespace perturbench {

nlohmann::json ToyClassifierConfig::to_json() const {
  return {
      {"name", name},
      {"lineage", lineage},
      {"image_h", image_h},
      {"image_w", image_w},
      {"classes", classes},
      {"conv_channels", conv_channels},
      {"conv_kernel", conv_kernel},
      {"conv_stride", conv_stride},
      {"dropout_rate", dropout_rate},
      {"init_seed", init_seed},
  };
}

ToyClassifierConfig ToyClassifierConfig::from_json(const nlohmann::json& j) {
  ToyClassifierConfig c;
  c.name = j.value("name", c.name);
  c.lineage = j.value("lineage", c.lineage);
  c.image_h = j.value("image_h", c.image_h);
  c.image_w = j.value("image_w", c.image_w);
  c.classes = j.value("classes", c.classes);
  c.conv_channels = j.value("conv_channels", c.conv_channels);
  c.conv_kernel = j.value("conv_kernel", c.conv_kernel);
  c.conv_stride = j.value("conv_stride", c.conv_stride);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.init_seed = j.value("init_seed", c.init_seed);
  return c;
}

double kl_to_target(const Eigen::VectorXd& probs, const Eigen::VectorXd& target,
                    Eigen::VectorXd* grad_probs) {
  if (probs.size() != target.size())
    throw std::invalid_argument("kl_to_target: size mismatch");
  constexpr double floor = 1e-12;  // keeps log finite when mass collapses
  double kl = 0.0;
  if (grad_probs != nullptr) grad_probs->setZero(probs.size());
  for (Eigen::Index i = 0; i < target.size(); ++i) {
    const double y = target(i);
    if (y <= 0.0) continue;
    const double p = std::max(probs(i), floor);
    kl += y * (std::log(y) - std::log(p));
    if (grad_probs != nullptr) (*grad_probs)(i) = -y / p;
  }
  return kl;
}

ToyClassifier::ToyClassifier(const ToyClassifierConfig& config)
    : config_(config), dropout_rng_(config.init_seed ^ 0x5eedull) {
  Rng init_rng(config_.init_seed);
  conv_.init(config_.conv_channels, 1, config_.conv_kernel, config_.conv_stride,
             config_.image_h, config_.image_w, init_rng);
  const int flat = config_.conv_channels * conv_.out_h() * conv_.out_w();
  head_.init(config_.classes, flat, init_rng);
  dropout_.rate = config_.dropout_rate;
}

Eigen::MatrixXd ToyClassifier::run_forward(const Waveform& input, bool stochastic) {
  if (input.size() != static_cast<Eigen::Index>(config_.image_h) * config_.image_w)
    throw std::invalid_argument("toy_classifier: bad image size");
  dropout_.active = stochastic;

  Eigen::MatrixXd x = input.transpose();  // 1 x (H*W)
  x = relu_.forward(conv_.forward(x));
  x = dropout_.forward(x, dropout_rng_);
  // flatten channel-major feature map into the head input
  const Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  cached_probs_ = nn::softmax<double>(head_.forward(flat));
  return cached_probs_.transpose();  // 1 x C
}

Waveform ToyClassifier::run_backward(const Eigen::MatrixXd& grad_probs) {
  // through softmax: dz = p .* (dp - <p, dp>)
  const Eigen::VectorXd dp = grad_probs.row(0).transpose();
  const double inner = cached_probs_.dot(dp);
  const Eigen::VectorXd dz =
      (cached_probs_.array() * (dp.array() - inner)).matrix();
  const Eigen::VectorXd dflat = head_.backward(dz);
  Eigen::MatrixXd g = Eigen::Map<const Eigen::MatrixXd>(
      dflat.data(), config_.conv_channels,
      static_cast<Eigen::Index>(conv_.out_h()) * conv_.out_w());
  g = dropout_.backward(g);
  g = relu_.backward(g);
  g = conv_.backward(g);
  return g.transpose().col(0);
}

Eigen::MatrixXd ToyClassifier::forward(const Waveform& input) {
  return run_forward(input, mode_ == ModelMode::stochastic);
}

double ToyClassifier::objective_gradient(const Waveform& input,
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

OutputObjective ToyClassifier::objective_for(const AttackTarget& target) const {
  if (target.kind != AttackTarget::Kind::class_distribution)
    throw std::invalid_argument("toy_classifier: needs a class-distribution target");
  if (target.distribution.size() != config_.classes)
    throw std::invalid_argument("toy_classifier: target distribution length mismatch");
  const Eigen::VectorXd dist = target.distribution;
  OutputObjective objective;
  objective.eval = [dist](const Eigen::MatrixXd& output, Eigen::MatrixXd* grad_output) {
    const Eigen::VectorXd probs = output.row(0).transpose();
    if (grad_output == nullptr) return kl_to_target(probs, dist, nullptr);
    Eigen::VectorXd grad_probs;
    const double kl = kl_to_target(probs, dist, &grad_probs);
    *grad_output = grad_probs.transpose();
    return kl;
  };
  return objective;
}

std::string ToyClassifier::predict(const Waveform& input) {
  const Eigen::MatrixXd probs = run_forward(input, false);
  Eigen::Index best;
  probs.row(0).maxCoeff(&best);
  return std::to_string(best);
}

std::unique_ptr<DifferentiableModel> ToyClassifier::clone() const {
  return std::make_unique<ToyClassifier>(*this);
}

Eigen::VectorXd ToyClassifier::flat_params() const {
  Eigen::VectorXd flat(conv_.weight.size() + conv_.bias.size() +
                       head_.weight.size() + head_.bias.size());
  Eigen::Index at = 0;
  auto put = [&](const auto& block) {
    flat.segment(at, block.size()) =
        Eigen::Map<const Eigen::VectorXd>(block.data(), block.size());
    at += block.size();
  };
  put(conv_.weight); put(conv_.bias);
  put(head_.weight); put(head_.bias);
  return flat;
}

void ToyClassifier::set_flat_params(const Eigen::VectorXd& params) {
  Eigen::Index at = 0;
  auto take = [&](auto& block) {
    Eigen::Map<Eigen::VectorXd>(block.data(), block.size()) =
        params.segment(at, block.size());
    at += block.size();
  };
  take(conv_.weight); take(conv_.bias);
  take(head_.weight); take(head_.bias);
  if (at != params.size())
    throw std::invalid_argument("toy_classifier: parameter vector size mismatch");
}

Eigen::VectorXd ToyClassifier::flat_grads() const {
  Eigen::VectorXd flat(flat_params().size());
  Eigen::Index at = 0;
  auto put = [&](const auto& block) {
    flat.segment(at, block.size()) =
        Eigen::Map<const Eigen::VectorXd>(block.data(), block.size());
    at += block.size();
  };
  put(conv_.weight_grad); put(conv_.bias_grad);
  put(head_.weight_grad); put(head_.bias_grad);
  return flat;
}

void ToyClassifier::zero_grads() {
  conv_.zero_grads();
  head_.zero_grads();
}

nlohmann::json ToyClassifier::checkpoint() const {
  nlohmann::json j;
  j["format"] = "perturbench-checkpoint-v1";
  j["arch"] = "toy_classifier";
  j["config"] = config_.to_json();
  j["params"] = {
      {"conv.weight", matrix_to_json(conv_.weight)},
      {"conv.bias", vector_to_json(conv_.bias)},
      {"head.weight", matrix_to_json(head_.weight)},
      {"head.bias", vector_to_json(head_.bias)},
  };
  return j;
}

std::unique_ptr<ToyClassifier> ToyClassifier::from_checkpoint(const nlohmann::json& j) {
  auto model =
      std::make_unique<ToyClassifier>(ToyClassifierConfig::from_json(j.at("config")));
  if (j.contains("params")) {
    const auto& p = j.at("params");
    model->conv_.weight = matrix_from_json(p.at("conv.weight"));
    model->conv_.bias = vector_from_json(p.at("conv.bias"));
    model->head_.weight = matrix_from_json(p.at("head.weight"));
    model->head_.bias = vector_from_json(p.at("head.bias"));
  }
  return model;
}

void ToyClassifier::register_adapter() {
  if (!adapter_registered("toy_classifier")) {
    perturbench::register_adapter("toy_classifier", [](const nlohmann::json& j) {
      return std::unique_ptr<DifferentiableModel>(
          j.contains("params") ? from_checkpoint(j).release()
                               : new ToyClassifier(ToyClassifierConfig::from_json(
                                     j.contains("config") ? j.at("config") : j)));
    });
  }
}

}  // namespace perturbench
