#ifndef PERTURBENCH_MODEL_HPP
#define PERTURBENCH_MODEL_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <memory>
#include <string>

#include "perturbench/types.hpp"

namespace perturbench {

// A loss over a model's raw output scores, with its gradient. `grad_output`
// may be null when only the value is needed.
struct OutputObjective {
  std::function<double(const Eigen::MatrixXd& output,
                       Eigen::MatrixXd* grad_output)>
      eval;
};

// Contract every attackable model satisfies: differentiable loss w.r.t. the
// raw input, a decoded prediction, and an explicit stochastic/deterministic
// mode switch. In deterministic mode identical inputs yield identical
// outputs.
class DifferentiableModel {
 public:
  virtual ~DifferentiableModel() = default;

  virtual const std::string& name() const = 0;
  // Pretraining lineage tag; empty when trained from scratch. Models sharing
  // a nonempty tag do not count as transfer targets for each other.
  virtual const std::string& lineage() const { return empty_; }

  virtual ModelMode mode() const = 0;
  virtual void set_mode(ModelMode mode) = 0;
  // Reseeds the stochastic-regularization stream (dropout masks).
  virtual void reseed(std::uint64_t seed) = 0;

  // Raw output scores. Sequence models: frames x vocab log-probabilities.
  // Classifiers: 1 x C softmax probabilities.
  virtual Eigen::MatrixXd forward(const Waveform& input) = 0;

  // One forward/backward pass with shared stochastic state. Returns the
  // objective value; fills `input_grad` when non-null.
  virtual double objective_gradient(const Waveform& input,
                                    const OutputObjective& objective,
                                    Waveform* input_grad) = 0;

  // Training loss toward an attack target, as used in the attack objective.
  virtual OutputObjective objective_for(const AttackTarget& target) const = 0;

  virtual std::string predict(const Waveform& input) = 0;

  virtual std::unique_ptr<DifferentiableModel> clone() const = 0;
  virtual nlohmann::json checkpoint() const = 0;

  double loss(const Waveform& input, const AttackTarget& target) {
    return objective_gradient(input, objective_for(target), nullptr);
  }
  Waveform input_gradient(const Waveform& input, const AttackTarget& target) {
    Waveform grad;
    objective_gradient(input, objective_for(target), &grad);
    return grad;
  }

 private:
  static const std::string empty_;
};

using ModelFactory =
    std::function<std::unique_ptr<DifferentiableModel>(const nlohmann::json&)>;

// Registry mapping architecture names to constructors, so external backends
// can plug in behind the same contract. Names must be unique.
void register_adapter(const std::string& arch, ModelFactory factory);
bool adapter_registered(const std::string& arch);
std::unique_ptr<DifferentiableModel> load_model(const std::string& arch,
                                                const nlohmann::json& config);

// Reads a checkpoint file, dispatching on its "arch" field.
std::unique_ptr<DifferentiableModel> load_checkpoint(
    const std::filesystem::path& path);
void save_checkpoint(const DifferentiableModel& model,
                     const std::filesystem::path& path);

// Registers the built-in toy architectures. Idempotent.
void ensure_builtin_adapters();

}  // namespace perturbench

#endif  // PERTURBENCH_MODEL_HPP
