#include "perturbench/attack.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "perturbench/rng.hpp"

namespace perturbench {
namespace {

double safe_snr_db(const Waveform& signal, const Waveform& delta) {
  const double signal_energy = signal.squaredNorm();
  const double noise_energy = delta.squaredNorm();
  if (noise_energy == 0.0) return std::numeric_limits<double>::infinity();
  if (signal_energy == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal_energy / noise_energy);
}

double proxy_value(DifferentiableModel* proxy, const Waveform& input,
                   const OutputObjective& objective, Waveform* grad) {
  try {
    return proxy->objective_gradient(input, objective, grad);
  } catch (const std::exception& e) {
    throw std::runtime_error("proxy '" + proxy->name() + "': " + e.what());
  }
}

// Ensemble loss with every proxy forced deterministic for the evaluation.
// The deterministic path draws nothing from the dropout stream, so the
// optimization trajectory is unaffected by checkpoint cadence.
double deterministic_ensemble(const std::vector<DifferentiableModel*>& proxies,
                              const std::vector<OutputObjective>& objectives,
                              const Waveform& input) {
  double total = 0.0;
  for (std::size_t i = 0; i < proxies.size(); ++i) {
    const ModelMode saved = proxies[i]->mode();
    proxies[i]->set_mode(ModelMode::deterministic);
    total += proxy_value(proxies[i], input, objectives[i], nullptr);
    proxies[i]->set_mode(saved);
  }
  return total;
}

[[noreturn]] void abort_non_finite(int iteration, double loss, const Waveform& delta,
                                   const std::vector<TracePoint>& trace) {
  std::ostringstream msg;
  msg << "attack diverged at iteration " << iteration << ": loss " << loss
      << ", |delta|_inf " << delta.lpNorm<Eigen::Infinity>()
      << "; recent trace:";
  const std::size_t start = trace.size() > 5 ? trace.size() - 5 : 0;
  for (std::size_t i = start; i < trace.size(); ++i)
    msg << " (" << trace[i].iteration << ", " << trace[i].loss << ")";
  throw std::runtime_error(msg.str());
}

PerturbationResult descend(const std::vector<DifferentiableModel*>& proxies,
                           const std::vector<OutputObjective>& objectives,
                           DifferentiableModel* validation,
                           const OutputObjective* validation_objective,
                           const Waveform& x, double reg_const,
                           const AttackConfig& config,
                           const AttackObserver* observer) {
  PerturbationResult result;
  Waveform delta = Waveform::Zero(x.size());
  Waveform best_delta = delta;
  double best_validation = std::numeric_limits<double>::infinity();
  Waveform grad(x.size());
  Waveform proxy_grad;

  for (int step = 1; step <= config.iterations; ++step) {
    double loss_sum = 0.0;
    grad.setZero();
    for (std::size_t i = 0; i < proxies.size(); ++i) {
      loss_sum += proxy_value(proxies[i], x + delta, objectives[i], &proxy_grad);
      grad += proxy_grad;
    }
    const double objective_value = loss_sum + reg_const * delta.squaredNorm();
    if (!std::isfinite(objective_value) || !grad.allFinite())
      abort_non_finite(step, objective_value, delta, result.proxy_loss_trace);
    result.proxy_loss_trace.push_back({step, loss_sum});

    grad += 2.0 * reg_const * delta;
    delta -= config.learning_rate * grad;
    delta = config.norm == NormKind::linf ? linf_project(delta, config.linf_radius)
                                          : l2_project(delta, config.l2_radius);
    delta = (x + delta).cwiseMax(config.clip_min).cwiseMin(config.clip_max) - x;

    if (observer != nullptr && observer->on_iteration)
      observer->on_iteration(step, loss_sum, delta);

    if (step % config.checkpoint_every == 0 || step == config.iterations) {
      double validation_loss;
      if (validation != nullptr)
        validation_loss =
            proxy_value(validation, x + delta, *validation_objective, nullptr);
      else
        validation_loss = deterministic_ensemble(proxies, objectives, x + delta);
      result.validation_loss_trace.push_back({step, validation_loss});
      if (validation != nullptr) {
        if (validation_loss < best_validation) {
          best_validation = validation_loss;
          best_delta = delta;
          result.best_iteration = step;
        }
      } else {
        best_delta = delta;
        result.best_iteration = step;
      }
      if (observer != nullptr && observer->on_checkpoint)
        observer->on_checkpoint(step, validation_loss, delta);
    }
  }

  result.delta = best_delta;
  result.achieved_snr_db = safe_snr_db(x, result.delta);
  return result;
}

void arm_proxies(const std::vector<DifferentiableModel*>& proxies,
                 const AttackConfig& config) {
  const Rng master(config.seed);
  for (std::size_t i = 0; i < proxies.size(); ++i) {
    if (config.stochastic_proxy) {
      proxies[i]->set_mode(ModelMode::stochastic);
      proxies[i]->reseed(master.child("proxy-" + std::to_string(i)).seed());
    } else {
      proxies[i]->set_mode(ModelMode::deterministic);
    }
  }
}

}  // namespace

double ensemble_loss(const std::vector<DifferentiableModel*>& proxies,
                     const Waveform& input, const AttackTarget& target) {
  if (proxies.empty()) throw std::invalid_argument("ensemble_loss: no proxies");
  double total = 0.0;
  for (DifferentiableModel* proxy : proxies)
    total += proxy_value(proxy, input, proxy->objective_for(target), nullptr);
  return total;
}

PerturbationResult cw_attack(const std::vector<DifferentiableModel*>& proxies,
                             DifferentiableModel* validation_proxy,
                             const AudioSample& sample, const AttackTarget& target,
                             const AttackConfig& config,
                             const AttackObserver* observer) {
  config.validate();
  target.validate();
  if (proxies.empty()) throw std::invalid_argument("cw_attack: no proxies");
  if (config.norm != NormKind::linf)
    throw std::invalid_argument("cw_attack: requires the L-inf norm");
  if (sample.waveform.size() == 0)
    throw std::invalid_argument("cw_attack: empty waveform");

  arm_proxies(proxies, config);
  std::vector<OutputObjective> objectives;
  objectives.reserve(proxies.size());
  for (const DifferentiableModel* proxy : proxies)
    objectives.push_back(proxy->objective_for(target));

  OutputObjective validation_objective;
  if (validation_proxy != nullptr) {
    validation_proxy->set_mode(ModelMode::deterministic);
    validation_objective = validation_proxy->objective_for(target);
  }

  return descend(proxies, objectives, validation_proxy,
                 validation_proxy != nullptr ? &validation_objective : nullptr,
                 sample.waveform, config.reg_const, config, observer);
}

PerturbationResult pgd_attack(DifferentiableModel& model, const Waveform& input,
                              const OutputObjective& objective,
                              const AttackConfig& config,
                              const AttackObserver* observer) {
  config.validate();
  if (!objective.eval) throw std::invalid_argument("pgd_attack: empty objective");
  if (input.size() == 0) throw std::invalid_argument("pgd_attack: empty input");

  const std::vector<DifferentiableModel*> proxies{&model};
  arm_proxies(proxies, config);
  const std::vector<OutputObjective> objectives{objective};
  return descend(proxies, objectives, nullptr, nullptr, input, 0.0, config,
                 observer);
}

}  // namespace perturbench
