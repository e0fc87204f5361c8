#ifndef PERTURBENCH_ATTACK_HPP
#define PERTURBENCH_ATTACK_HPP

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

#include "perturbench/model.hpp"
#include "perturbench/types.hpp"

namespace perturbench {

// Clamp every coordinate of delta into [-eps, eps].
template <typename Derived>
typename Derived::PlainObject linf_project(const Eigen::MatrixBase<Derived>& delta,
                                           typename Derived::Scalar eps) {
  if (!(eps > typename Derived::Scalar(0)))
    throw std::invalid_argument("linf_project: eps must be > 0");
  return delta.cwiseMax(-eps).cwiseMin(eps);
}

// Rescale delta onto the L2 ball of the given radius when it lies outside.
template <typename Derived>
typename Derived::PlainObject l2_project(const Eigen::MatrixBase<Derived>& delta,
                                         typename Derived::Scalar radius) {
  if (!(radius > typename Derived::Scalar(0)))
    throw std::invalid_argument("l2_project: radius must be > 0");
  const typename Derived::Scalar norm = delta.norm();
  if (norm <= radius) return delta;
  return delta * (radius / norm);
}

struct TracePoint {
  int iteration = 0;
  double loss = 0.0;
};

struct PerturbationResult {
  Waveform delta;
  // Ensemble proxy loss at the iterate each step started from.
  std::vector<TracePoint> proxy_loss_trace;
  // Deterministic targeted loss at every checkpoint: the validation proxy's
  // when one is supplied, otherwise the proxies' own.
  std::vector<TracePoint> validation_loss_trace;
  int best_iteration = 0;
  double achieved_snr_db = 0.0;
};

// Optional hooks into the optimization loop. `delta` is the iterate after
// the step, projection and signal-range clip.
struct AttackObserver {
  std::function<void(int iteration, double ensemble_loss, const Waveform& delta)>
      on_iteration;
  std::function<void(int iteration, double validation_loss, const Waveform& delta)>
      on_checkpoint;
};

// Unweighted sum of the proxies' losses toward the target, evaluated in
// each proxy's current mode. Failures carry the proxy's name.
double ensemble_loss(const std::vector<DifferentiableModel*>& proxies,
                     const Waveform& input, const AttackTarget& target);

// Targeted perturbation search: minimize sum of proxy losses plus
// reg_const * |delta|_2^2 by plain SGD on delta inside the L-inf ball,
// keeping x + delta inside the valid signal range. Proxies run with their
// stochastic regularization active when config.stochastic_proxy is set. The
// validation proxy (always deterministic) scores checkpoints and the
// lowest-scoring checkpoint is returned; without one the final iterate is.
PerturbationResult cw_attack(const std::vector<DifferentiableModel*>& proxies,
                             DifferentiableModel* validation_proxy,
                             const AudioSample& sample, const AttackTarget& target,
                             const AttackConfig& config,
                             const AttackObserver* observer = nullptr);

// Same loop without the squared-L2 term or a validation proxy, minimizing
// an arbitrary objective over the model output. config.norm picks the
// projection; l2_radius applies in L2 mode.
PerturbationResult pgd_attack(DifferentiableModel& model, const Waveform& input,
                              const OutputObjective& objective,
                              const AttackConfig& config,
                              const AttackObserver* observer = nullptr);

}  // namespace perturbench

#endif  // PERTURBENCH_ATTACK_HPP
