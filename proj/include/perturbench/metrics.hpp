#ifndef PERTURBENCH_METRICS_HPP
#define PERTURBENCH_METRICS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "perturbench/text.hpp"

namespace perturbench {

enum class SuccessMode { targeted, untargeted };

// Clipped attack success score, always in [0, 1].
struct SuccessScore {
  double value = 0.0;
  TextLevel level = TextLevel::word;
  SuccessMode mode = SuccessMode::targeted;
};

// Minimal number of insertions, deletions and substitutions turning ref
// into hyp. Sequences must share a level.
std::size_t edit_distance(const TokenSequence& ref, const TokenSequence& hyp);

// edit_distance / |ref|; may exceed 1. An empty reference scores 0 against
// an empty hypothesis and 1 against anything else.
double error_rate(const TokenSequence& ref, const TokenSequence& hyp);

// max(1 - ER(target, prediction), 0). Target must be nonempty.
SuccessScore targeted_success(const std::string& prediction,
                              const std::string& target, TextLevel level);

// min(ER(reference, prediction), 1). Reference must be nonempty.
SuccessScore untargeted_success(const std::string& prediction,
                                const std::string& reference, TextLevel level);

// 10 * log10(|x|^2 / |d|^2). Zero perturbation maps to +infinity; a zero
// signal is an error.
template <typename DerivedX, typename DerivedD>
double snr_db(const Eigen::MatrixBase<DerivedX>& signal,
              const Eigen::MatrixBase<DerivedD>& perturbation) {
  if (signal.size() != perturbation.size())
    throw std::invalid_argument("snr_db: length mismatch");
  const double signal_energy = signal.squaredNorm();
  const double noise_energy = perturbation.squaredNorm();
  if (signal_energy == 0.0) throw std::invalid_argument("snr_db: zero signal");
  if (noise_energy == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal_energy / noise_energy);
}

// L-inf radius that reaches at least the requested SNR when the
// perturbation saturates the ball: eps = |x|_2 * 10^(-snr/20) / sqrt(N).
template <typename Derived>
double epsilon_for_target_snr(const Eigen::MatrixBase<Derived>& signal,
                              double target_snr_db) {
  if (signal.size() == 0) throw std::invalid_argument("epsilon_for_target_snr: empty signal");
  if (!std::isfinite(target_snr_db)) throw std::invalid_argument("epsilon_for_target_snr: non-finite target");
  const double norm = signal.norm();
  if (norm == 0.0) throw std::invalid_argument("epsilon_for_target_snr: zero signal");
  return norm * std::pow(10.0, -target_snr_db / 20.0) /
         std::sqrt(static_cast<double>(signal.size()));
}

// Indices of v sorted by descending value, ties broken by ascending index.
template <typename Derived>
std::vector<int> descending_argsort(const Eigen::MatrixBase<Derived>& v) {
  std::vector<int> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return v(a) > v(b); });
  return idx;
}

// Fraction of the first k descending-argsort positions of `output` that
// match those of `target`.
template <typename DerivedA, typename DerivedB>
double topk_match_accuracy(const Eigen::MatrixBase<DerivedA>& output,
                           const Eigen::MatrixBase<DerivedB>& target, int k) {
  if (output.size() != target.size())
    throw std::invalid_argument("topk_match_accuracy: size mismatch");
  if (k < 1 || k > output.size())
    throw std::invalid_argument("topk_match_accuracy: k out of range");
  if (output.size() > 0 && (output.minCoeff() < 0 || target.minCoeff() < 0))
    throw std::invalid_argument("topk_match_accuracy: negative entries");
  const std::vector<int> out_order = descending_argsort(output);
  const std::vector<int> tgt_order = descending_argsort(target);
  int matches = 0;
  for (int i = 0; i < k; ++i) {
    if (out_order[static_cast<std::size_t>(i)] ==
        tgt_order[static_cast<std::size_t>(i)])
      ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(k);
}

}  // namespace perturbench

#endif  // PERTURBENCH_METRICS_HPP
