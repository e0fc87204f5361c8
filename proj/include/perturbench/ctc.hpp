#ifndef PERTURBENCH_CTC_HPP
#define PERTURBENCH_CTC_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace perturbench {

// Raised when the target cannot be aligned: fewer frames than the target
// plus the blanks required between repeated labels.
class CtcLengthError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

template <typename Scalar>
Scalar log_add(Scalar a, Scalar b) {
  constexpr Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  const Scalar m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// blank-interleaved label sequence: [b, l1, b, l2, ..., b]
inline std::vector<int> extend_with_blanks(const std::vector<int>& target, int blank) {
  std::vector<int> ext;
  ext.reserve(2 * target.size() + 1);
  ext.push_back(blank);
  for (int label : target) {
    ext.push_back(label);
    ext.push_back(blank);
  }
  return ext;
}

inline Eigen::Index required_frames(const std::vector<int>& target) {
  Eigen::Index needed = static_cast<Eigen::Index>(target.size());
  for (std::size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++needed;  // mandatory blank between repeats
  return needed;
}

}  // namespace detail

// Negative log-probability of all alignments collapsing to `target`, by the
// standard forward recursion in log space. `log_probs` is frames x vocab
// with per-frame log-probabilities; `blank` indexes the blank symbol.
// When `grad` is non-null it receives d(loss)/d(log_probs).
template <typename Scalar>
Scalar ctc_loss(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& log_probs,
    const std::vector<int>& target,
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>* grad = nullptr,
    int blank = 0) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  constexpr Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();

  const Eigen::Index frames = log_probs.rows();
  const Eigen::Index vocab = log_probs.cols();
  if (frames < 1) throw std::invalid_argument("ctc_loss: no frames");
  for (int label : target) {
    if (label == blank || label < 0 || label >= vocab)
      throw std::invalid_argument("ctc_loss: target label out of range");
  }
  if (frames < detail::required_frames(target))
    throw CtcLengthError("ctc_loss: target longer than the available alignment frames");

  const std::vector<int> ext = detail::extend_with_blanks(target, blank);
  const Eigen::Index states = static_cast<Eigen::Index>(ext.size());

  auto can_skip = [&](Eigen::Index s) {
    // s-2 -> s allowed when s is a label differing from the label at s-2
    return s >= 2 && ext[static_cast<std::size_t>(s)] != blank &&
           ext[static_cast<std::size_t>(s)] != ext[static_cast<std::size_t>(s - 2)];
  };

  Mat alpha = Mat::Constant(frames, states, neg_inf);
  alpha(0, 0) = log_probs(0, ext[0]);
  if (states > 1) alpha(0, 1) = log_probs(0, ext[1]);
  for (Eigen::Index t = 1; t < frames; ++t) {
    for (Eigen::Index s = 0; s < states; ++s) {
      Scalar acc = alpha(t - 1, s);
      if (s >= 1) acc = detail::log_add(acc, alpha(t - 1, s - 1));
      if (can_skip(s)) acc = detail::log_add(acc, alpha(t - 1, s - 2));
      alpha(t, s) = acc == neg_inf
                        ? neg_inf
                        : acc + log_probs(t, ext[static_cast<std::size_t>(s)]);
    }
  }

  Scalar log_p = alpha(frames - 1, states - 1);
  if (states > 1) log_p = detail::log_add(log_p, alpha(frames - 1, states - 2));
  if (log_p == neg_inf)
    throw std::runtime_error("ctc_loss: no feasible alignment path");

  if (grad != nullptr) {
    // beta excludes the emission at t, so p = sum_s alpha_t(s) * beta_t(s)
    Mat beta = Mat::Constant(frames, states, neg_inf);
    beta(frames - 1, states - 1) = Scalar(0);
    if (states > 1) beta(frames - 1, states - 2) = Scalar(0);
    for (Eigen::Index t = frames - 2; t >= 0; --t) {
      for (Eigen::Index s = 0; s < states; ++s) {
        Scalar acc = beta(t + 1, s) + log_probs(t + 1, ext[static_cast<std::size_t>(s)]);
        if (s + 1 < states)
          acc = detail::log_add(
              acc, beta(t + 1, s + 1) + log_probs(t + 1, ext[static_cast<std::size_t>(s + 1)]));
        if (s + 2 < states && can_skip(s + 2))
          acc = detail::log_add(
              acc, beta(t + 1, s + 2) + log_probs(t + 1, ext[static_cast<std::size_t>(s + 2)]));
        beta(t, s) = acc;
      }
    }
    grad->setZero(frames, vocab);
    Mat occupancy = Mat::Constant(frames, vocab, neg_inf);
    for (Eigen::Index t = 0; t < frames; ++t)
      for (Eigen::Index s = 0; s < states; ++s) {
        const int label = ext[static_cast<std::size_t>(s)];
        occupancy(t, label) =
            detail::log_add(occupancy(t, label), alpha(t, s) + beta(t, s));
      }
    for (Eigen::Index t = 0; t < frames; ++t)
      for (Eigen::Index v = 0; v < vocab; ++v)
        if (occupancy(t, v) != neg_inf)
          (*grad)(t, v) = -std::exp(occupancy(t, v) - log_p);
  }
  return -log_p;
}

// Per-frame argmax, collapse consecutive repeats, drop blanks.
template <typename Scalar>
std::vector<int> ctc_greedy_decode(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& log_probs,
    int blank = 0) {
  std::vector<int> out;
  int prev = -1;
  for (Eigen::Index t = 0; t < log_probs.rows(); ++t) {
    Eigen::Index best;
    log_probs.row(t).maxCoeff(&best);
    const int label = static_cast<int>(best);
    if (label != blank && label != prev) out.push_back(label);
    prev = label;
  }
  return out;
}

}  // namespace perturbench

#endif  // PERTURBENCH_CTC_HPP
