#ifndef PERTURBENCH_TYPES_HPP
#define PERTURBENCH_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace perturbench {

using Waveform = Eigen::VectorXd;

enum class NormKind { linf, l2 };
enum class ModelMode { deterministic, stochastic };

struct AudioSample {
  std::string id;
  Waveform waveform;
  std::string transcript;
  int sample_rate = 8000;
};

struct LabeledImage {
  std::string id;
  Waveform pixels;  // row-major H*W values in [0, 1]
  int label = 0;
};

// Attacker-chosen output: a full transcript, a prefixed transcript, or a
// ranked class distribution.
struct AttackTarget {
  enum class Kind { transcript, prefix, class_distribution };

  Kind kind = Kind::transcript;
  std::string text;              // transcript / prefix kinds
  Eigen::VectorXd distribution;  // class_distribution kind
  int k = 0;                     // number of ranked classes constrained

  static AttackTarget make_transcript(std::string t) {
    AttackTarget target;
    target.kind = Kind::transcript;
    target.text = std::move(t);
    target.validate();
    return target;
  }

  static AttackTarget make_class_distribution(Eigen::VectorXd dist, int k) {
    AttackTarget target;
    target.kind = Kind::class_distribution;
    target.distribution = std::move(dist);
    target.k = k;
    target.validate();
    return target;
  }

  void validate() const {
    if (kind == Kind::class_distribution) {
      if (distribution.size() == 0) throw std::invalid_argument("attack target: empty distribution");
      if (distribution.minCoeff() < 0.0) throw std::invalid_argument("attack target: negative mass");
      if (std::abs(distribution.sum() - 1.0) > 1e-9) throw std::invalid_argument("attack target: distribution must sum to 1");
      int nonzero = static_cast<int>((distribution.array() > 0.0).count());
      if (k < 1 || nonzero != k) throw std::invalid_argument("attack target: distribution must have exactly k nonzero entries");
    } else {
      if (text.empty()) throw std::invalid_argument("attack target: empty text");
    }
  }
};

struct AttackConfig {
  double linf_radius = 0.015;   // L-inf ball radius
  double learning_rate = 5e-4;  // plain SGD step on delta
  int iterations = 10000;
  double reg_const = 10.0;      // c, weight of the squared-L2 term
  NormKind norm = NormKind::linf;
  double l2_radius = 0.5;       // used when norm == l2
  int checkpoint_every = 100;
  std::uint64_t seed = 0;
  bool stochastic_proxy = true;  // dropout etc. active in proxies
  // Valid signal range for x + delta. [-1, 1] for audio; image attacks
  // narrow it to [0, 1].
  double clip_min = -1.0;
  double clip_max = 1.0;

  void validate() const {
    if (linf_radius <= 0.0) throw std::invalid_argument("attack config: linf_radius must be > 0");
    if (learning_rate < 0.0) throw std::invalid_argument("attack config: learning_rate must be >= 0");
    if (iterations < 1) throw std::invalid_argument("attack config: iterations must be >= 1");
    if (reg_const < 0.0) throw std::invalid_argument("attack config: reg_const must be >= 0");
    if (norm == NormKind::l2 && l2_radius <= 0.0) throw std::invalid_argument("attack config: l2_radius must be > 0");
    if (checkpoint_every < 1) throw std::invalid_argument("attack config: checkpoint_every must be >= 1");
    if (!(clip_min < clip_max)) throw std::invalid_argument("attack config: empty clip range");
  }
};

}  // namespace perturbench

#endif  // PERTURBENCH_TYPES_HPP
