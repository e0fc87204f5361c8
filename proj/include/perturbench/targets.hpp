#ifndef PERTURBENCH_TARGETS_HPP
#define PERTURBENCH_TARGETS_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "perturbench/rng.hpp"
#include "perturbench/types.hpp"

namespace perturbench {

// Ordered pool of candidate target transcriptions. One sentence per line on
// disk; order is significant (it breaks length ties).
struct TargetCorpus {
  std::vector<std::string> candidates;

  void validate() const;
  static TargetCorpus from_file(const std::filesystem::path& path);
  void to_file(const std::filesystem::path& path) const;
};

// Assigns to each utterance the candidate whose normalized character length
// is closest to the utterance's reference transcript. Ties go to the
// earliest corpus entry; candidates may be reused. Result is index-aligned
// with `utterances`.
std::vector<AttackTarget> assign_length_matched_targets(
    const std::vector<AudioSample>& utterances, const TargetCorpus& corpus);

// Target text = word + " " + transcript (word alone for an empty
// transcript). `word` must be a single nonempty token.
AttackTarget make_prefix_target(const std::string& transcript,
                                const std::string& word);

// True iff the first predicted word equals the prefix word
// (case-insensitive, normalized).
bool prefix_success(const std::string& prediction, const std::string& word);

// Keeps utterances whose reference transcript does not already begin with
// the target word.
std::vector<AudioSample> filter_prefix_eligible(
    const std::vector<AudioSample>& utterances, const std::string& word);

// Uniform draw on the unit (k-1)-simplex: k unit-exponential draws divided
// by their sum.
Eigen::VectorXd sample_simplex(int k, Rng& rng);

// Uniformly random ordered k-subset of C classes, holding a descending
// simplex draw so the target's top-k argsort equals the sampled subset.
AttackTarget sample_topk_target(int num_classes, int k, Rng& rng);

}  // namespace perturbench

#endif  // PERTURBENCH_TARGETS_HPP
