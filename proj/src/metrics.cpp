#include "perturbench/metrics.hpp"

namespace perturbench {

std::size_t edit_distance(const TokenSequence& ref, const TokenSequence& hyp) {
  if (ref.level != hyp.level)
    throw std::invalid_argument("edit_distance: level mismatch");
  const std::size_t m = ref.size();
  const std::size_t n = hyp.size();
  if (m == 0) return n;
  if (n == 0) return m;

  // two-row Levenshtein
  std::vector<std::size_t> prev(n + 1), curr(n + 1);
  for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= m; ++i) {
    curr[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t sub_cost = ref.tokens[i - 1] == hyp.tokens[j - 1] ? 0 : 1;
      curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + sub_cost});
    }
    std::swap(prev, curr);
  }
  return prev[n];
}

double error_rate(const TokenSequence& ref, const TokenSequence& hyp) {
  if (ref.level != hyp.level)
    throw std::invalid_argument("error_rate: level mismatch");
  if (ref.empty()) return hyp.empty() ? 0.0 : 1.0;
  return static_cast<double>(edit_distance(ref, hyp)) /
         static_cast<double>(ref.size());
}

SuccessScore targeted_success(const std::string& prediction,
                              const std::string& target, TextLevel level) {
  const TokenSequence ref = normalize_text(target, level);
  if (ref.empty()) throw std::invalid_argument("targeted_success: empty target");
  const TokenSequence hyp = normalize_text(prediction, level);
  SuccessScore score;
  score.value = std::max(1.0 - error_rate(ref, hyp), 0.0);
  score.level = level;
  score.mode = SuccessMode::targeted;
  return score;
}

SuccessScore untargeted_success(const std::string& prediction,
                                const std::string& reference,
                                TextLevel level) {
  const TokenSequence ref = normalize_text(reference, level);
  if (ref.empty()) throw std::invalid_argument("untargeted_success: empty reference");
  const TokenSequence hyp = normalize_text(prediction, level);
  SuccessScore score;
  score.value = std::min(error_rate(ref, hyp), 1.0);
  score.level = level;
  score.mode = SuccessMode::untargeted;
  return score;
}

}  // namespace perturbench
