#include "perturbench/targets.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

#include "perturbench/text.hpp"

namespace perturbench {

void TargetCorpus::validate() const {
  if (candidates.empty())
    throw std::invalid_argument("target corpus: no candidates");
  std::set<std::string> seen;
  for (const auto& c : candidates) {
    if (!seen.insert(c).second)
      throw std::invalid_argument("target corpus: duplicate candidate: " + c);
  }
}

TargetCorpus TargetCorpus::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("target corpus: cannot open " + path.string());
  TargetCorpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) corpus.candidates.push_back(line);
  }
  corpus.validate();
  return corpus;
}

void TargetCorpus::to_file(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("target corpus: cannot write " + path.string());
  for (const auto& c : candidates) out << c << "\n";
}

namespace {

std::size_t normalized_char_length(const std::string& text) {
  return normalize_text(text, TextLevel::character).size();
}

}  // namespace

std::vector<AttackTarget> assign_length_matched_targets(
    const std::vector<AudioSample>& utterances, const TargetCorpus& corpus) {
  corpus.validate();
  std::vector<std::size_t> candidate_lengths;
  candidate_lengths.reserve(corpus.candidates.size());
  for (const auto& c : corpus.candidates)
    candidate_lengths.push_back(normalized_char_length(c));

  std::vector<AttackTarget> out;
  out.reserve(utterances.size());
  for (const auto& utt : utterances) {
    const auto ref_len = static_cast<long>(normalized_char_length(utt.transcript));
    std::size_t best = 0;
    long best_gap = std::abs(static_cast<long>(candidate_lengths[0]) - ref_len);
    for (std::size_t i = 1; i < candidate_lengths.size(); ++i) {
      const long gap = std::abs(static_cast<long>(candidate_lengths[i]) - ref_len);
      if (gap < best_gap) {  // strict: ties keep the earliest candidate
        best = i;
        best_gap = gap;
      }
    }
    out.push_back(AttackTarget::make_transcript(corpus.candidates[best]));
  }
  return out;
}

AttackTarget make_prefix_target(const std::string& transcript,
                                const std::string& word) {
  const TokenSequence word_tokens = normalize_text(word, TextLevel::word);
  if (word_tokens.size() != 1)
    throw std::invalid_argument("make_prefix_target: word must be a single nonempty token");
  AttackTarget target;
  target.kind = AttackTarget::Kind::prefix;
  target.text = transcript.empty() ? word : word + " " + transcript;
  target.validate();
  return target;
}

bool prefix_success(const std::string& prediction, const std::string& word) {
  const TokenSequence pred = normalize_text(prediction, TextLevel::word);
  const TokenSequence w = normalize_text(word, TextLevel::word);
  if (w.size() != 1) throw std::invalid_argument("prefix_success: word must be a single token");
  return !pred.empty() && pred.tokens.front() == w.tokens.front();
}

std::vector<AudioSample> filter_prefix_eligible(
    const std::vector<AudioSample>& utterances, const std::string& word) {
  std::vector<AudioSample> kept;
  kept.reserve(utterances.size());
  for (const auto& utt : utterances) {
    if (!prefix_success(utt.transcript, word)) kept.push_back(utt);
  }
  return kept;
}

Eigen::VectorXd sample_simplex(int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("sample_simplex: k must be >= 1");
  Eigen::VectorXd draws(k);
  for (int i = 0; i < k; ++i) draws(i) = rng.exponential();
  return draws / draws.sum();
}

AttackTarget sample_topk_target(int num_classes, int k, Rng& rng) {
  if (k < 1 || k > num_classes)
    throw std::invalid_argument("sample_topk_target: k out of range");

  // ordered k-subset via partial Fisher-Yates
  std::vector<int> classes(static_cast<std::size_t>(num_classes));
  for (int i = 0; i < num_classes; ++i) classes[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes - i)));
    std::swap(classes[static_cast<std::size_t>(i)], classes[static_cast<std::size_t>(j)]);
  }

  Eigen::VectorXd mass = sample_simplex(k, rng);
  std::sort(mass.data(), mass.data() + mass.size(), std::greater<double>());

  Eigen::VectorXd dist = Eigen::VectorXd::Zero(num_classes);
  for (int i = 0; i < k; ++i) dist(classes[static_cast<std::size_t>(i)]) = mass(i);
  return AttackTarget::make_class_distribution(std::move(dist), k);
}

}  // namespace perturbench
