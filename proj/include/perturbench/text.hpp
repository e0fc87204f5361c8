#ifndef PERTURBENCH_TEXT_HPP
#define PERTURBENCH_TEXT_HPP

#include <string>
#include <vector>

namespace perturbench {

enum class TextLevel { word, character };

// Ordered token sequence at a fixed granularity. Word tokens carry no
// whitespace; character sequences keep interior spaces as tokens.
struct TokenSequence {
  std::vector<std::string> tokens;
  TextLevel level = TextLevel::word;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const TokenSequence&) const = default;
};

// Uppercases, strips punctuation except apostrophes, collapses whitespace.
// Word level splits on spaces; character level emits one token per
// character with interior spaces included. Idempotent.
TokenSequence normalize_text(const std::string& raw, TextLevel level);

// The normalized flat string behind a token sequence (words joined by a
// single space, characters concatenated).
std::string join_tokens(const TokenSequence& seq);

}  // namespace perturbench

#endif  // PERTURBENCH_TEXT_HPP
