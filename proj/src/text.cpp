#include "perturbench/text.hpp"

#include <cctype>

namespace perturbench {

namespace {

// Uppercase, keep [A-Z0-9'], treat any whitespace run as a single space,
// drop everything else.
std::string canonicalize(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      pending_space = true;
      continue;
    }
    char u = static_cast<char>(std::toupper(c));
    if ((u >= 'A' && u <= 'Z') || (u >= '0' && u <= '9') || u == '\'') {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(u);
    }
    // other punctuation is stripped without opening a word boundary
  }
  return out;
}

}  // namespace

TokenSequence normalize_text(const std::string& raw, TextLevel level) {
  const std::string canon = canonicalize(raw);
  TokenSequence seq;
  seq.level = level;
  if (level == TextLevel::word) {
    std::string word;
    for (char c : canon) {
      if (c == ' ') {
        if (!word.empty()) seq.tokens.push_back(std::move(word));
        word.clear();
      } else {
        word.push_back(c);
      }
    }
    if (!word.empty()) seq.tokens.push_back(std::move(word));
  } else {
    seq.tokens.reserve(canon.size());
    for (char c : canon) seq.tokens.emplace_back(1, c);
  }
  return seq;
}

std::string join_tokens(const TokenSequence& seq) {
  std::string out;
  const char* sep = seq.level == TextLevel::word ? " " : "";
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i > 0) out += sep;
    out += seq.tokens[i];
  }
  return out;
}

}  // namespace perturbench
