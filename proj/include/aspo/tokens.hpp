#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace aspo {

// One tokenized unit of a response. Character offsets are half-open byte
// ranges into the owning text; ranges are ordered and non-overlapping.
struct Token {
  int id = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

struct TokenizedText {
  std::string text;
  std::vector<Token> tokens;

  bool operator==(const TokenizedText&) const = default;
};

inline bool operator==(const Token& a, const Token& b) {
  return a.id == b.id && a.char_start == b.char_start &&
         a.char_end == b.char_end;
}

// A sentence inside a tokenized response: its character range plus the
// half-open range of token indices assigned to it. Spans partition the
// token list.
struct SentenceSpan {
  std::size_t index = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::size_t token_start = 0;
  std::size_t token_end = 0;

  std::size_t num_tokens() const { return token_end - token_start; }
};

// Per-token conditional log-probabilities, aligned with a TokenizedText.
using LogProbSeq = std::vector<double>;

}  // namespace aspo
