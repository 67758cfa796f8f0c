#include "aspo/segmentation.hpp"

#include <cctype>
#include <stdexcept>

namespace aspo {

namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace

std::vector<CharRange> split_sentences(std::string_view text) {
  std::vector<CharRange> spans;
  const std::size_t n = text.size();
  std::size_t pos = 0;
  while (pos < n) {
    while (pos < n && is_space(text[pos])) ++pos;
    if (pos >= n) break;
    const std::size_t start = pos;
    std::size_t end = n;  // falls through to the unterminated tail
    while (pos < n) {
      if (is_terminator(text[pos]) && (pos + 1 == n || is_space(text[pos + 1]))) {
        end = pos + 1;
        ++pos;
        break;
      }
      ++pos;
    }
    if (end == n) {
      // Unterminated tail: trim trailing whitespace from the span.
      while (end > start && is_space(text[end - 1])) --end;
    }
    spans.emplace_back(start, end);
  }
  return spans;
}

std::vector<SentenceSpan> map_tokens_to_sentences(
    const std::vector<Token>& tokens,
    const std::vector<CharRange>& sentence_chars) {
  if (tokens.empty()) return {};
  if (sentence_chars.empty()) {
    throw std::invalid_argument(
        "map_tokens_to_sentences: tokens present but no sentences");
  }
  if (tokens.front().char_start < sentence_chars.front().first) {
    throw std::invalid_argument(
        "map_tokens_to_sentences: token starts before the first sentence");
  }

  std::vector<SentenceSpan> spans(sentence_chars.size());
  for (std::size_t i = 0; i < sentence_chars.size(); ++i) {
    spans[i].index = i;
    spans[i].char_start = sentence_chars[i].first;
    spans[i].char_end = sentence_chars[i].second;
  }

  std::size_t sentence = 0;
  std::vector<std::size_t> counts(sentence_chars.size(), 0);
  for (const Token& token : tokens) {
    while (sentence + 1 < sentence_chars.size() &&
           token.char_start >= sentence_chars[sentence + 1].first) {
      ++sentence;
    }
    ++counts[sentence];
  }

  std::size_t offset = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    spans[i].token_start = offset;
    offset += counts[i];
    spans[i].token_end = offset;
  }
  return spans;
}

std::vector<SentenceSpan> segment_response(const TokenizedText& response) {
  return map_tokens_to_sentences(response.tokens,
                                 split_sentences(response.text));
}

}  // namespace aspo
