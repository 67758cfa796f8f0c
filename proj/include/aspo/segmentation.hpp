#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "aspo/tokens.hpp"

namespace aspo {

using CharRange = std::pair<std::size_t, std::size_t>;

// Splits text into sentences: maximal non-empty segments ending at a
// terminator ('.', '!' or '?') that is followed by whitespace or by the end
// of the text. A trailing unterminated segment forms a final sentence.
// Terminators belong to their sentence; leading/trailing whitespace is
// excluded from the returned ranges. No abbreviation handling ("Mr." ends a
// sentence); this is documented behavior.
std::vector<CharRange> split_sentences(std::string_view text);

// Assigns every token to exactly one sentence by its char_start: the last
// sentence starting at or before the token owns it, so tokens in
// inter-sentence gaps attach to the preceding sentence and tokens past the
// last sentence attach to the last one. Throws std::invalid_argument when a
// token starts before the first sentence (malformed tokenization). An empty
// token list yields an empty span list.
std::vector<SentenceSpan> map_tokens_to_sentences(
    const std::vector<Token>& tokens,
    const std::vector<CharRange>& sentence_chars);

// split + map over one tokenized response.
std::vector<SentenceSpan> segment_response(const TokenizedText& response);

}  // namespace aspo
