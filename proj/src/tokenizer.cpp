#include "daedra/tokenizer.hpp"

#include "daedra/unicode.hpp"

namespace daedra::wordpiece {

std::vector<std::string> pretokenize(std::string_view text) {
  const std::string normalized = unicode::nfc(unicode::sanitize_utf8(text));
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  };
  for (char32_t cp : unicode::code_points(normalized)) {
    if (unicode::is_whitespace(cp) || unicode::is_control(cp) || cp == 0) {
      flush();
    } else if (unicode::is_punctuation(cp)) {
      flush();
      std::string p;
      unicode::append_utf8(p, cp);
      words.push_back(std::move(p));
    } else {
      unicode::append_utf8(current, cp);
    }
  }
  flush();
  return words;
}

void WordCounter::add_text(std::string_view text) {
  for (std::string& w : pretokenize(text)) ++counts_[std::move(w)];
}

void WordCounter::add_word(std::string_view word, std::uint64_t count) {
  if (word.empty() || count == 0) return;
  counts_[std::string(word)] += count;
}

void WordCounter::merge(const WordCounter& other) {
  for (const auto& [w, c] : other.counts_) counts_[w] += c;
}

namespace {

// Greedy longest match over code point boundaries. Returns false if some
// position has no matching piece.
template <typename Emit>
bool greedy_match(std::string_view word, const Vocabulary& vocab, Emit&& emit) {
  const std::vector<std::size_t> cuts = unicode::boundaries(word);
  const std::size_t limit = vocab.max_token_bytes();
  std::string candidate;
  std::size_t start = 0;  // index into cuts
  while (start + 1 < cuts.size()) {
    const bool continuation = start > 0;
    const std::size_t prefix = continuation ? kContinuationPrefix.size() : 0;
    std::optional<TokenId> found;
    std::size_t end = cuts.size() - 1;
    for (; end > start; --end) {
      const std::size_t bytes = cuts[end] - cuts[start];
      if (bytes + prefix > limit) continue;
      candidate.clear();
      if (continuation) candidate.append(kContinuationPrefix);
      candidate.append(word.substr(cuts[start], bytes));
      found = vocab.find(candidate);
      if (found) break;
    }
    if (!found) return false;
    emit(*found);
    start = end;
  }
  return true;
}

}  // namespace

std::vector<TokenId> tokenize_ids(std::string_view word, const Vocabulary& vocab,
                                  std::size_t max_word_chars) {
  std::vector<TokenId> ids;
  if (word.empty()) return ids;
  if (unicode::length(word) > max_word_chars) return {kUnkId};
  if (!greedy_match(word, vocab, [&ids](TokenId id) { ids.push_back(id); })) {
    return {kUnkId};
  }
  return ids;
}

std::vector<std::string> tokenize(std::string_view word, const Vocabulary& vocab,
                                  std::size_t max_word_chars) {
  std::vector<std::string> out;
  for (TokenId id : tokenize_ids(word, vocab, max_word_chars)) out.push_back(vocab.token(id));
  return out;
}

EncodedText encode(std::string_view text, const Vocabulary& vocab,
                   std::size_t max_sequence_length, std::size_t max_word_chars) {
  if (max_sequence_length < 2) {
    throw std::invalid_argument("max_sequence_length must be at least 2");
  }
  const std::size_t budget = max_sequence_length - 2;
  EncodedText out;
  out.ids.push_back(kClsId);
  for (const std::string& word : pretokenize(text)) {
    for (TokenId id : tokenize_ids(word, vocab, max_word_chars)) {
      if (out.ids.size() - 1 >= budget) {
        out.truncated = true;
        break;
      }
      out.ids.push_back(id);
    }
    if (out.truncated) break;
  }
  out.ids.push_back(kSepId);
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (const std::string& t : tokens) {
    const std::string_view piece(t);
    if (piece.starts_with(kContinuationPrefix)) {
      out.append(piece.substr(kContinuationPrefix.size()));
    } else {
      if (!out.empty()) out.push_back(' ');
      out.append(piece);
    }
  }
  return out;
}

}  // namespace daedra::wordpiece
