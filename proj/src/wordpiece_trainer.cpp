#include <algorithm>
#include <set>
#include <stdexcept>

#include "daedra/tokenizer.hpp"
#include "daedra/unicode.hpp"

namespace daedra::wordpiece {

namespace {

using SymbolId = std::uint32_t;
using PairKey = std::uint64_t;

constexpr PairKey pair_key(SymbolId a, SymbolId b) {
  return (static_cast<PairKey>(a) << 32) | b;
}
constexpr SymbolId pair_left(PairKey k) { return static_cast<SymbolId>(k >> 32); }
constexpr SymbolId pair_right(PairKey k) { return static_cast<SymbolId>(k & 0xFFFFFFFFu); }

struct Word {
  std::vector<SymbolId> symbols;
  std::uint64_t count = 0;
};

class MergeState {
 public:
  MergeState(const WordCounter& corpus, std::vector<std::string>& vocab,
             std::unordered_map<std::string, SymbolId>& ids)
      : vocab_(vocab), ids_(ids) {
    words_.reserve(corpus.counts().size());
    for (const auto& [text, count] : corpus.counts()) {
      Word w;
      w.count = count;
      const auto cps = unicode::code_points(text);
      std::string piece;
      for (std::size_t i = 0; i < cps.size(); ++i) {
        piece.clear();
        if (i > 0) piece.append(kContinuationPrefix);
        unicode::append_utf8(piece, cps[i]);
        w.symbols.push_back(ids_.at(piece));
      }
      words_.push_back(std::move(w));
    }
    symbol_counts_.assign(vocab_.size(), 0);
    for (std::uint32_t wi = 0; wi < words_.size(); ++wi) {
      add_word(wi);
      for (SymbolId s : words_[wi].symbols) symbol_counts_[s] += words_[wi].count;
    }
    stamp_.assign(words_.size(), 0);
  }

  /// Best pair by score with count >= min_count, if any.
  std::optional<PairKey> best_pair(std::uint64_t min_count) const {
    std::optional<PairKey> best;
    std::uint64_t best_count = 0;
    unsigned __int128 best_denom = 1;
    for (const auto& [key, count] : pair_counts_) {
      if (count < min_count) continue;
      const unsigned __int128 denom =
          static_cast<unsigned __int128>(symbol_counts_[pair_left(key)]) *
          symbol_counts_[pair_right(key)];
      if (!best) {
        best = key;
        best_count = count;
        best_denom = denom;
        continue;
      }
      // count/denom vs best_count/best_denom, exactly
      const unsigned __int128 lhs = static_cast<unsigned __int128>(count) * best_denom;
      const unsigned __int128 rhs = static_cast<unsigned __int128>(best_count) * denom;
      if (lhs > rhs || (lhs == rhs && merged_text(key) < merged_text(*best))) {
        best = key;
        best_count = count;
        best_denom = denom;
      }
    }
    return best;
  }

  std::string merged_text(PairKey key) const {
    std::string out = vocab_[pair_left(key)];
    std::string_view right = vocab_[pair_right(key)];
    if (right.starts_with(kContinuationPrefix)) right.remove_prefix(kContinuationPrefix.size());
    out.append(right);
    return out;
  }

  /// Applies the merge everywhere; returns the resulting symbol id.
  SymbolId apply(PairKey key) {
    const std::string text = merged_text(key);
    SymbolId merged;
    if (auto it = ids_.find(text); it != ids_.end()) {
      merged = it->second;
    } else {
      merged = static_cast<SymbolId>(vocab_.size());
      vocab_.push_back(text);
      ids_.emplace(text, merged);
      symbol_counts_.push_back(0);
    }

    const SymbolId a = pair_left(key);
    const SymbolId b = pair_right(key);
    ++epoch_;
    auto node = pair_words_.extract(key);
    if (node.empty()) return merged;
    for (std::uint32_t wi : node.mapped()) {
      if (stamp_[wi] == epoch_) continue;
      stamp_[wi] = epoch_;
      Word& w = words_[wi];
      bool present = false;
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        if (w.symbols[i] == a && w.symbols[i + 1] == b) {
          present = true;
          break;
        }
      }
      if (!present) continue;

      remove_word(wi);
      std::vector<SymbolId> next;
      next.reserve(w.symbols.size());
      for (std::size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == a && w.symbols[i + 1] == b) {
          next.push_back(merged);
          symbol_counts_[a] -= w.count;
          symbol_counts_[b] -= w.count;
          symbol_counts_[merged] += w.count;
          ++i;
        } else {
          next.push_back(w.symbols[i]);
        }
      }
      w.symbols = std::move(next);
      add_word(wi);
    }
    pair_counts_.erase(key);
    return merged;
  }

 private:
  void add_word(std::uint32_t wi) {
    const Word& w = words_[wi];
    for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
      const PairKey k = pair_key(w.symbols[i], w.symbols[i + 1]);
      pair_counts_[k] += w.count;
      pair_words_[k].push_back(wi);
    }
  }

  void remove_word(std::uint32_t wi) {
    const Word& w = words_[wi];
    for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
      const PairKey k = pair_key(w.symbols[i], w.symbols[i + 1]);
      auto it = pair_counts_.find(k);
      it->second -= w.count;
      if (it->second == 0) pair_counts_.erase(it);
    }
  }

  std::vector<std::string>& vocab_;
  std::unordered_map<std::string, SymbolId>& ids_;
  std::vector<Word> words_;
  std::vector<std::uint64_t> symbol_counts_;
  std::unordered_map<PairKey, std::uint64_t> pair_counts_;
  // May hold stale or repeated word indices; apply() re-checks each word.
  std::unordered_map<PairKey, std::vector<std::uint32_t>> pair_words_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t epoch_ = 0;
};

}  // namespace

Vocabulary train_wordpiece(const WordCounter& corpus, const TrainOptions& options) {
  if (corpus.empty()) throw std::invalid_argument("cannot train a vocabulary on an empty corpus");
  if (options.min_frequency < 1) throw std::invalid_argument("min_frequency must be >= 1");

  std::set<std::string> alphabet;
  for (const auto& [word, count] : corpus.counts()) {
    for (char32_t cp : unicode::code_points(word)) {
      std::string initial;
      unicode::append_utf8(initial, cp);
      alphabet.insert(std::string(kContinuationPrefix) + initial);
      alphabet.insert(std::move(initial));
    }
  }
  const std::size_t base = kSpecialTokens.size() + alphabet.size();
  if (options.target_size < base) {
    throw std::invalid_argument("target_size " + std::to_string(options.target_size) +
                                " is smaller than specials + alphabet (" +
                                std::to_string(base) + ")");
  }

  std::vector<std::string> vocab;
  vocab.reserve(options.target_size);
  for (std::string_view s : kSpecialTokens) vocab.emplace_back(s);
  vocab.insert(vocab.end(), alphabet.begin(), alphabet.end());
  std::unordered_map<std::string, SymbolId> ids;
  for (std::size_t i = 0; i < vocab.size(); ++i) ids.emplace(vocab[i], static_cast<SymbolId>(i));

  MergeState state(corpus, vocab, ids);
  while (vocab.size() < options.target_size) {
    const auto best = state.best_pair(options.min_frequency);
    if (!best) break;
    state.apply(*best);
  }
  return Vocabulary::from_tokens(std::move(vocab));
}

}  // namespace daedra::wordpiece
