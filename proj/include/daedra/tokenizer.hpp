#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace daedra::wordpiece {

using TokenId = std::int32_t;

inline constexpr std::string_view kContinuationPrefix = "##";
inline constexpr std::array<std::string_view, 5> kSpecialTokens = {
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kClsId = 2;
inline constexpr TokenId kSepId = 3;
inline constexpr TokenId kMaskId = 4;
inline constexpr TokenId kNumSpecials = 5;

inline constexpr std::size_t kDefaultMaxWordChars = 100;
inline constexpr std::size_t kDefaultMaxSequenceLength = 512;
inline constexpr std::size_t kDefaultVocabSize = 52000;

class VocabError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool is_special(TokenId id);

/// Immutable token inventory. Ids are dense; specials occupy 0..4.
class Vocabulary {
 public:
  /// Validates uniqueness and the special-token prefix; throws VocabError.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  /// Longest entry in bytes, continuation prefix included.
  std::size_t max_token_bytes() const { return max_token_bytes_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> index_;
  std::size_t max_token_bytes_ = 0;
};

/// NFC, split on Unicode whitespace, isolate punctuation. Case preserved;
/// control and format characters act as separators.
std::vector<std::string> pretokenize(std::string_view text);

/// Word frequencies of a corpus. Shards may be counted separately and merged.
class WordCounter {
 public:
  void add_text(std::string_view text);
  void add_word(std::string_view word, std::uint64_t count = 1);
  void merge(const WordCounter& other);

  bool empty() const { return counts_.empty(); }
  const std::map<std::string, std::uint64_t>& counts() const { return counts_; }

 private:
  std::map<std::string, std::uint64_t> counts_;
};

struct TrainOptions {
  std::size_t target_size = kDefaultVocabSize;
  /// A pair must occur at least this often (weighted by word count) to merge.
  std::uint64_t min_frequency = 2;
};

/// Specials, then every observed character in initial and "##" forms (sorted
/// bytewise), then merged pieces in merge order. Each step merges the adjacent
/// pair maximizing count(ab) / (count(a) * count(b)); equal scores go to the
/// lexicographically smaller merged piece. Stops at target_size or when no
/// pair reaches min_frequency. Throws std::invalid_argument on an empty
/// corpus or when target_size cannot hold specials plus the alphabet.
Vocabulary train_wordpiece(const WordCounter& corpus, const TrainOptions& options);

/// Greedy longest-match-first. Returns {"[UNK]"} when the word is longer than
/// max_word_chars code points or some position has no matching piece.
std::vector<std::string> tokenize(std::string_view word, const Vocabulary& vocab,
                                  std::size_t max_word_chars = kDefaultMaxWordChars);
std::vector<TokenId> tokenize_ids(std::string_view word, const Vocabulary& vocab,
                                  std::size_t max_word_chars = kDefaultMaxWordChars);

struct EncodedText {
  std::vector<TokenId> ids;
  bool truncated = false;
};

/// [CLS] pieces... [SEP], dropping pieces past max_sequence_length - 2.
EncodedText encode(std::string_view text, const Vocabulary& vocab,
                   std::size_t max_sequence_length = kDefaultMaxSequenceLength,
                   std::size_t max_word_chars = kDefaultMaxWordChars);

/// Glues "##" pieces onto the preceding word; words joined by one space.
std::string detokenize(std::span<const std::string> tokens);

void save_vocab(const Vocabulary& vocab, std::ostream& out);
void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(std::istream& in);
Vocabulary load_vocab(const std::string& path);

}  // namespace daedra::wordpiece
