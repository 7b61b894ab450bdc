#include <algorithm>
#include <set>
#include <sstream>

#include "daedra/prng.hpp"
#include "daedra/tokenizer.hpp"
#include "daedra/unicode.hpp"
#include "doctest.h"

using namespace daedra;
using namespace daedra::wordpiece;

namespace {

using Tokens = std::vector<std::string>;

std::vector<std::string> alphabet_of(const std::string& chars) {
  std::vector<std::string> out;
  for (char32_t cp : unicode::code_points(chars)) {
    std::string s;
    unicode::append_utf8(s, cp);
    out.push_back(s);
    out.push_back("##" + s);
  }
  return out;
}

Vocabulary make_vocab(const std::vector<std::string>& extra, const std::string& chars) {
  std::vector<std::string> tokens(kSpecialTokens.begin(), kSpecialTokens.end());
  std::set<std::string> seen;
  for (const auto& t : alphabet_of(chars)) {
    if (seen.insert(t).second) tokens.push_back(t);
  }
  for (const auto& t : extra) {
    if (seen.insert(t).second) tokens.push_back(t);
  }
  return Vocabulary::from_tokens(tokens);
}

// Reference trainer: recounts every symbol and pair from scratch each round.
std::vector<std::string> naive_train(const std::map<std::string, std::uint64_t>& words,
                                     std::size_t target, std::uint64_t min_freq) {
  std::set<std::string> alphabet;
  std::vector<std::pair<std::vector<std::string>, std::uint64_t>> segs;
  for (const auto& [w, c] : words) {
    std::vector<std::string> pieces;
    bool first = true;
    for (char32_t cp : unicode::code_points(w)) {
      std::string s;
      unicode::append_utf8(s, cp);
      alphabet.insert(s);
      alphabet.insert("##" + s);
      pieces.push_back(first ? s : "##" + s);
      first = false;
    }
    segs.emplace_back(pieces, c);
  }
  std::vector<std::string> vocab(kSpecialTokens.begin(), kSpecialTokens.end());
  vocab.insert(vocab.end(), alphabet.begin(), alphabet.end());
  std::set<std::string> in_vocab(vocab.begin(), vocab.end());

  while (vocab.size() < target) {
    std::map<std::string, std::uint64_t> sym;
    std::map<std::pair<std::string, std::string>, std::uint64_t> pairs;
    for (const auto& [pieces, c] : segs) {
      for (std::size_t i = 0; i < pieces.size(); ++i) {
        sym[pieces[i]] += c;
        if (i + 1 < pieces.size()) pairs[{pieces[i], pieces[i + 1]}] += c;
      }
    }
    auto merged = [](const std::pair<std::string, std::string>& p) {
      return p.first + p.second.substr(p.second.rfind("##", 0) == 0 ? 2 : 0);
    };
    const std::pair<std::string, std::string>* best = nullptr;
    long double best_score = -1;
    for (const auto& entry : pairs) {
      if (entry.second < min_freq) continue;
      const long double score = static_cast<long double>(entry.second) /
                                (static_cast<long double>(sym[entry.first.first]) * sym[entry.first.second]);
      if (best == nullptr || score > best_score ||
          (score == best_score && merged(entry.first) < merged(*best))) {
        best = &entry.first;
        best_score = score;
      }
    }
    if (best == nullptr) break;
    const auto chosen = *best;
    const std::string text = merged(chosen);
    if (in_vocab.insert(text).second) vocab.push_back(text);
    for (auto& [pieces, c] : segs) {
      std::vector<std::string> next;
      for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (i + 1 < pieces.size() && pieces[i] == chosen.first && pieces[i + 1] == chosen.second) {
          next.push_back(text);
          ++i;
        } else {
          next.push_back(pieces[i]);
        }
      }
      pieces = std::move(next);
    }
  }
  return vocab;
}

std::string random_word(SplitMix64& rng, const std::string& letters, std::size_t max_len) {
  const std::size_t len = 1 + rng.below(max_len);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w += letters[rng.below(letters.size())];
  return w;
}

}  // namespace

TEST_CASE("pretokenize") {
  CHECK(pretokenize("Pt. admitted—ER") == Tokens{"Pt", ".", "admitted", "—", "ER"});
  CHECK(pretokenize("").empty());
  CHECK(pretokenize("y/o S/P fall") == Tokens{"y", "/", "o", "S", "/", "P", "fall"});
  CHECK(pretokenize("  Fever\t\n39C  ") == Tokens{"Fever", "39C"});
  // NFC: e + combining acute composes to a single code point
  CHECK(pretokenize("caf\x65\xCC\x81") == Tokens{"caf\xC3\xA9"});
  // no-break space separates words
  CHECK(pretokenize("a b") == Tokens{"a", "b"});
}

TEST_CASE("tokenize: greedy longest match with continuation prefix") {
  const Vocabulary generic = make_vocab({"int", "##uss", "##us", "##ception"}, "intusceop");
  CHECK(tokenize("intussusception", generic) == Tokens{"int", "##uss", "##us", "##ception"});

  const Vocabulary med = make_vocab({"pan", "##cre", "##ati", "##tis"}, "pancreatis");
  CHECK(tokenize("pancreatitis", med) == Tokens{"pan", "##cre", "##ati", "##tis"});

  CHECK(tokenize("x", make_vocab({}, "x")) == Tokens{"x"});
  CHECK(tokenize("xyz", make_vocab({}, "xy")) == Tokens{"[UNK]"});
  CHECK(tokenize(std::string(101, 'a'), make_vocab({}, "a")) == Tokens{"[UNK]"});
  CHECK(tokenize(std::string(100, 'a'), make_vocab({}, "a")).size() == 100);
  // multi-byte characters are never split inside a code point
  CHECK(tokenize("\xC3\xA9t\xC3\xA9", make_vocab({}, "\xC3\xA9t")) ==
        Tokens{"\xC3\xA9", "##t", "##\xC3\xA9"});
}

TEST_CASE("tokenize: first piece is the longest vocabulary prefix") {
  SplitMix64 rng(3);
  WordCounter corpus;
  for (int i = 0; i < 400; ++i) corpus.add_word(random_word(rng, "abcde", 7), 1 + rng.below(5));
  const Vocabulary v = train_wordpiece(corpus, {.target_size = 80, .min_frequency = 1});
  for (int i = 0; i < 500; ++i) {
    const std::string w = random_word(rng, "abcde", 9);
    const Tokens toks = tokenize(w, v);
    REQUIRE_FALSE(toks.empty());
    std::size_t longest = 0;
    for (std::size_t len = 1; len <= w.size(); ++len) {
      if (v.contains(w.substr(0, len))) longest = len;
    }
    CHECK(toks[0] == w.substr(0, longest));
    CHECK(detokenize(toks) == w);
  }
}

TEST_CASE("train_wordpiece: 'ab ab ab' hand-run") {
  WordCounter corpus;
  corpus.add_text("ab ab ab");
  // 5 specials + {##a, ##b, a, b}; one merge fits in a budget of 10
  const Vocabulary v = train_wordpiece(corpus, {.target_size = 10, .min_frequency = 1});
  CHECK(v.tokens() == Tokens{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "##a", "##b", "a", "b", "ab"});
  CHECK(tokenize("ab", v).size() <= 2);
  CHECK(tokenize("ab", v) == Tokens{"ab"});
}

TEST_CASE("train_wordpiece: zero merge budget") {
  WordCounter corpus;
  corpus.add_text("abc bca cab");
  const Vocabulary v = train_wordpiece(corpus, {.target_size = 5 + 6, .min_frequency = 1});
  CHECK(v.size() == 11);
  CHECK(tokenize("cab", v) == Tokens{"c", "##a", "##b"});
  CHECK_THROWS_AS(train_wordpiece(corpus, {.target_size = 10, .min_frequency = 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(train_wordpiece(WordCounter{}, {}), std::invalid_argument);
}

TEST_CASE("train_wordpiece: a frequent domain term becomes one token") {
  WordCounter corpus;
  for (int i = 0; i < 1000; ++i) corpus.add_text("intussusception");
  corpus.add_text("the patient was seen in the emergency department with pain");
  const Vocabulary v = train_wordpiece(corpus, {.target_size = 2000, .min_frequency = 2});
  CHECK(v.contains("intussusception"));
  CHECK(tokenize("intussusception", v) == Tokens{"intussusception"});
}

TEST_CASE("train_wordpiece matches the from-scratch reference trainer") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    SplitMix64 rng(seed);
    WordCounter corpus;
    for (int i = 0; i < 60; ++i) corpus.add_word(random_word(rng, "abcdxy", 6), 1 + rng.below(6));
    const std::uint64_t min_freq = 1 + seed % 3;
    const std::size_t target = 30 + rng.below(60);
    const Vocabulary fast = train_wordpiece(corpus, {.target_size = target, .min_frequency = min_freq});
    CHECK(fast.tokens() == naive_train(corpus.counts(), target, min_freq));
  }
}

TEST_CASE("train_wordpiece: vocabulary invariants and determinism") {
  SplitMix64 rng(8);
  WordCounter a;
  WordCounter b;
  std::vector<std::pair<std::string, std::uint64_t>> words;
  for (int i = 0; i < 300; ++i) words.emplace_back(random_word(rng, "abcdefgh", 8), 1 + rng.below(4));
  for (const auto& [w, c] : words) a.add_word(w, c);
  for (auto it = words.rbegin(); it != words.rend(); ++it) b.add_word(it->first, it->second);
  const Vocabulary va = train_wordpiece(a, {.target_size = 200, .min_frequency = 2});
  CHECK(va == train_wordpiece(b, {.target_size = 200, .min_frequency = 2}));

  for (std::size_t i = 0; i < kSpecialTokens.size(); ++i) CHECK(va.token(static_cast<TokenId>(i)) == kSpecialTokens[i]);
  for (char c : std::string("abcdefgh")) {
    CHECK(va.contains(std::string(1, c)));
    CHECK(va.contains("##" + std::string(1, c)));
  }
  // totality over the alphabet
  for (int i = 0; i < 200; ++i) {
    const std::string w = random_word(rng, "abcdefgh", 20);
    const Tokens t = tokenize(w, va);
    CHECK(std::find(t.begin(), t.end(), "[UNK]") == t.end());
    CHECK(detokenize(t) == w);
  }
}

TEST_CASE("WordCounter shards merge to the whole") {
  WordCounter whole;
  WordCounter left;
  WordCounter right;
  whole.add_text("a b c a");
  left.add_text("a b");
  right.add_text("c a");
  left.merge(right);
  CHECK(left.counts() == whole.counts());
}

TEST_CASE("encode") {
  const Vocabulary v = make_vocab({}, "abc");
  const EncodedText empty = encode("", v);
  CHECK(empty.ids == std::vector<TokenId>{kClsId, kSepId});
  CHECK_FALSE(empty.truncated);

  CHECK(encode("abc", v, 2).ids == std::vector<TokenId>{kClsId, kSepId});
  CHECK(encode("abc", v, 2).truncated);
  CHECK_FALSE(encode("   ", v, 2).truncated);

  std::string text;
  for (int i = 0; i < 600; ++i) text += "a ";
  const EncodedText long_text = encode(text, v, 512);
  CHECK(long_text.ids.size() == 512);
  CHECK(long_text.truncated);
  CHECK(long_text.ids.front() == kClsId);
  CHECK(long_text.ids.back() == kSepId);

  const EncodedText exact = encode(text, v, 602);
  CHECK(exact.ids.size() == 602);
  CHECK_FALSE(exact.truncated);
  CHECK_THROWS_AS(encode("a", v, 1), std::invalid_argument);
}

TEST_CASE("detokenize") {
  CHECK(detokenize(Tokens{"int", "##uss", "##us", "##ception"}) == "intussusception");
  CHECK(detokenize(Tokens{}).empty());
  CHECK(detokenize(Tokens{"pt", "was", "ad", "##mit", "##ted"}) == "pt was admitted");
}

TEST_CASE("vocab file round trip and validation") {
  const Vocabulary v = make_vocab({"ab", "##bc"}, "abc");
  std::stringstream buf;
  save_vocab(v, buf);
  const std::string bytes = buf.str();
  const Vocabulary back = load_vocab(buf);
  CHECK(back == v);
  std::stringstream again;
  save_vocab(back, again);
  CHECK(again.str() == bytes);

  std::istringstream missing_unk("[PAD]\n[CLS]\n[SEP]\n[MASK]\na\n");
  CHECK_THROWS_AS(load_vocab(missing_unk), VocabError);
  std::istringstream dup("[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\na\na\n");
  CHECK_THROWS_AS(load_vocab(dup), VocabError);
  std::istringstream misplaced("[UNK]\n[PAD]\n[CLS]\n[SEP]\n[MASK]\n");
  CHECK_THROWS_AS(load_vocab(misplaced), VocabError);

  std::stringstream big;
  for (auto s : kSpecialTokens) big << s << '\n';
  for (int i = 5; i < 52000; ++i) big << "tok" << i << '\n';
  CHECK(load_vocab(big).size() == 52000);
}
