#include <algorithm>
#include <fstream>

#include "daedra/tokenizer.hpp"

namespace daedra::wordpiece {

bool is_special(TokenId id) { return id >= 0 && id < kNumSpecials; }

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  for (std::size_t i = 0; i < kSpecialTokens.size(); ++i) {
    const auto it = std::find(tokens.begin(), tokens.end(), kSpecialTokens[i]);
    if (it == tokens.end()) {
      throw VocabError("vocabulary is missing special token " + std::string(kSpecialTokens[i]));
    }
    if (static_cast<std::size_t>(it - tokens.begin()) != i) {
      throw VocabError("special token " + std::string(kSpecialTokens[i]) +
                       " must have id " + std::to_string(i));
    }
  }
  Vocabulary v;
  v.index_.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (t.empty()) throw VocabError("empty token at id " + std::to_string(i));
    if (t.find_first_of("\r\n") != std::string::npos) {
      throw VocabError("token at id " + std::to_string(i) + " contains a line break");
    }
    if (!v.index_.emplace(t, static_cast<TokenId>(i)).second) {
      throw VocabError("duplicate token '" + t + "' at id " + std::to_string(i));
    }
    v.max_token_bytes_ = std::max(v.max_token_bytes_, t.size());
  }
  v.tokens_ = std::move(tokens);
  return v;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void save_vocab(const Vocabulary& vocab, std::ostream& out) {
  for (const std::string& t : vocab.tokens()) out << t << '\n';
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw VocabError("cannot write " + path);
  save_vocab(vocab, out);
  if (!out) throw VocabError("write failed: " + path);
}

Vocabulary load_vocab(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(std::move(line));
  }
  return Vocabulary::from_tokens(std::move(tokens));
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw VocabError("cannot open " + path);
  return load_vocab(in);
}

}  // namespace daedra::wordpiece
