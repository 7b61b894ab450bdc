#pragma once

#include <optional>
#include <span>
#include <vector>

#include "daedra/corpus.hpp"
#include "daedra/model.hpp"
#include "daedra/tokenizer.hpp"

namespace daedra {

std::vector<model::Example> make_examples(std::span<const Report> reports,
                                          const wordpiece::Vocabulary& vocab,
                                          std::size_t max_sequence_length);

struct PreparedData {
  std::vector<model::Example> train;
  std::vector<model::Example> test;
  std::optional<std::vector<double>> idf;  // fitted on train when config.tfidf
};

PreparedData prepare_data(std::span<const Report> train, std::span<const Report> test,
                          const wordpiece::Vocabulary& vocab, const model::TrainConfig& config);

/// Word counts of the narratives, for tokenizer training.
wordpiece::WordCounter count_words(std::span<const Report> reports);

}  // namespace daedra
