#include "daedra/dataset.hpp"

namespace daedra {

std::vector<model::Example> make_examples(std::span<const Report> reports,
                                          const wordpiece::Vocabulary& vocab,
                                          std::size_t max_sequence_length) {
  std::vector<model::Example> out;
  out.reserve(reports.size());
  for (const Report& r : reports) {
    out.push_back(model::Example{
        model::featurize(wordpiece::encode(r.text, vocab, max_sequence_length)), r.label()});
  }
  return out;
}

PreparedData prepare_data(std::span<const Report> train, std::span<const Report> test,
                          const wordpiece::Vocabulary& vocab, const model::TrainConfig& config) {
  PreparedData data;
  data.train = make_examples(train, vocab, config.max_sequence_length);
  data.test = make_examples(test, vocab, config.max_sequence_length);
  if (config.tfidf) {
    data.idf = model::fit_idf(data.train, vocab.size());
    for (auto& ex : data.train) model::apply_idf(ex.features, *data.idf);
    for (auto& ex : data.test) model::apply_idf(ex.features, *data.idf);
  }
  return data;
}

wordpiece::WordCounter count_words(std::span<const Report> reports) {
  wordpiece::WordCounter counter;
  for (const Report& r : reports) counter.add_text(r.text);
  return counter;
}

}  // namespace daedra
