#include "daedra/csv.hpp"

namespace daedra::csv {

Reader::Reader(std::istream& in) : in_(in) {
  if (peek() == 0xEF) {
    // Only a full EF BB BF sequence counts; anything else stays in the data.
    if (len_ - pos_ >= 3 && static_cast<unsigned char>(buf_[pos_ + 1]) == 0xBB &&
        static_cast<unsigned char>(buf_[pos_ + 2]) == 0xBF) {
      pos_ += 3;
      had_bom_ = true;
    }
  }
}

bool Reader::fill() {
  if (pos_ < len_) return true;
  in_.read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  len_ = static_cast<std::size_t>(in_.gcount());
  pos_ = 0;
  return len_ > 0;
}

int Reader::get() {
  if (!fill()) return -1;
  return static_cast<unsigned char>(buf_[pos_++]);
}

int Reader::peek() {
  if (!fill()) return -1;
  return static_cast<unsigned char>(buf_[pos_]);
}

bool Reader::next(Row& row) {
  enum class State { kFieldStart, kUnquoted, kQuoted, kQuoteInQuoted };

  while (true) {
    row.fields.clear();
    row.malformed = false;
    row.error.clear();
    row.line = line_;

    if (peek() < 0) return false;

    std::string field;
    State state = State::kFieldStart;
    bool row_done = false;

    auto fail = [&row](const char* why) {
      if (!row.malformed) {
        row.malformed = true;
        row.error = why;
      }
    };
    auto end_line = [this](int c) {
      if (c == '\r' && peek() == '\n') get();
      ++line_;
    };

    while (!row_done) {
      const int c = get();
      switch (state) {
        case State::kFieldStart:
          if (c < 0) {
            row.fields.push_back(std::move(field));
            row_done = true;
          } else if (c == '"') {
            state = State::kQuoted;
          } else if (c == ',') {
            row.fields.push_back(std::move(field));
            field.clear();
          } else if (c == '\n' || c == '\r') {
            end_line(c);
            row.fields.push_back(std::move(field));
            row_done = true;
          } else {
            field.push_back(static_cast<char>(c));
            state = State::kUnquoted;
          }
          break;
        case State::kUnquoted:
          if (c < 0) {
            row.fields.push_back(std::move(field));
            row_done = true;
          } else if (c == ',') {
            row.fields.push_back(std::move(field));
            field.clear();
            state = State::kFieldStart;
          } else if (c == '\n' || c == '\r') {
            end_line(c);
            row.fields.push_back(std::move(field));
            row_done = true;
          } else {
            if (c == '"') fail("stray quote in unquoted field");
            field.push_back(static_cast<char>(c));
          }
          break;
        case State::kQuoted:
          if (c < 0) {
            fail("unterminated quoted field");
            row.fields.push_back(std::move(field));
            row_done = true;
          } else if (c == '"') {
            state = State::kQuoteInQuoted;
          } else {
            if (c == '\n' || (c == '\r' && peek() != '\n')) ++line_;
            field.push_back(static_cast<char>(c));
          }
          break;
        case State::kQuoteInQuoted:
          if (c == '"') {
            field.push_back('"');
            state = State::kQuoted;
          } else if (c < 0) {
            row.fields.push_back(std::move(field));
            row_done = true;
          } else if (c == ',') {
            row.fields.push_back(std::move(field));
            field.clear();
            state = State::kFieldStart;
          } else if (c == '\n' || c == '\r') {
            end_line(c);
            row.fields.push_back(std::move(field));
            row_done = true;
          } else {
            fail("text after closing quote");
            field.push_back(static_cast<char>(c));
            state = State::kUnquoted;
          }
          break;
      }
    }

    const bool blank = row.fields.size() == 1 && row.fields[0].empty() && !row.malformed;
    if (!blank) return true;
  }
}

}  // namespace daedra::csv
