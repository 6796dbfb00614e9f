#include "guiyun/csv.h"

namespace guiyun {

CsvRecord CsvReader::next() {
  CsvRecord rec;
  std::string field;
  bool quoted = false;       // current field started with a quote
  bool in_quotes = false;    // inside an open quote
  bool after_quote = false;  // closing quote seen, expect separator
  while (pos_ < data_.size()) {
    const char c = data_[pos_++];
    if (in_quotes) {
      if (c == '"') {
        if (pos_ < data_.size() && data_[pos_] == '"') {
          field.push_back('"');
          ++pos_;
        } else {
          in_quotes = false;
          after_quote = true;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == ',') {
      rec.fields.push_back(std::move(field));
      field.clear();
      quoted = after_quote = false;
      continue;
    }
    if (c == '\n' || c == '\r') {
      if (c == '\r' && pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
      rec.fields.push_back(std::move(field));
      return rec;
    }
    if (after_quote) {
      if (rec.error.empty()) rec.error = "unexpected character after closing quote";
      field.push_back(c);
      continue;
    }
    if (c == '"') {
      if (field.empty() && !quoted) {
        quoted = in_quotes = true;
      } else if (rec.error.empty()) {
        rec.error = "quote inside unquoted field";
      }
      continue;
    }
    field.push_back(c);
  }
  if (in_quotes && rec.error.empty()) rec.error = "unterminated quoted field";
  rec.fields.push_back(std::move(field));
  return rec;
}

std::string quote_csv_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace guiyun
