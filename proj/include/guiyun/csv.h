#pragma once

// Minimal RFC 4180 reading and writing shared by the corpus and response
// files.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace guiyun {

/// One CSV record: its fields, or an error message if it is malformed.
struct CsvRecord {
  std::vector<std::string> fields;
  std::string error;

  bool blank() const { return fields.size() == 1 && fields[0].empty() && error.empty(); }
};

/// Record reader over an in-memory buffer. Newlines inside quoted fields are
/// preserved; a record ends at an unquoted LF or CRLF.
class CsvReader {
 public:
  explicit CsvReader(std::string_view data) : data_(data) {}

  bool done() const { return pos_ >= data_.size(); }
  CsvRecord next();

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

/// Quotes the field only when it contains a comma, quote or line break.
std::string quote_csv_field(const std::string& field);

}  // namespace guiyun
