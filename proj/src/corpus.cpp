#include "guiyun/corpus.h"

#include <istream>
#include <iterator>
#include <ostream>
#include <unordered_set>

#include "guiyun/csv.h"
#include "guiyun/digest.h"
#include "guiyun/error.h"
#include "guiyun/text.h"

namespace guiyun::corpus {

std::string_view display_name(Genre genre) {
  switch (genre) {
    case Genre::Wujue: return "五言绝句";
    case Genre::Qijue: return "七言绝句";
    case Genre::Wulv: return "五言律诗";
    case Genre::Qilv: return "七言律诗";
    case Genre::Other: break;
  }
  return "其他";
}

std::string_view genre_id(Genre genre) {
  switch (genre) {
    case Genre::Wujue: return "wujue";
    case Genre::Qijue: return "qijue";
    case Genre::Wulv: return "wulv";
    case Genre::Qilv: return "qilv";
    case Genre::Other: break;
  }
  return "other";
}

std::optional<Genre> parse_genre(std::string_view name) {
  for (Genre g : {Genre::Wujue, Genre::Qijue, Genre::Wulv, Genre::Qilv, Genre::Other}) {
    if (name == display_name(g) || name == genre_id(g)) return g;
  }
  return std::nullopt;
}

std::size_t line_count(Genre genre) {
  switch (genre) {
    case Genre::Wujue:
    case Genre::Qijue: return 4;
    case Genre::Wulv:
    case Genre::Qilv: return 8;
    case Genre::Other: break;
  }
  return 0;
}

std::size_t line_length(Genre genre) {
  switch (genre) {
    case Genre::Wujue:
    case Genre::Wulv: return 5;
    case Genre::Qijue:
    case Genre::Qilv: return 7;
    case Genre::Other: break;
  }
  return 0;
}

std::u32string NormalizedPoem::joined() const {
  std::u32string out;
  out.reserve(char_count);
  for (const auto& line : lines) out += line;
  return out;
}

std::u32string NormalizedPoem::reconstruct() const {
  const std::u32string chars = joined();
  std::u32string out;
  std::size_t next = 0;
  for (const auto& run : punctuation_map) {
    out.append(chars, next, run.position - next);
    out += run.text;
    next = run.position;
  }
  out.append(chars, next, std::u32string::npos);
  return out;
}

NormalizedPoem normalize(std::string_view content) {
  const std::u32string text = from_utf8(content);
  NormalizedPoem poem;
  std::u32string line;
  auto close_line = [&] {
    if (line.empty()) return;
    poem.line_lengths.push_back(line.size());
    poem.char_count += line.size();
    poem.lines.push_back(std::move(line));
    line.clear();
  };
  for (char32_t ch : text) {
    const bool stripped = is_punctuation(ch) || is_space(ch);
    if (!stripped) {
      if (ch == kGapChar) poem.has_gaps = true;
      line.push_back(ch);
      continue;
    }
    const std::size_t position = poem.char_count + line.size();
    if (!poem.punctuation_map.empty() && poem.punctuation_map.back().position == position) {
      poem.punctuation_map.back().text.push_back(ch);
    } else {
      poem.punctuation_map.push_back({position, std::u32string(1, ch)});
    }
    if (is_line_delimiter(ch) || is_space(ch)) close_line();
  }
  close_line();
  if (poem.char_count == 0) throw Error("empty_poem", "empty poem");
  return poem;
}

NormalizedPoem from_lines(std::vector<std::u32string> lines) {
  NormalizedPoem poem;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) throw Error("empty_poem", "empty line in poem");
    for (char32_t ch : lines[i]) {
      if (ch == kGapChar) poem.has_gaps = true;
    }
    poem.char_count += lines[i].size();
    poem.line_lengths.push_back(lines[i].size());
    poem.punctuation_map.push_back({poem.char_count, i % 2 == 0 ? U"，" : U"。"});
  }
  poem.lines = std::move(lines);
  return poem;
}

std::string render(const NormalizedPoem& poem) { return to_utf8(poem.reconstruct()); }

Genre classify_genre(const NormalizedPoem& poem) {
  const std::size_t n = poem.lines.size();
  if (n != 4 && n != 8) return Genre::Other;
  const std::size_t len = poem.line_lengths.front();
  for (std::size_t l : poem.line_lengths) {
    if (l != len) return Genre::Other;
  }
  if (len == 5) return n == 4 ? Genre::Wujue : Genre::Wulv;
  if (len == 7) return n == 4 ? Genre::Qijue : Genre::Qilv;
  return Genre::Other;
}

namespace {

bool is_header(const std::vector<std::string>& fields) {
  return fields.size() == 4 && fields[0] == "title" && fields[1] == "dynasty" && fields[2] == "author" &&
         fields[3] == "content";
}

}  // namespace

ParseResult parse_corpus_text(std::string_view bytes, std::string_view source) {
  if (bytes.substr(0, 3) == "\xEF\xBB\xBF") bytes.remove_prefix(3);
  from_utf8(bytes);  // validates; throws with the offending offset

  ParseResult result;
  CsvReader reader(bytes);
  std::size_t record_no = 0;
  while (!reader.done()) {
    CsvRecord rec = reader.next();
    ++record_no;
    if (rec.blank()) continue;  // blank line
    if (record_no == 1 && rec.error.empty() && is_header(rec.fields)) {
      result.had_header = true;
      continue;
    }
    if (!rec.error.empty()) {
      result.errors.push_back({record_no, rec.error});
      continue;
    }
    if (rec.fields.size() != 4) {
      result.errors.push_back({record_no, "expected 4 fields, found " + std::to_string(rec.fields.size())});
      continue;
    }
    if (trim(rec.fields[3]).empty()) {
      result.errors.push_back({record_no, "empty content"});
      continue;
    }
    result.records.push_back({std::move(rec.fields[0]), std::move(rec.fields[1]), std::move(rec.fields[2]),
                              std::move(rec.fields[3]), std::string(source) + ":" + std::to_string(record_no)});
  }
  return result;
}

ParseResult parse_corpus(std::istream& in, std::string_view source) {
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_corpus_text(bytes, source);
}

void write_corpus(std::ostream& out, std::span<const PoemRecord> records, bool header) {
  if (header) out << "title,dynasty,author,content\n";
  for (const auto& r : records) {
    out << quote_csv_field(r.title) << ',' << quote_csv_field(r.dynasty) << ',' << quote_csv_field(r.author) << ','
        << quote_csv_field(r.content) << '\n';
  }
}

std::string content_key(std::string_view content) {
  return sha256_hex(to_utf8(strip_to_characters(from_utf8(content))));
}

std::vector<PoemRecord> deduplicate(std::span<const PoemRecord> records) {
  std::vector<PoemRecord> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(content_key(r.content)).second) out.push_back(r);
  }
  return out;
}

}  // namespace guiyun::corpus
