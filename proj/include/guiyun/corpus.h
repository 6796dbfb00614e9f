#pragma once

// Corpus ingestion: the four-field CSV storage format, line normalization,
// genre classification and content-hash deduplication.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace guiyun::corpus {

struct PoemRecord {
  std::string title;
  std::string dynasty;
  std::string author;
  std::string content;
  std::string source_id;  // provenance tag, "<source>:<record number>"

  bool operator==(const PoemRecord&) const = default;
};

enum class Genre { Wujue, Qijue, Wulv, Qilv, Other };

inline constexpr Genre kRegulatedGenres[] = {Genre::Wujue, Genre::Qijue, Genre::Wulv, Genre::Qilv};

/// 五言绝句 / 七言绝句 / 五言律诗 / 七言律诗, or "其他" for Other.
std::string_view display_name(Genre genre);
/// Stable ASCII identifier: wujue, qijue, wulv, qilv, other.
std::string_view genre_id(Genre genre);
/// Accepts either the display name or the ASCII identifier.
std::optional<Genre> parse_genre(std::string_view name);

/// 0 for Other.
std::size_t line_count(Genre genre);
std::size_t line_length(Genre genre);

/// A run of stripped characters (punctuation and whitespace) and the number
/// of kept characters that precede it.
struct PunctuationRun {
  std::size_t position = 0;
  std::u32string text;

  bool operator==(const PunctuationRun&) const = default;
};

struct NormalizedPoem {
  std::vector<std::u32string> lines;
  std::vector<std::size_t> line_lengths;
  std::size_t char_count = 0;
  bool has_gaps = false;
  std::vector<PunctuationRun> punctuation_map;

  /// All characters, no separators.
  std::u32string joined() const;
  /// Interleaves joined() with punctuation_map; equals the source content.
  std::u32string reconstruct() const;

  bool operator==(const NormalizedPoem&) const = default;
};

/// Throws Error("empty_poem") if nothing but punctuation/whitespace remains.
NormalizedPoem normalize(std::string_view content);
inline NormalizedPoem normalize(const PoemRecord& record) { return normalize(record.content); }

/// Builds a poem from bare lines (e.g. decoder output); the punctuation map
/// alternates ， and 。 so reconstruct() yields a conventionally punctuated text.
NormalizedPoem from_lines(std::vector<std::u32string> lines);

/// UTF-8 display form: reconstruct() encoded.
std::string render(const NormalizedPoem& poem);

/// Verse shape only: 4 or 8 lines of uniform length 5 or 7, else Other.
Genre classify_genre(const NormalizedPoem& poem);

struct RowError {
  std::size_t record = 0;  // 1-based record number in the file, header included
  std::string message;
};

struct ParseResult {
  std::vector<PoemRecord> records;
  std::vector<RowError> errors;
  bool had_header = false;
};

/// Parses the title,dynasty,author,content CSV. Malformed rows are collected
/// in errors and skipped; invalid UTF-8 throws Utf8Error with the byte offset.
ParseResult parse_corpus(std::istream& in, std::string_view source = "corpus");
ParseResult parse_corpus_text(std::string_view bytes, std::string_view source = "corpus");

void write_corpus(std::ostream& out, std::span<const PoemRecord> records, bool header = true);

/// SHA-256 of the punctuation- and whitespace-free content.
std::string content_key(std::string_view content);

/// Keeps the first record of every content_key; order preserved.
std::vector<PoemRecord> deduplicate(std::span<const PoemRecord> records);

}  // namespace guiyun::corpus
