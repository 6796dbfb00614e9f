#pragma once

// UTF-8 <-> code point conversion and the character classes the rest of the
// pipeline relies on. Poems are handled internally as std::u32string so that
// one element is one character.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "guiyun/error.h"

namespace guiyun {

/// Thrown when input bytes are not valid UTF-8. offset() is the byte offset
/// where the first invalid sequence starts, relative to the decoded buffer.
class Utf8Error : public Error {
 public:
  Utf8Error(std::size_t offset, const std::string& what);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

std::u32string from_utf8(std::string_view bytes, std::size_t base_offset = 0);
std::string to_utf8(std::u32string_view text);
std::string to_utf8(char32_t ch);

/// Sentence punctuation that terminates a verse line: ，。？！、；： and their
/// ASCII counterparts (except '?', which is the gap placeholder).
bool is_line_delimiter(char32_t ch);

/// Any character stripped during normalization: punctuation of the ASCII,
/// general-punctuation, CJK-symbol and full-width blocks. Excludes '?'.
bool is_punctuation(char32_t ch);

bool is_space(char32_t ch);

/// Placeholder for a character the source could not display.
inline constexpr char32_t kGapChar = U'?';

/// Removes punctuation and whitespace; what remains is the key used for
/// content hashing and ledger lookups.
std::u32string strip_to_characters(std::u32string_view text);

/// Splits on ASCII whitespace, dropping empty fields.
std::vector<std::string> split_whitespace(std::string_view line);

std::string trim(std::string_view s);

}  // namespace guiyun
