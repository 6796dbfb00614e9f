#include "guiyun/text.h"

#include <sstream>

namespace guiyun {

Utf8Error::Utf8Error(std::size_t offset, const std::string& what)
    : Error("utf8", what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

std::u32string from_utf8(std::string_view bytes, std::size_t base_offset) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const auto lead = static_cast<unsigned char>(bytes[i]);
    std::size_t extra = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      extra = 1;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      extra = 2;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      extra = 3;
      cp = lead & 0x07;
    } else {
      throw Utf8Error(base_offset + i, "invalid UTF-8 lead byte");
    }
    if (i + extra >= bytes.size()) throw Utf8Error(base_offset + i, "truncated UTF-8 sequence");
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(bytes[i + k]);
      if ((b & 0xC0) != 0x80) throw Utf8Error(base_offset + i, "invalid UTF-8 continuation byte");
      cp = (cp << 6) | (b & 0x3F);
    }
    // Overlong forms and surrogates.
    static constexpr char32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      throw Utf8Error(base_offset + i, "invalid UTF-8 code point");
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string to_utf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::string to_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size() * 3);
  for (char32_t ch : text) out += to_utf8(ch);
  return out;
}

bool is_line_delimiter(char32_t ch) {
  switch (ch) {
    case U'，': case U'。': case U'？': case U'！': case U'、': case U'；': case U'：':
    case U'．': case U',': case U'.': case U'!': case U';': case U':':
      return true;
    default:
      return false;
  }
}

bool is_space(char32_t ch) {
  return ch == U' ' || ch == U'\t' || ch == U'\n' || ch == U'\r' || ch == U'\v' || ch == U'\f' ||
         ch == 0x3000 || ch == 0x00A0;
}

bool is_punctuation(char32_t ch) {
  if (ch == kGapChar) return false;
  if (ch < 0x80) {
    return (ch >= 0x21 && ch <= 0x2F) || (ch >= 0x3A && ch <= 0x40) || (ch >= 0x5B && ch <= 0x60) ||
           (ch >= 0x7B && ch <= 0x7E);
  }
  if (ch == 0x00B7) return true;                   // middle dot
  if (ch >= 0x2000 && ch <= 0x206F) return true;   // general punctuation
  if (ch >= 0x3001 && ch <= 0x303F) return true;   // CJK symbols and punctuation
  if (ch >= 0xFE10 && ch <= 0xFE1F) return true;   // vertical forms
  if (ch >= 0xFE30 && ch <= 0xFE4F) return true;   // CJK compatibility forms
  if ((ch >= 0xFF01 && ch <= 0xFF0F) || (ch >= 0xFF1A && ch <= 0xFF20) || (ch >= 0xFF3B && ch <= 0xFF40) ||
      (ch >= 0xFF5B && ch <= 0xFF65)) {
    return true;  // full-width forms
  }
  return false;
}

std::u32string strip_to_characters(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size());
  for (char32_t ch : text) {
    if (!is_punctuation(ch) && !is_space(ch)) out.push_back(ch);
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view line) {
  std::vector<std::string> fields;
  std::istringstream in{std::string(line)};
  std::string field;
  while (in >> field) fields.push_back(field);
  return fields;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace guiyun
