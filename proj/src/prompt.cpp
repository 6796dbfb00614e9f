#include "guiyun/prompt.h"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "guiyun/error.h"
#include "guiyun/text.h"

namespace guiyun::generation {

std::string_view mode_name(Mode mode) { return mode == Mode::Fs2Text ? "FS2TEXT" : "RR2TEXT"; }

namespace {

bool reserved_char(char32_t ch) { return is_space(ch) || ch == U'&' || ch == U':' || ch == kEmptyField[0]; }

void check_line(std::u32string_view line, Genre genre, std::string_view what) {
  const std::size_t want = corpus::line_length(genre);
  if (line.size() != want) {
    throw Error("line_length", std::string(what) + " line length " + std::to_string(line.size()) + " does not match " +
                                   std::string(corpus::display_name(genre)) + " (" + std::to_string(want) + ")");
  }
  for (char32_t ch : line) {
    if (is_punctuation(ch) || reserved_char(ch)) {
      throw Error("invalid_prompt", std::string(what) + " line contains punctuation or separators");
    }
  }
}

std::vector<std::string> split_fields(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == '&' || c == '\t' || c == '\n' || c == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

void check_prompt(const PromptSpec& spec) {
  if (spec.genre == Genre::Other) throw Error("unsupported_genre", "unsupported genre");
  for (const auto& w : spec.theme_words) {
    if (w.empty() || std::any_of(w.begin(), w.end(), reserved_char)) {
      throw Error("invalid_prompt", "theme word '" + to_utf8(w) + "' is empty or contains a separator");
    }
  }
  for (char32_t ch : spec.key_chars) {
    if (reserved_char(ch)) throw Error("invalid_prompt", "key character is a separator");
  }
  if (spec.mode == Mode::Fs2Text) {
    if (spec.rhyme) throw Error("invalid_prompt", "FS2TEXT prompt carries a rhyme constraint");
    check_line(spec.first_line, spec.genre, "first");
    return;
  }
  if (!spec.first_line.empty()) throw Error("invalid_prompt", "RR2TEXT prompt carries a first line");
  if (!spec.rhyme) throw Error("invalid_prompt", "RR2TEXT prompt lacks a rhyme constraint");
  const auto& r = *spec.rhyme;
  if (r.group_id.empty() || r.group_id.find(':') != std::string::npos) {
    throw Error("invalid_prompt", "bad rhyme group id");
  }
  const auto required = prosody::rhyme_lines(spec.genre);
  std::vector<std::size_t> with_first{0};
  with_first.insert(with_first.end(), required.begin(), required.end());
  if (r.lines != required && r.lines != with_first) {
    throw Error("invalid_prompt", "rhyme constraint must cover the genre's rhyme lines");
  }
  if (r.end_chars.size() != r.lines.size()) throw Error("invalid_prompt", "one end character per rhyme line");
  for (char32_t ch : r.end_chars) {
    if (is_punctuation(ch) || reserved_char(ch)) throw Error("invalid_prompt", "bad rhyme character");
  }
  check_line(r.forbidden_first_line, spec.genre, "original first");
}

std::string serialize(const PromptSpec& spec) {
  check_prompt(spec);
  std::vector<std::string> fields{std::string(corpus::display_name(spec.genre))};
  if (spec.mode == Mode::Rr2Text) {
    fields.push_back(spec.rhyme->group_id + ":" + to_utf8(std::u32string(spec.rhyme->end_chars.begin(),
                                                                         spec.rhyme->end_chars.end())));
  }
  if (!spec.theme_words.empty() || !spec.key_chars.empty()) {
    if (spec.theme_words.empty()) {
      fields.push_back(to_utf8(kEmptyField));
    } else {
      for (const auto& w : spec.theme_words) fields.push_back(to_utf8(w));
    }
    fields.push_back(spec.key_chars.empty() ? to_utf8(kEmptyField)
                                            : to_utf8(std::u32string(spec.key_chars.begin(), spec.key_chars.end())));
  }
  fields.push_back(to_utf8(spec.mode == Mode::Fs2Text ? spec.first_line : spec.rhyme->forbidden_first_line));
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(' ');
    out += fields[i];
  }
  return out;
}

PromptSpec parse_prompt(std::string_view text) {
  const auto fields = split_fields(text);
  if (fields.size() < 2) throw Error("invalid_prompt", "prompt needs at least a genre and a line");
  PromptSpec spec;
  const auto genre = corpus::parse_genre(fields.front());
  if (!genre || *genre == Genre::Other) throw Error("invalid_prompt", "unknown genre '" + fields.front() + "'");
  spec.genre = *genre;

  std::size_t begin = 1;
  const std::size_t end = fields.size() - 1;
  const std::u32string line = from_utf8(fields.back());
  if (fields[1].find(':') != std::string::npos && fields.size() >= 3) {
    spec.mode = Mode::Rr2Text;
    const auto colon = fields[1].find(':');
    RhymeConstraint r;
    r.group_id = fields[1].substr(0, colon);
    const std::u32string ends = from_utf8(fields[1].substr(colon + 1));
    r.end_chars.assign(ends.begin(), ends.end());
    r.lines = prosody::rhyme_lines(spec.genre);
    if (r.end_chars.size() == r.lines.size() + 1) {
      r.lines.insert(r.lines.begin(), 0);
    } else if (r.end_chars.size() != r.lines.size()) {
      throw Error("invalid_prompt", "rhyme block has the wrong number of characters");
    }
    r.forbidden_first_line = line;
    spec.rhyme = std::move(r);
    begin = 2;
  } else {
    spec.first_line = line;
  }

  const std::size_t middle = end - begin;
  if (middle == 1) throw Error("invalid_prompt", "ambiguous conditioning block");
  if (middle >= 2) {
    const std::u32string keys = from_utf8(fields[end - 1]);
    if (keys != kEmptyField) spec.key_chars.assign(keys.begin(), keys.end());
    if (!(middle == 2 && from_utf8(fields[begin]) == kEmptyField)) {
      for (std::size_t i = begin; i < end - 1; ++i) spec.theme_words.push_back(from_utf8(fields[i]));
    }
  }
  check_prompt(spec);
  return spec;
}

nlohmann::json to_json(const PromptSpec& spec) {
  nlohmann::json theme = nlohmann::json::array();
  for (const auto& w : spec.theme_words) theme.push_back(to_utf8(w));
  nlohmann::json keys = nlohmann::json::array();
  for (char32_t ch : spec.key_chars) keys.push_back(to_utf8(ch));
  nlohmann::json out = {{"mode", mode_name(spec.mode)},
                        {"genre", corpus::display_name(spec.genre)},
                        {"theme_words", std::move(theme)},
                        {"key_chars", std::move(keys)},
                        {"text", serialize(spec)}};
  if (spec.mode == Mode::Fs2Text) {
    out["first_line"] = to_utf8(spec.first_line);
  } else {
    nlohmann::json ends = nlohmann::json::array();
    for (char32_t ch : spec.rhyme->end_chars) ends.push_back(to_utf8(ch));
    nlohmann::json lines = nlohmann::json::array();
    for (std::size_t l : spec.rhyme->lines) lines.push_back(l + 1);
    out["rhyme"] = {{"group", spec.rhyme->group_id},
                    {"lines", std::move(lines)},
                    {"end_chars", std::move(ends)},
                    {"forbidden_first_line", to_utf8(spec.rhyme->forbidden_first_line)}};
  }
  return out;
}

PromptSpec assemble_fs2text_prompt(Genre genre, std::vector<std::u32string> theme_words,
                                   std::vector<char32_t> key_chars, std::u32string first_line) {
  PromptSpec spec;
  spec.mode = Mode::Fs2Text;
  spec.genre = genre;
  spec.theme_words = std::move(theme_words);
  spec.key_chars = std::move(key_chars);
  spec.first_line = std::move(first_line);
  check_prompt(spec);
  return spec;
}

RhymeConstraint rhyme_constraint(const NormalizedPoem& original, const prosody::RhymeBook& book) {
  const Genre genre = corpus::classify_genre(original);
  if (genre == Genre::Other) throw Error("unsupported_genre", "unsupported genre");
  const auto detection = prosody::detect_rhyme_group(original, book);
  if (detection.groups.empty()) throw Error("no_rhyme_group", "no common rhyme group");

  const auto required = prosody::rhyme_lines(genre);
  // Prefer a group in which every ending reads level-tone.
  std::string group = *detection.groups.begin();
  for (const auto& g : detection.groups) {
    const bool all_ping = std::all_of(required.begin(), required.end(), [&](std::size_t i) {
      for (const auto& r : book.readings(original.lines[i].back())) {
        if (r.group == g && r.tone == prosody::Tone::Ping) return true;
      }
      return false;
    });
    if (all_ping) {
      group = g;
      break;
    }
  }

  RhymeConstraint r;
  r.group_id = group;
  if (book.in_group(original.lines.front().back(), group)) {
    r.lines.push_back(0);
    r.end_chars.push_back(original.lines.front().back());
  }
  for (std::size_t i : required) {
    r.lines.push_back(i);
    r.end_chars.push_back(original.lines[i].back());
  }
  r.forbidden_first_line = original.lines.front();
  return r;
}

PromptSpec assemble_rr2text_prompt(const NormalizedPoem& original, const prosody::RhymeBook& book,
                                   const ExtractionContext& ctx, double theme_fraction, double key_fraction) {
  if (!(theme_fraction >= 0.0 && theme_fraction <= 1.0 && key_fraction >= 0.0 && key_fraction <= 1.0)) {
    throw Error("invalid_prompt", "fractions must lie in [0, 1]");
  }
  PromptSpec spec;
  spec.mode = Mode::Rr2Text;
  spec.genre = corpus::classify_genre(original);
  spec.rhyme = rhyme_constraint(original, book);

  auto theme = extraction::theme_words(original, ctx.idf, ctx.segmenter, ctx.stopwords);
  std::vector<char32_t> keys;
  try {
    keys = extraction::key_chars(original, ctx.embeddings, ctx.stopwords);
  } catch (const Error& e) {
    if (e.code() != "no_coverage") throw;
  }
  auto take = [](std::size_t full, double fraction) {
    return std::min(full, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(full) - 1e-12)));
  };
  theme.resize(take(theme.size(), theme_fraction));
  keys.resize(take(keys.size(), key_fraction));
  spec.theme_words = std::move(theme);
  spec.key_chars = std::move(keys);
  check_prompt(spec);
  return spec;
}

std::u32string conditioning_chars(const PromptSpec& spec) {
  std::u32string out;
  auto add = [&](char32_t ch) {
    if (out.find(ch) == std::u32string::npos) out.push_back(ch);
  };
  for (const auto& w : spec.theme_words) {
    for (char32_t ch : w) add(ch);
  }
  for (char32_t ch : spec.key_chars) add(ch);
  return out;
}

}  // namespace guiyun::generation
