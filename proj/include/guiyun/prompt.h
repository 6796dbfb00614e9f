#pragma once

// Conditioning input for the two generation modes and its canonical text
// form, which is what a sequence-to-sequence model sees as its source side.
//
//   FS2TEXT  <genre> [<theme> ...] [<key block>] <first line>
//   RR2TEXT  <genre> <group>:<end chars> [<theme> ...] [<key block>] <original first line>
//
// Theme words are space separated; key characters form one block. When both
// are empty their separators collapse. When exactly one is empty it is
// written as "—" so the text parses back unambiguously. '&' is accepted as an
// alternative separator on parse.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "guiyun/corpus.h"
#include "guiyun/extraction.h"
#include "guiyun/prosody.h"

namespace guiyun::generation {

using corpus::Genre;
using corpus::NormalizedPoem;

enum class Mode { Fs2Text, Rr2Text };

std::string_view mode_name(Mode mode);  // FS2TEXT / RR2TEXT

struct RhymeConstraint {
  std::string group_id;
  std::vector<std::size_t> lines;   // 0-based line indices, ascending
  std::vector<char32_t> end_chars;  // one per entry of lines
  std::u32string forbidden_first_line;

  bool operator==(const RhymeConstraint&) const = default;
};

struct PromptSpec {
  Mode mode = Mode::Fs2Text;
  Genre genre = Genre::Other;
  std::vector<std::u32string> theme_words;
  std::vector<char32_t> key_chars;
  std::u32string first_line;             // FS2TEXT only
  std::optional<RhymeConstraint> rhyme;  // RR2TEXT only

  bool operator==(const PromptSpec&) const = default;
};

inline constexpr std::u32string_view kEmptyField = U"—";

/// Throws Error with code "line_length", "unsupported_genre" or
/// "invalid_prompt" when the spec breaks its mode's invariants.
void check_prompt(const PromptSpec& spec);

std::string serialize(const PromptSpec& spec);
/// Inverse of serialize(); throws Error("invalid_prompt") on malformed text.
PromptSpec parse_prompt(std::string_view text);

nlohmann::json to_json(const PromptSpec& spec);

/// Validates the first line against the genre and returns the spec.
PromptSpec assemble_fs2text_prompt(Genre genre, std::vector<std::u32string> theme_words,
                                   std::vector<char32_t> key_chars, std::u32string first_line);

struct ExtractionContext {
  const extraction::IdfTable& idf;
  const extraction::EmbeddingTable& embeddings;
  const extraction::Segmenter& segmenter;
  const extraction::StopwordSet& stopwords;
};

/// Rhyme lines whose endings a follow-rhyme poem must reuse: line 1 when it
/// shares the common group, then every required rhyme line. Throws
/// Error("unsupported_genre") or Error("no_rhyme_group").
RhymeConstraint rhyme_constraint(const NormalizedPoem& original, const prosody::RhymeBook& book);

/// RR2TEXT prompt for following the original's rhyme. Theme words and key
/// characters are the top ceil(fraction * full) of the original's
/// extraction output.
PromptSpec assemble_rr2text_prompt(const NormalizedPoem& original, const prosody::RhymeBook& book,
                                   const ExtractionContext& extraction, double theme_fraction = 0.5,
                                   double key_fraction = 0.5);

/// Distinct characters of the theme words and key characters, in order.
std::u32string conditioning_chars(const PromptSpec& spec);

}  // namespace guiyun::generation
