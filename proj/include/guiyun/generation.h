#pragma once

// End-to-end generation calls: style-restricted FS2TEXT, RR2TEXT follow-rhyme,
// and the (prompt, poem) pairs a sequence-to-sequence model would train on.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "guiyun/decoder.h"
#include "guiyun/language_model.h"
#include "guiyun/prompt.h"
#include "guiyun/prosody.h"

namespace guiyun::generation {

/// Theme words and key characters allowed when generating in one style.
struct StyleLexicon {
  std::string style_name;
  std::set<std::u32string> theme_words;
  std::set<char32_t> key_chars;

  bool operator==(const StyleLexicon&) const = default;
};

/// Union of the default-count extraction output of every poem. Poems with no
/// embedded character contribute theme words only. Throws
/// Error("empty_style") when either set ends up empty.
StyleLexicon build_style_lexicon(std::string style_name, std::span<const NormalizedPoem> style_corpus,
                                 const ExtractionContext& extraction);

/// Throws Error("style_violation") naming every token outside the lexicon.
void check_style(const StyleLexicon& style, std::span<const std::u32string> theme_words,
                 std::span<const char32_t> key_chars);

nlohmann::json to_json(const StyleLexicon& style);
StyleLexicon style_from_json(const nlohmann::json& doc);
void save_style(const StyleLexicon& style, const std::filesystem::path& path);
StyleLexicon load_style(const std::filesystem::path& path);

struct Provenance {
  PromptSpec prompt;
  std::uint64_t seed = 0;
  Strictness requested = Strictness::Relaxed;
  Strictness strictness = Strictness::Relaxed;  // level the output satisfies
  std::size_t beam_width = 0;
  std::string lm_id;
  std::vector<std::string> notes;
  double log_prob = 0.0;
};

struct Generation {
  NormalizedPoem poem;
  Provenance provenance;
  prosody::MeterReport report;  // at provenance.strictness
};

Generation generate_fs2text(std::u32string first_line, Genre genre, std::vector<std::u32string> theme_words,
                            std::vector<char32_t> key_chars, const StyleLexicon* style, const LanguageModel& lm,
                            const prosody::RhymeBook& book, const DecodeOptions& options);

/// Follow-rhyme on `original`; theme/key fractions as in
/// assemble_rr2text_prompt.
Generation generate_rr2text(const NormalizedPoem& original, const prosody::RhymeBook& book,
                            const ExtractionContext& extraction, const LanguageModel& lm,
                            const DecodeOptions& options, double theme_fraction = 0.5, double key_fraction = 0.5);

/// {"poem", "lines", "genre", "prompt", "seed", "strictness",
///  "requested_strictness", "beam_width", "lm_id", "notes", "log_prob", "meter"}
nlohmann::json to_json(const Generation& generation);

struct TrainingPair {
  std::string source;  // canonical FS2TEXT prompt text
  std::string target;  // the poem with its punctuation
};

/// One FS2TEXT pair per regulated, gap-free poem. The number of theme words
/// and key characters kept is drawn uniformly from 0..full per poem with a
/// generator seeded by `seed`; the kept items are the top-ranked ones.
std::vector<TrainingPair> assemble_training_pairs(std::span<const NormalizedPoem> corpus,
                                                  const ExtractionContext& extraction, std::uint64_t seed);

}  // namespace guiyun::generation
