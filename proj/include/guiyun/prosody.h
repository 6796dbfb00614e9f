#pragma once

// Metrical grammar for regulated verse: tone classes, rhyme groups, the four
// canonical line patterns and the whole-poem templates built from them.

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "guiyun/corpus.h"

namespace guiyun::prosody {

using corpus::Genre;
using corpus::NormalizedPoem;

enum class Tone { Ping, Ze, Unknown };

std::string_view tone_name(Tone tone);  // 平 / 仄 / ?

struct Reading {
  std::string group;
  Tone tone = Tone::Unknown;

  auto operator<=>(const Reading&) const = default;
};

/// Character -> readings table. Immutable once loaded; safe to share.
class RhymeBook {
 public:
  RhymeBook() = default;
  explicit RhymeBook(std::string name) : name_(std::move(name)) {}

  /// TSV lines `char<TAB>group<TAB>平|仄`. Blank lines and lines starting with
  /// '#' are skipped. Malformed lines throw Error("rhyme_book") naming the line.
  static RhymeBook load(std::istream& in, std::string name = "");
  static RhymeBook load_file(const std::filesystem::path& path);

  /// Idempotent for an identical (ch, reading) pair.
  void add(char32_t ch, Reading reading);

  /// Empty span for characters absent from the book.
  std::span<const Reading> readings(char32_t ch) const;
  bool contains(char32_t ch) const { return table_.count(ch) != 0; }
  bool has_tone(char32_t ch, Tone tone) const;
  bool in_group(char32_t ch, std::string_view group) const;
  std::set<std::string> groups(char32_t ch) const;
  /// Groups reachable through a level-tone reading.
  std::set<std::string> ping_groups(char32_t ch) const;

  std::size_t size() const { return table_.size(); }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::unordered_map<char32_t, std::vector<Reading>> table_;
};

enum class Strictness { Off, RhymeOnly, Relaxed, Strict };

std::string_view strictness_name(Strictness s);  // off, rhyme-only, relaxed, strict
std::optional<Strictness> parse_strictness(std::string_view name);
/// One level down; Off stays Off.
Strictness relax(Strictness s);

/// The four basic regulated line shapes (five-character form):
///   A 仄仄平平仄  B 平平仄仄平  C 平平平仄仄  D 仄仄仄平平
/// Seven-character lines prepend two tones opposite to the first one.
enum class LinePattern { A, B, C, D };

inline constexpr LinePattern kAllPatterns[] = {LinePattern::A, LinePattern::B, LinePattern::C, LinePattern::D};

char pattern_letter(LinePattern p);

/// 'P' / 'Z' per position, for a line of length 5 or 7.
std::string pattern_tones(LinePattern p, std::size_t length);

/// True when the position (0-based) is unchecked under the relaxation rule:
/// positions 1,3 of five-character lines, 1,3,5 of seven-character lines
/// (1-based).
bool is_free_position(std::size_t position, std::size_t length);

/// Whole-poem templates: 仄起不入韵 ABCD, 仄起入韵 DBCD, 平起不入韵 CDAB,
/// 平起入韵 BDAB; regulated verse repeats the couplet cycle (对 within a
/// couplet, 粘 across couplets).
std::vector<LinePattern> template_lines(std::size_t template_index, std::size_t n_lines);
inline constexpr std::size_t kTemplateCount = 4;

/// Line patterns admissible for one line at Relaxed: line 1 any, rhyme lines
/// B/D, remaining lines A/C.
std::vector<LinePattern> admissible_patterns(Genre genre, std::size_t line_index);

/// 0-based indices of lines whose final character must rhyme (2,4[,6,8]).
std::vector<std::size_t> rhyme_lines(Genre genre);

std::vector<Tone> tone_sequence(std::u32string_view line, const RhymeBook& book);

struct RhymeDetection {
  std::set<std::string> groups;    // common groups of the required rhyme lines
  bool first_line_rhymes = false;  // line 1 end shares a group with the above
  std::vector<char32_t> missing;   // required end characters absent from the book

  bool indeterminate() const { return !missing.empty(); }
};

/// Intersection of the reading groups of the required rhyme-line endings;
/// line 1 is reported separately since its rhyme is optional. Throws
/// Error("unsupported_genre") for Other.
RhymeDetection detect_rhyme_group(const NormalizedPoem& poem, const RhymeBook& book);

enum class Verdict { Pass, Fail, Unknown };
enum class Overall { Pass, Fail, Indeterminate };

std::string_view verdict_name(Verdict v);
std::string_view overall_name(Overall o);

struct PositionReport {
  char32_t ch = 0;
  Tone tone = Tone::Unknown;  // tone_sequence view of the character
  char slot = '*';            // 'P' / 'Z' when checked, '*' when free or unchecked
  Verdict verdict = Verdict::Pass;
};

struct LineReport {
  std::u32string text;
  std::optional<LinePattern> pattern;  // best-matching pattern when tones are checked
  std::vector<PositionReport> positions;
  bool rhyme_required = false;
  std::optional<bool> rhymes;  // nullopt when the end character is unknown
  Verdict verdict = Verdict::Pass;
};

struct MeterReport {
  Genre genre = Genre::Other;
  Strictness strictness = Strictness::Off;
  bool shape_ok = false;
  std::vector<std::string> rhyme_group;  // consistent group assignment, if any
  bool first_line_rhymes = false;
  std::optional<std::size_t> template_index;  // Strict only
  std::vector<LineReport> lines;
  std::vector<std::string> notes;
  Overall overall = Overall::Fail;
};

/// Checks the poem against the genre at the given strictness. RhymeOnly
/// checks rhyme membership; Relaxed adds per-line tone patterns with free
/// positions; Strict requires one whole-poem template with every position
/// checked (and a rhyming line 1 for the 入韵 templates). Throws
/// Error("no_template") for Genre::Other.
MeterReport validate(const NormalizedPoem& poem, Genre genre, const RhymeBook& book, Strictness strictness);

nlohmann::json to_json(const MeterReport& report);

}  // namespace guiyun::prosody
