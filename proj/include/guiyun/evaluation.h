#pragma once

// Forced-choice discrimination test (which of two poems sharing a first line
// was machine-written) plus automatic compliance metrics.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "guiyun/corpus.h"
#include "guiyun/prosody.h"

namespace guiyun::evaluation {

using corpus::Genre;
using corpus::NormalizedPoem;

enum class Option { A, B };

char option_letter(Option o);

struct TuringItem {
  std::string item_id;
  std::string option_a;
  std::string option_b;
  Genre genre = Genre::Other;
  std::u32string shared_first_line;
};

/// item_id -> the option holding the machine poem.
using AnswerKey = std::map<std::string, Option>;

struct TuringSet {
  std::vector<TuringItem> items;  // presentable; carries no answer
  AnswerKey key;
};

struct PoemPair {
  NormalizedPoem human;
  NormalizedPoem machine;
};

/// A/B order is drawn per item from `seed`. Throws Error("pair_mismatch")
/// naming the pair when genres or first lines differ or the poems are equal.
TuringSet build_turing_set(std::span<const PoemPair> pairs, std::uint64_t seed);

nlohmann::json questionnaire_json(std::span<const TuringItem> items);
nlohmann::json key_json(const AnswerKey& key);
AnswerKey key_from_json(const nlohmann::json& doc);

struct ResponseSheet {
  std::string respondent_id;
  /// item_id -> choice; nullopt records an explicit skip.
  std::map<std::string, std::optional<Option>> choices;
};

struct ResponseParse {
  std::vector<ResponseSheet> sheets;  // in order of first appearance
  std::vector<std::string> errors;    // malformed rows, row number included
};

/// CSV `respondent_id,item_id,choice` with choice A, B, or skip/empty. A
/// header row with those names is optional. A respondent answering one
/// item twice gets the row rejected.
ResponseParse parse_responses(std::istream& in);

struct ItemScore {
  std::string item_id;
  std::size_t correct = 0;
  std::size_t choices = 0;
  std::optional<double> accuracy;
  bool flagged = false;  // accuracy below 0.4 or above 0.6
};

struct SheetError {
  std::string respondent_id;
  std::string message;
};

struct ScoreReport {
  std::vector<ItemScore> items;  // key order
  std::size_t correct = 0;
  std::size_t choices = 0;
  std::size_t skips = 0;
  std::optional<double> accuracy;  // nullopt when no choices were made
  std::optional<double> p_value;   // two-sided binomial test against 0.5
  std::size_t sheets_scored = 0;
  std::vector<SheetError> excluded;
};

inline constexpr double kFlagLow = 0.4;
inline constexpr double kFlagHigh = 0.6;

/// A choice is correct when it names the machine option. Skips leave the
/// denominators. Sheets naming an unknown item are excluded whole.
ScoreReport score_responses(const AnswerKey& key, std::span<const ResponseSheet> sheets);

/// Accuracies rounded to 4 decimal places.
nlohmann::json to_json(const ScoreReport& report);

/// Exact binomial test above this many trials switches to the normal
/// approximation with continuity correction.
inline constexpr std::size_t kExactLimit = 10000;

/// Two-sided p-value: the total probability of outcomes no more likely than
/// k under Binomial(n, p0). Throws Error("invalid_argument") for n = 0,
/// k > n or p0 outside (0, 1).
double binomial_pvalue(std::size_t n, std::size_t k, double p0 = 0.5);

struct ComplianceReport {
  std::size_t poems = 0;
  bool empty = true;
  double rhyme_only = 0.0;  // fraction passing each level
  double relaxed = 0.0;
  double strict = 0.0;
  double distinct_char_ratio = 0.0;  // mean over poems of distinct/total characters
  double line_length_ok = 0.0;       // mean fraction of lines of the genre's length
};

ComplianceReport compliance_metrics(std::span<const NormalizedPoem> poems, Genre genre,
                                    const prosody::RhymeBook& book);

nlohmann::json to_json(const ComplianceReport& report);

}  // namespace guiyun::evaluation
