#include "guiyun/evaluation.h"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <istream>
#include <random>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "guiyun/csv.h"
#include "guiyun/error.h"
#include "guiyun/text.h"

namespace guiyun::evaluation {

char option_letter(Option o) { return o == Option::A ? 'A' : 'B'; }

namespace {

std::optional<Option> parse_option(std::string_view s) {
  if (s == "A" || s == "a") return Option::A;
  if (s == "B" || s == "b") return Option::B;
  return std::nullopt;
}

bool is_skip(std::string_view s) { return s.empty() || s == "skip" || s == "-"; }

double round4(double x) { return std::round(x * 1e4) / 1e4; }

nlohmann::json optional_number(const std::optional<double>& x, bool round) {
  if (!x) return nullptr;
  return round ? round4(*x) : *x;
}

}  // namespace

TuringSet build_turing_set(std::span<const PoemPair> pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TuringSet out;
  const std::size_t width = std::max<std::size_t>(2, std::to_string(pairs.size()).size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [human, machine] = pairs[i];
    const std::string name = "pair " + std::to_string(i + 1);
    const Genre genre = corpus::classify_genre(human);
    if (corpus::classify_genre(machine) != genre) throw Error("pair_mismatch", name + ": genres differ");
    if (human.lines.empty() || machine.lines.empty() || human.lines.front() != machine.lines.front()) {
      throw Error("pair_mismatch", name + ": first lines differ");
    }
    if (human.joined() == machine.joined()) throw Error("pair_mismatch", name + ": poems are identical");

    std::string id = std::to_string(i + 1);
    id = "q" + std::string(width - id.size(), '0') + id;
    const Option machine_option = (rng() >> 63) ? Option::B : Option::A;
    TuringItem item;
    item.item_id = id;
    item.genre = genre;
    item.shared_first_line = human.lines.front();
    item.option_a = corpus::render(machine_option == Option::A ? machine : human);
    item.option_b = corpus::render(machine_option == Option::A ? human : machine);
    out.items.push_back(std::move(item));
    out.key[id] = machine_option;
  }
  return out;
}

nlohmann::json questionnaire_json(std::span<const TuringItem> items) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& it : items) {
    out.push_back({{"item_id", it.item_id},
                   {"genre", corpus::display_name(it.genre)},
                   {"first_line", to_utf8(it.shared_first_line)},
                   {"A", it.option_a},
                   {"B", it.option_b}});
  }
  return out;
}

nlohmann::json key_json(const AnswerKey& key) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [id, opt] : key) out[id] = std::string(1, option_letter(opt));
  return out;
}

AnswerKey key_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error("invalid_key", "answer key must be a JSON object");
  AnswerKey key;
  for (const auto& [id, value] : doc.items()) {
    const auto opt = value.is_string() ? parse_option(value.get<std::string>()) : std::nullopt;
    if (!opt) throw Error("invalid_key", "answer for item '" + id + "' must be A or B");
    key[id] = *opt;
  }
  return key;
}

ResponseParse parse_responses(std::istream& in) {
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::string_view view(bytes);
  if (view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
  from_utf8(view);

  ResponseParse out;
  std::map<std::string, std::size_t> index;
  CsvReader reader(view);
  for (std::size_t row = 1; !reader.done(); ++row) {
    CsvRecord rec = reader.next();
    if (rec.blank()) continue;
    const std::string where = "row " + std::to_string(row) + ": ";
    if (!rec.error.empty()) {
      out.errors.push_back(where + rec.error);
      continue;
    }
    if (row == 1 && rec.fields == std::vector<std::string>{"respondent_id", "item_id", "choice"}) continue;
    if (rec.fields.size() != 3) {
      out.errors.push_back(where + "expected 3 fields, found " + std::to_string(rec.fields.size()));
      continue;
    }
    const std::string respondent = trim(rec.fields[0]);
    const std::string item = trim(rec.fields[1]);
    const std::string choice = trim(rec.fields[2]);
    if (respondent.empty() || item.empty()) {
      out.errors.push_back(where + "empty respondent or item id");
      continue;
    }
    std::optional<Option> opt = parse_option(choice);
    if (!opt && !is_skip(choice)) {
      out.errors.push_back(where + "choice must be A, B or skip, got '" + choice + "'");
      continue;
    }
    auto [it, inserted] = index.try_emplace(respondent, out.sheets.size());
    if (inserted) out.sheets.push_back({respondent, {}});
    auto& choices = out.sheets[it->second].choices;
    if (!choices.emplace(item, opt).second) {
      out.errors.push_back(where + "second answer from " + respondent + " for item " + item);
    }
  }
  return out;
}

ScoreReport score_responses(const AnswerKey& key, std::span<const ResponseSheet> sheets) {
  ScoreReport report;
  std::map<std::string, ItemScore> items;
  for (const auto& [id, opt] : key) items[id].item_id = id;

  for (const auto& sheet : sheets) {
    const auto unknown = std::find_if(sheet.choices.begin(), sheet.choices.end(),
                                      [&](const auto& c) { return !key.count(c.first); });
    if (unknown != sheet.choices.end()) {
      report.excluded.push_back({sheet.respondent_id, "unknown item '" + unknown->first + "'"});
      continue;
    }
    ++report.sheets_scored;
    for (const auto& [id, choice] : sheet.choices) {
      if (!choice) {
        ++report.skips;
        continue;
      }
      ItemScore& s = items[id];
      ++s.choices;
      if (*choice == key.at(id)) ++s.correct;
    }
  }

  for (auto& [id, s] : items) {
    if (s.choices) {
      s.accuracy = static_cast<double>(s.correct) / static_cast<double>(s.choices);
      s.flagged = *s.accuracy < kFlagLow || *s.accuracy > kFlagHigh;
    }
    report.correct += s.correct;
    report.choices += s.choices;
    report.items.push_back(s);
  }
  if (report.choices) {
    report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.choices);
    report.p_value = binomial_pvalue(report.choices, report.correct);
  }
  return report;
}

nlohmann::json to_json(const ScoreReport& report) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& s : report.items) {
    items.push_back({{"item_id", s.item_id},
                     {"correct", s.correct},
                     {"choices", s.choices},
                     {"accuracy", optional_number(s.accuracy, true)},
                     {"flagged", s.flagged}});
  }
  nlohmann::json excluded = nlohmann::json::array();
  for (const auto& e : report.excluded) excluded.push_back({{"respondent_id", e.respondent_id}, {"error", e.message}});
  return {{"correct", report.correct},
          {"choices", report.choices},
          {"skips", report.skips},
          {"accuracy", optional_number(report.accuracy, true)},
          {"accuracy_undefined", !report.accuracy.has_value()},
          {"p_value", optional_number(report.p_value, false)},
          {"sheets_scored", report.sheets_scored},
          {"sheets_excluded", excluded.size()},
          {"excluded", std::move(excluded)},
          {"items", std::move(items)}};
}

double binomial_pvalue(std::size_t n, std::size_t k, double p0) {
  if (n == 0) throw Error("invalid_argument", "binomial test needs at least one trial");
  if (k > n) throw Error("invalid_argument", "successes exceed trials");
  if (!(p0 > 0.0 && p0 < 1.0)) throw Error("invalid_argument", "p0 must lie in (0, 1)");

  const double dn = static_cast<double>(n);
  if (n > kExactLimit) {
    const double sd = std::sqrt(dn * p0 * (1.0 - p0));
    const double z = (std::abs(static_cast<double>(k) - dn * p0) - 0.5) / sd;
    return z <= 0.0 ? 1.0 : std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  }

  const double lp = std::log(p0);
  const double lq = std::log(1.0 - p0);
  const double lfact_n = std::lgamma(dn + 1.0);
  auto log_pmf = [&](std::size_t i) {
    const double di = static_cast<double>(i);
    const double dj = static_cast<double>(n - i);
    return lfact_n - (std::lgamma(di + 1.0) + std::lgamma(dj + 1.0)) + (di * lp + dj * lq);
  };
  // Relative slack so outcomes tied with k in exact arithmetic are not lost
  // to rounding.
  const double threshold = log_pmf(k) + 1e-7;
  double total = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double l = log_pmf(i);
    if (l <= threshold) total += std::exp(l);
  }
  return std::min(1.0, total);
}

ComplianceReport compliance_metrics(std::span<const NormalizedPoem> poems, Genre genre,
                                    const prosody::RhymeBook& book) {
  ComplianceReport out;
  out.poems = poems.size();
  out.empty = poems.empty();
  if (poems.empty()) return out;
  const std::size_t len = corpus::line_length(genre);
  auto pass = [&](const NormalizedPoem& p, prosody::Strictness s) {
    return prosody::validate(p, genre, book, s).overall == prosody::Overall::Pass ? 1.0 : 0.0;
  };
  for (const auto& p : poems) {
    out.rhyme_only += pass(p, prosody::Strictness::RhymeOnly);
    out.relaxed += pass(p, prosody::Strictness::Relaxed);
    out.strict += pass(p, prosody::Strictness::Strict);
    const std::u32string all = p.joined();
    const std::set<char32_t> distinct(all.begin(), all.end());
    if (!all.empty()) out.distinct_char_ratio += static_cast<double>(distinct.size()) / static_cast<double>(all.size());
    if (!p.lines.empty()) {
      const auto ok = std::count_if(p.lines.begin(), p.lines.end(), [&](const auto& l) { return l.size() == len; });
      out.line_length_ok += static_cast<double>(ok) / static_cast<double>(p.lines.size());
    }
  }
  const double n = static_cast<double>(poems.size());
  out.rhyme_only /= n;
  out.relaxed /= n;
  out.strict /= n;
  out.distinct_char_ratio /= n;
  out.line_length_ok /= n;
  return out;
}

nlohmann::json to_json(const ComplianceReport& r) {
  return {{"poems", r.poems},
          {"empty", r.empty},
          {"rhyme_only", r.rhyme_only},
          {"relaxed", r.relaxed},
          {"strict", r.strict},
          {"distinct_char_ratio", r.distinct_char_ratio},
          {"line_length_ok", r.line_length_ok}};
}

}  // namespace guiyun::evaluation
