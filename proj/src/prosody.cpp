#include "guiyun/prosody.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "guiyun/error.h"
#include "guiyun/text.h"

namespace guiyun::prosody {

std::string_view tone_name(Tone tone) {
  switch (tone) {
    case Tone::Ping: return "平";
    case Tone::Ze: return "仄";
    case Tone::Unknown: break;
  }
  return "?";
}

RhymeBook RhymeBook::load(std::istream& in, std::string name) {
  RhymeBook book(std::move(name));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.erase(0, 3);
    if (trim(line).empty() || line.front() == '#') continue;
    auto fail = [&](const std::string& why) {
      throw Error("rhyme_book", "rhyme book line " + std::to_string(line_no) + ": " + why);
    };
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 3) fail("expected 3 tab-separated columns");
    std::u32string ch;
    try {
      ch = from_utf8(cols[0]);
    } catch (const Utf8Error& e) {
      fail(e.what());
    }
    if (ch.size() != 1) fail("first column must be a single character");
    if (trim(cols[1]).empty()) fail("empty rhyme group");
    Tone tone;
    if (cols[2] == "平") {
      tone = Tone::Ping;
    } else if (cols[2] == "仄") {
      tone = Tone::Ze;
    } else {
      fail("tone must be 平 or 仄");
    }
    book.add(ch[0], {trim(cols[1]), tone});
  }
  return book;
}

RhymeBook RhymeBook::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open rhyme book " + path.string());
  return load(in, path.stem().string());
}

void RhymeBook::add(char32_t ch, Reading reading) {
  auto& list = table_[ch];
  if (std::find(list.begin(), list.end(), reading) == list.end()) list.push_back(std::move(reading));
}

std::span<const Reading> RhymeBook::readings(char32_t ch) const {
  const auto it = table_.find(ch);
  if (it == table_.end()) return {};
  return it->second;
}

bool RhymeBook::has_tone(char32_t ch, Tone tone) const {
  for (const auto& r : readings(ch)) {
    if (r.tone == tone) return true;
  }
  return false;
}

bool RhymeBook::in_group(char32_t ch, std::string_view group) const {
  for (const auto& r : readings(ch)) {
    if (r.group == group) return true;
  }
  return false;
}

std::set<std::string> RhymeBook::groups(char32_t ch) const {
  std::set<std::string> out;
  for (const auto& r : readings(ch)) out.insert(r.group);
  return out;
}

std::set<std::string> RhymeBook::ping_groups(char32_t ch) const {
  std::set<std::string> out;
  for (const auto& r : readings(ch)) {
    if (r.tone == Tone::Ping) out.insert(r.group);
  }
  return out;
}

std::string_view strictness_name(Strictness s) {
  switch (s) {
    case Strictness::Off: return "off";
    case Strictness::RhymeOnly: return "rhyme-only";
    case Strictness::Relaxed: return "relaxed";
    case Strictness::Strict: return "strict";
  }
  return "off";
}

std::optional<Strictness> parse_strictness(std::string_view name) {
  for (auto s : {Strictness::Off, Strictness::RhymeOnly, Strictness::Relaxed, Strictness::Strict}) {
    if (name == strictness_name(s)) return s;
  }
  if (name == "rhyme_only" || name == "rhymeonly") return Strictness::RhymeOnly;
  return std::nullopt;
}

Strictness relax(Strictness s) {
  switch (s) {
    case Strictness::Strict: return Strictness::Relaxed;
    case Strictness::Relaxed: return Strictness::RhymeOnly;
    default: return Strictness::Off;
  }
}

char pattern_letter(LinePattern p) { return static_cast<char>('A' + static_cast<int>(p)); }

std::string pattern_tones(LinePattern p, std::size_t length) {
  static constexpr std::string_view kFive[] = {"ZZPPZ", "PPZZP", "PPPZZ", "ZZZPP"};
  std::string base(kFive[static_cast<int>(p)]);
  if (length == 5) return base;
  const char flip = base[0] == 'P' ? 'Z' : 'P';
  return std::string(2, flip) + base;
}

bool is_free_position(std::size_t position, std::size_t length) {
  return position % 2 == 0 && position + 1 < length;
}

std::vector<LinePattern> template_lines(std::size_t template_index, std::size_t n_lines) {
  using enum LinePattern;
  static const std::array<std::array<LinePattern, 4>, kTemplateCount> kQuatrain = {{
      {A, B, C, D},
      {D, B, C, D},
      {C, D, A, B},
      {B, D, A, B},
  }};
  const auto& head = kQuatrain.at(template_index);
  std::vector<LinePattern> out(head.begin(), head.end());
  // Couplet cycle continues: B/D-ending second line of a couplet is followed
  // by the pattern sharing its second tone (粘).
  while (out.size() < n_lines) {
    const LinePattern prev = out.back();
    const bool restart_ab = prev == D;
    if (restart_ab) {
      out.push_back(A);
      out.push_back(B);
    } else {
      out.push_back(C);
      out.push_back(D);
    }
  }
  out.resize(n_lines);
  return out;
}

std::vector<std::size_t> rhyme_lines(Genre genre) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < corpus::line_count(genre); i += 2) out.push_back(i);
  return out;
}

std::vector<LinePattern> admissible_patterns(Genre genre, std::size_t line_index) {
  using enum LinePattern;
  if (line_index == 0) return {A, B, C, D};
  if (line_index % 2 == 1) return {B, D};
  (void)genre;
  return {A, C};
}

std::vector<Tone> tone_sequence(std::u32string_view line, const RhymeBook& book) {
  std::vector<Tone> out;
  out.reserve(line.size());
  for (char32_t ch : line) {
    const auto rs = book.readings(ch);
    if (rs.empty()) {
      out.push_back(Tone::Unknown);
      continue;
    }
    const bool all_ping = std::all_of(rs.begin(), rs.end(), [](const Reading& r) { return r.tone == Tone::Ping; });
    const bool all_ze = std::all_of(rs.begin(), rs.end(), [](const Reading& r) { return r.tone == Tone::Ze; });
    out.push_back(all_ping ? Tone::Ping : all_ze ? Tone::Ze : Tone::Unknown);
  }
  return out;
}

namespace {

std::set<std::string> intersect(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

struct RhymeAnalysis {
  std::set<std::string> common;              // groups shared by every known required ending
  std::vector<std::optional<bool>> member;   // per required line
  std::optional<bool> first_line;            // line 1 ending in a common group
  std::vector<char32_t> missing;
};

RhymeAnalysis analyze_rhyme(const NormalizedPoem& poem, Genre genre, const RhymeBook& book) {
  RhymeAnalysis out;
  const auto req = rhyme_lines(genre);
  std::vector<char32_t> ends;
  for (std::size_t idx : req) ends.push_back(poem.lines.at(idx).back());

  std::set<std::string> candidates;
  bool any_known = false;
  for (char32_t ch : ends) {
    if (!book.contains(ch)) {
      out.missing.push_back(ch);
      continue;
    }
    const auto gs = book.groups(ch);
    out.common = any_known ? intersect(out.common, gs) : gs;
    candidates.insert(gs.begin(), gs.end());
    any_known = true;
  }

  // Group used for per-line membership flags: the common group when one
  // exists, otherwise the one covering most lines (line 2's groups first).
  std::optional<std::string> chosen;
  if (!out.common.empty()) {
    chosen = *out.common.begin();
  } else {
    std::tuple<int, int> best{-1, -1};
    for (const auto& g : candidates) {
      int count = 0;
      for (char32_t ch : ends) count += book.in_group(ch, g) ? 1 : 0;
      const std::tuple<int, int> key{count, book.in_group(ends.front(), g) ? 1 : 0};
      if (key > best) {
        best = key;
        chosen = g;
      }
    }
  }
  for (char32_t ch : ends) {
    if (!book.contains(ch)) {
      out.member.push_back(std::nullopt);
    } else {
      out.member.push_back(chosen && book.in_group(ch, *chosen));
    }
  }

  const char32_t first = poem.lines.front().back();
  if (book.contains(first)) {
    out.first_line = !intersect(book.groups(first), out.common).empty();
  }
  return out;
}

struct PatternScore {
  int fails = 0;
  int unknowns = 0;
  auto key() const { return std::tuple{fails, unknowns}; }
};

PatternScore score_line(std::u32string_view line, const std::string& tones, bool relaxed, const RhymeBook& book,
                        std::vector<PositionReport>* positions) {
  PatternScore score;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const bool free = relaxed && is_free_position(i, line.size());
    Verdict v = Verdict::Pass;
    if (!free) {
      const char32_t ch = line[i];
      if (!book.contains(ch)) {
        v = Verdict::Unknown;
        ++score.unknowns;
      } else if (!book.has_tone(ch, tones[i] == 'P' ? Tone::Ping : Tone::Ze)) {
        v = Verdict::Fail;
        ++score.fails;
      }
    }
    if (positions) {
      (*positions)[i].slot = free ? '*' : tones[i];
      (*positions)[i].verdict = v;
    }
  }
  return score;
}

Verdict to_verdict(const PatternScore& s) {
  if (s.fails > 0) return Verdict::Fail;
  if (s.unknowns > 0) return Verdict::Unknown;
  return Verdict::Pass;
}

Verdict combine(Verdict a, Verdict b) {
  if (a == Verdict::Fail || b == Verdict::Fail) return Verdict::Fail;
  if (a == Verdict::Unknown || b == Verdict::Unknown) return Verdict::Unknown;
  return Verdict::Pass;
}

Verdict from_optional(const std::optional<bool>& b) {
  if (!b) return Verdict::Unknown;
  return *b ? Verdict::Pass : Verdict::Fail;
}

}  // namespace

RhymeDetection detect_rhyme_group(const NormalizedPoem& poem, const RhymeBook& book) {
  const Genre genre = corpus::classify_genre(poem);
  if (genre == Genre::Other) throw Error("unsupported_genre", "unsupported genre");
  const RhymeAnalysis a = analyze_rhyme(poem, genre, book);
  RhymeDetection out;
  out.missing = a.missing;
  if (a.missing.empty()) out.groups = a.common;
  out.first_line_rhymes = a.missing.empty() && a.first_line.value_or(false);
  return out;
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Unknown: break;
  }
  return "unknown";
}

std::string_view overall_name(Overall o) {
  switch (o) {
    case Overall::Pass: return "pass";
    case Overall::Fail: return "fail";
    case Overall::Indeterminate: break;
  }
  return "indeterminate";
}

MeterReport validate(const NormalizedPoem& poem, Genre genre, const RhymeBook& book, Strictness strictness) {
  if (genre == Genre::Other) throw Error("no_template", "no template");
  MeterReport report;
  report.genre = genre;
  report.strictness = strictness;

  const std::size_t n = corpus::line_count(genre);
  const std::size_t len = corpus::line_length(genre);
  report.shape_ok = poem.lines.size() == n &&
                    std::all_of(poem.lines.begin(), poem.lines.end(), [&](const auto& l) { return l.size() == len; });
  for (const auto& line : poem.lines) {
    LineReport lr;
    lr.text = line;
    const auto tones = tone_sequence(line, book);
    for (std::size_t i = 0; i < line.size(); ++i) lr.positions.push_back({line[i], tones[i], '*', Verdict::Pass});
    report.lines.push_back(std::move(lr));
  }
  if (!report.shape_ok) {
    report.notes.push_back("poem shape does not match " + std::string(corpus::display_name(genre)));
    report.overall = Overall::Fail;
    return report;
  }
  if (strictness == Strictness::Off) {
    report.overall = Overall::Pass;
    return report;
  }

  Verdict total = Verdict::Pass;

  const RhymeAnalysis rhyme = analyze_rhyme(poem, genre, book);
  report.rhyme_group.assign(rhyme.common.begin(), rhyme.common.end());
  report.first_line_rhymes = rhyme.first_line.value_or(false);
  report.lines.front().rhymes = rhyme.first_line;
  const auto req = rhyme_lines(genre);
  for (std::size_t k = 0; k < req.size(); ++k) {
    LineReport& lr = report.lines[req[k]];
    lr.rhyme_required = true;
    lr.rhymes = rhyme.member[k];
    const Verdict v = from_optional(rhyme.member[k]);
    lr.verdict = combine(lr.verdict, v);
    total = combine(total, v);
  }
  if (!rhyme.missing.empty()) report.notes.push_back("rhyme character missing from the rhyme book");

  if (strictness == Strictness::Relaxed) {
    for (std::size_t i = 0; i < n; ++i) {
      LineReport& lr = report.lines[i];
      std::optional<LinePattern> best;
      PatternScore best_score{1 << 20, 0};
      for (LinePattern p : admissible_patterns(genre, i)) {
        const auto s = score_line(lr.text, pattern_tones(p, len), true, book, nullptr);
        if (s.key() < best_score.key()) {
          best_score = s;
          best = p;
        }
      }
      lr.pattern = best;
      score_line(lr.text, pattern_tones(*best, len), true, book, &lr.positions);
      const Verdict v = to_verdict(best_score);
      lr.verdict = combine(lr.verdict, v);
      total = combine(total, v);
    }
  } else if (strictness == Strictness::Strict) {
    std::size_t best_t = 0;
    std::tuple<int, int> best_key{1 << 20, 0};
    for (std::size_t t = 0; t < kTemplateCount; ++t) {
      const auto lines = template_lines(t, n);
      PatternScore s;
      for (std::size_t i = 0; i < n; ++i) {
        const auto ls = score_line(report.lines[i].text, pattern_tones(lines[i], len), false, book, nullptr);
        s.fails += ls.fails;
        s.unknowns += ls.unknowns;
      }
      if (pattern_tones(lines[0], len).back() == 'P') {
        const Verdict v = from_optional(rhyme.first_line);
        s.fails += v == Verdict::Fail ? 1 : 0;
        s.unknowns += v == Verdict::Unknown ? 1 : 0;
      }
      if (s.key() < best_key) {
        best_key = s.key();
        best_t = t;
      }
    }
    report.template_index = best_t;
    const auto lines = template_lines(best_t, n);
    for (std::size_t i = 0; i < n; ++i) {
      LineReport& lr = report.lines[i];
      lr.pattern = lines[i];
      const auto s = score_line(lr.text, pattern_tones(lines[i], len), false, book, &lr.positions);
      Verdict v = to_verdict(s);
      if (i == 0 && pattern_tones(lines[0], len).back() == 'P') {
        lr.rhyme_required = true;
        v = combine(v, from_optional(rhyme.first_line));
      }
      lr.verdict = combine(lr.verdict, v);
      total = combine(total, v);
    }
  }

  report.overall = total == Verdict::Pass   ? Overall::Pass
                   : total == Verdict::Fail ? Overall::Fail
                                            : Overall::Indeterminate;
  return report;
}

nlohmann::json to_json(const MeterReport& report) {
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& lr : report.lines) {
    nlohmann::json positions = nlohmann::json::array();
    for (const auto& p : lr.positions) {
      positions.push_back({{"char", to_utf8(p.ch)},
                           {"tone", tone_name(p.tone)},
                           {"slot", std::string(1, p.slot)},
                           {"verdict", verdict_name(p.verdict)}});
    }
    nlohmann::json line = {{"text", to_utf8(lr.text)},
                           {"positions", std::move(positions)},
                           {"rhyme_required", lr.rhyme_required},
                           {"verdict", verdict_name(lr.verdict)}};
    line["pattern"] = lr.pattern ? nlohmann::json(std::string(1, pattern_letter(*lr.pattern))) : nlohmann::json();
    line["rhymes"] = lr.rhymes ? nlohmann::json(*lr.rhymes) : nlohmann::json();
    lines.push_back(std::move(line));
  }
  nlohmann::json out = {{"genre", corpus::display_name(report.genre)},
                        {"strictness", strictness_name(report.strictness)},
                        {"rhyme_group", report.rhyme_group},
                        {"first_line_rhymes", report.first_line_rhymes},
                        {"shape_ok", report.shape_ok},
                        {"lines", std::move(lines)},
                        {"notes", report.notes},
                        {"overall", overall_name(report.overall)}};
  out["template"] = report.template_index ? nlohmann::json(*report.template_index) : nlohmann::json();
  return out;
}

}  // namespace guiyun::prosody
