#include "guiyun/decoder.h"

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <unordered_map>

#include "guiyun/error.h"
#include "guiyun/text.h"

namespace guiyun::generation {

namespace {

using prosody::LinePattern;
using prosody::RhymeBook;
using prosody::Tone;

// Probability assigned to a forced character the model never produces.
constexpr double kForcedFloor = 1e-12;

using GroupSet = std::vector<std::uint16_t>;  // sorted interned group ids

struct CharInfo {
  bool known = false;
  bool ping = false;
  bool ze = false;
  GroupSet groups;
};

GroupSet intersect(const GroupSet& a, const GroupSet& b) {
  GroupSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool disjoint(const GroupSet& a, const GroupSet& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return false;
    if (*i < *j) ++i; else ++j;
  }
  return true;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t text_hash(std::uint64_t seed, std::u32string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ splitmix(seed);
  for (char32_t ch : text) {
    h ^= static_cast<std::uint64_t>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

double gumbel(std::uint64_t h, char32_t ch) {
  const std::uint64_t x = splitmix(h ^ (static_cast<std::uint64_t>(ch) * 0xd6e8feb86659fd93ULL));
  const double u = (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
  return -std::log(-std::log(u));
}

double prob_of(const Distribution& dist, char32_t ch) {
  const auto it = std::lower_bound(dist.begin(), dist.end(), std::pair<char32_t, double>{ch, -1.0});
  return it != dist.end() && it->first == ch ? it->second : 0.0;
}

struct State {
  std::u32string text;
  std::size_t line = 0;
  std::size_t pos = 0;  // next position to fill in `line`
  std::uint8_t mask = 0;
  bool constrained = false;
  GroupSet groups;
  char32_t first_end = 0;
  bool pending_break = false;
  bool complete = false;
  double logp = 0.0;
  double key = 0.0;
};

struct Step {
  std::uint8_t mask = 0;
  std::optional<GroupSet> groups;
};

struct Candidate {
  std::size_t parent;
  char32_t ch;
  double logp;
  double key;
  Step step;
};

class Search {
 public:
  Search(const LanguageModel& lm, const PromptSpec& prompt, const RhymeBook& book, const DecodeOptions& options,
         Strictness level)
      : lm_(lm), prompt_(prompt), book_(book), options_(options), level_(level),
        n_(corpus::line_count(prompt.genre)), len_(corpus::line_length(prompt.genre)),
        rr_(prompt.mode == Mode::Rr2Text) {
    required_.assign(n_, false);
    for (std::size_t i : prosody::rhyme_lines(prompt.genre)) required_[i] = true;
    forced_.assign(n_, 0);
    if (rr_) {
      const auto& r = *prompt.rhyme;
      for (std::size_t k = 0; k < r.lines.size(); ++k) forced_[r.lines[k]] = r.end_chars[k];
      group_id_ = intern(r.group_id);
      for (char32_t ch : r.end_chars) {
        const auto& ci = info(ch);
        if (!std::binary_search(ci.groups.begin(), ci.groups.end(), group_id_)) {
          throw Error("invalid_prompt", "rhyme character " + to_utf8(ch) + " is not in group " + r.group_id);
        }
      }
    }
    for (LinePattern p : prosody::kAllPatterns) relaxed_tones_[static_cast<int>(p)] = prosody::pattern_tones(p, len_);
    for (std::size_t t = 0; t < prosody::kTemplateCount; ++t) {
      const auto lines = prosody::template_lines(t, n_);
      for (LinePattern p : lines) strict_tones_[t].push_back(prosody::pattern_tones(p, len_));
      if (strict_tones_[t].front().back() == 'P') rhyming_first_ |= static_cast<std::uint8_t>(1u << t);
    }
  }

  std::optional<DecodeResult> run() {
    auto init = initial_state();
    if (!init) return std::nullopt;
    std::vector<State> beam{std::move(*init)};

    while (!beam.front().complete) {
      beam = expand(beam);
      if (beam.empty()) return std::nullopt;
    }
    return finish(beam);
  }

 private:
  std::uint16_t intern(const std::string& group) {
    const auto [it, inserted] = group_ids_.try_emplace(group, static_cast<std::uint16_t>(group_ids_.size()));
    return it->second;
  }

  const CharInfo& info(char32_t ch) {
    const auto it = info_.find(ch);
    if (it != info_.end()) return it->second;
    CharInfo ci;
    for (const auto& r : book_.readings(ch)) {
      ci.known = true;
      ci.ping |= r.tone == Tone::Ping;
      ci.ze |= r.tone == Tone::Ze;
      ci.groups.push_back(intern(r.group));
    }
    std::sort(ci.groups.begin(), ci.groups.end());
    ci.groups.erase(std::unique(ci.groups.begin(), ci.groups.end()), ci.groups.end());
    return info_.emplace(ch, std::move(ci)).first->second;
  }

  std::uint8_t line_mask(std::size_t line) const {
    if (level_ == Strictness::Relaxed) {
      std::uint8_t m = 0;
      for (LinePattern p : prosody::admissible_patterns(prompt_.genre, line)) m |= 1u << static_cast<int>(p);
      return m;
    }
    return level_ == Strictness::Strict ? 0x0F : 0;
  }

  bool checks_rhyme() const { return level_ != Strictness::Off; }

  // Whether `ch` may fill the next position of `s`; on success `step`
  // holds the updated metrical state.
  bool try_char(const State& s, char32_t ch, Step& step) {
    if (ch == kLineBreak || ch == kEndOfPoem || ch == kStartOfPoem || ch == kGapChar || is_space(ch) ||
        is_punctuation(ch)) {
      return false;
    }
    const bool last = s.pos + 1 == len_;
    if (rr_ && last && forced_[s.line] != 0) {
      if (options_.same_group_only) {
        const auto& g = info(ch).groups;
        if (!std::binary_search(g.begin(), g.end(), group_id_)) return false;
      } else if (ch != forced_[s.line]) {
        return false;
      }
    }
    if (rr_ && last && s.line == 0) {
      const auto& forbidden = prompt_.rhyme->forbidden_first_line;
      if (forbidden.compare(0, len_ - 1, s.text) == 0 && ch == forbidden.back()) return false;
    }

    const CharInfo& ci = info(ch);
    step.mask = s.mask;
    step.groups.reset();
    const bool checked = level_ == Strictness::Strict ||
                         (level_ == Strictness::Relaxed && !prosody::is_free_position(s.pos, len_));
    if (checked) {
      if (!ci.known) return false;
      std::uint8_t m = 0;
      for (int b = 0; b < 4; ++b) {
        if (!(s.mask & (1u << b))) continue;
        const char want = level_ == Strictness::Strict ? strict_tones_[b][s.line][s.pos] : relaxed_tones_[b][s.pos];
        if ((want == 'P' && ci.ping) || (want == 'Z' && ci.ze)) m |= 1u << b;
      }
      if (!m) return false;
      step.mask = m;
    }

    if (last && checks_rhyme()) {
      if (required_[s.line]) {
        if (!ci.known) return false;
        GroupSet g = s.constrained ? intersect(s.groups, ci.groups) : ci.groups;
        if (g.empty()) return false;
        step.groups = std::move(g);
      }
      if (level_ == Strictness::Strict) {
        const GroupSet* current = step.groups ? &*step.groups : (s.constrained ? &s.groups : nullptr);
        if (current) {
          const GroupSet& first = s.line == 0 ? ci.groups : info(s.first_end).groups;
          if (disjoint(first, *current)) step.mask &= static_cast<std::uint8_t>(~rhyming_first_);
          if (!step.mask) return false;
        }
      }
    }
    return true;
  }

  void apply(State& s, char32_t ch, Step&& step) {
    s.text.push_back(ch);
    s.mask = step.mask;
    if (step.groups) {
      s.groups = std::move(*step.groups);
      s.constrained = true;
    }
    if (s.line == 0 && s.pos + 1 == len_) s.first_end = ch;
    if (++s.pos == len_) {
      if (s.line + 1 == n_) {
        s.complete = true;
      } else {
        ++s.line;
        s.pos = 0;
        s.pending_break = true;
        if (level_ == Strictness::Relaxed) s.mask = line_mask(s.line);
      }
    }
  }

  std::optional<State> initial_state() {
    State s;
    s.mask = line_mask(0);
    if (rr_ && checks_rhyme()) {
      s.constrained = true;
      s.groups = {group_id_};
    }
    if (prompt_.mode == Mode::Fs2Text) {
      for (char32_t ch : prompt_.first_line) {
        Step step;
        if (!try_char(s, ch, step)) return std::nullopt;
        apply(s, ch, std::move(step));
      }
      const CharInfo& end = info(s.first_end);
      if (checks_rhyme() && end.known && end.ping && !end.ze) {
        GroupSet g = s.constrained ? intersect(s.groups, end.groups) : end.groups;
        if (g.empty()) return std::nullopt;
        s.groups = std::move(g);
        s.constrained = true;
      }
    }
    return s;
  }

  const LanguageModel& lm_;
  const PromptSpec& prompt_;
  const RhymeBook& book_;
  const DecodeOptions& options_;
  Strictness level_;
  std::size_t n_;
  std::size_t len_;
  bool rr_;
  std::vector<bool> required_;
  std::vector<char32_t> forced_;
  std::uint16_t group_id_ = 0;
  std::array<std::string, 4> relaxed_tones_;
  std::array<std::vector<std::string>, prosody::kTemplateCount> strict_tones_;
  std::uint8_t rhyming_first_ = 0;
  std::unordered_map<std::string, std::uint16_t> group_ids_;
  std::unordered_map<char32_t, CharInfo> info_;

  double step_noise(std::uint64_t h, char32_t ch) const {
    return options_.noise == 0.0 ? 0.0 : options_.noise * gumbel(h, ch);
  }

  std::vector<State> expand(std::vector<State>& beam) {
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < beam.size(); ++i) {
      State& s = beam[i];
      if (s.pending_break) {
        const double p = prob_of(lm_.next_distribution(s.text, prompt_), kLineBreak);
        const double lp = std::log(std::max(p, kForcedFloor));
        s.logp += lp;
        s.key += lp;
        s.text.push_back(kLineBreak);
        s.pending_break = false;
      }
      const Distribution dist = lm_.next_distribution(s.text, prompt_);
      const std::uint64_t h = text_hash(options_.seed, s.text);
      auto consider = [&](char32_t ch, double p) {
        Step step;
        if (!try_char(s, ch, step)) return;
        const double lp = std::log(p);
        cands.push_back({i, ch, s.logp + lp, s.key + lp + step_noise(h, ch), std::move(step)});
      };
      for (const auto& [ch, p] : dist) {
        if (p > 0.0) consider(ch, p);
      }
      // A forced rhyme character keeps a floor probability when the model
      // cannot produce it.
      if (rr_ && !options_.same_group_only && s.pos + 1 == len_ && forced_[s.line] != 0 &&
          prob_of(dist, forced_[s.line]) == 0.0) {
        consider(forced_[s.line], kForcedFloor);
      }
    }

    const auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.key != b.key) return a.key > b.key;
      const auto& ta = beam[a.parent].text;
      const auto& tb = beam[b.parent].text;
      if (ta != tb) return ta < tb;
      return a.ch < b.ch;
    };
    const std::size_t keep = std::min(cands.size(), options_.beam_width);
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), better);

    std::vector<State> next;
    next.reserve(keep);
    for (std::size_t k = 0; k < keep; ++k) {
      Candidate& c = cands[k];
      State s = beam[c.parent];
      s.logp = c.logp;
      s.key = c.key;
      apply(s, c.ch, std::move(c.step));
      next.push_back(std::move(s));
    }
    return next;
  }

  std::optional<DecodeResult> finish(std::vector<State>& beam) {
    std::optional<std::size_t> best;
    std::vector<NormalizedPoem> poems(beam.size());
    for (std::size_t i = 0; i < beam.size(); ++i) {
      State& s = beam[i];
      const double p = prob_of(lm_.next_distribution(s.text, prompt_), kEndOfPoem);
      const double lp = std::log(std::max(p, kForcedFloor));
      s.logp += lp;
      s.key += lp;

      std::vector<std::u32string> lines(1);
      for (char32_t ch : s.text) {
        if (ch == kLineBreak) lines.emplace_back(); else lines.back().push_back(ch);
      }
      poems[i] = corpus::from_lines(std::move(lines));
      if (level_ != Strictness::Off &&
          prosody::validate(poems[i], prompt_.genre, book_, level_).overall != prosody::Overall::Pass) {
        continue;
      }
      if (!best || s.key > beam[*best].key || (s.key == beam[*best].key && s.text < beam[*best].text)) best = i;
    }
    if (!best) return std::nullopt;
    DecodeResult out;
    out.poem = std::move(poems[*best]);
    out.strictness_used = level_;
    out.log_prob = beam[*best].logp;
    return out;
  }
};

}  // namespace

DecodeResult constrained_decode(const LanguageModel& lm, const PromptSpec& prompt, const RhymeBook& book,
                                const DecodeOptions& options) {
  check_prompt(prompt);
  if (options.beam_width < 1) throw Error("invalid_options", "beam width must be at least 1");
  if (!(options.boost > 0.0) || !std::isfinite(options.boost)) throw Error("invalid_options", "boost must be positive");
  if (!(options.noise >= 0.0) || !std::isfinite(options.noise)) throw Error("invalid_options", "noise must be >= 0");

  std::optional<BoostedModel> boosted;
  if (options.boost != 1.0 && !conditioning_chars(prompt).empty()) boosted.emplace(lm, options.boost);
  const LanguageModel& model = boosted ? static_cast<const LanguageModel&>(*boosted) : lm;

  std::vector<std::string> notes;
  Strictness level = options.strictness;
  for (int attempt = 0;; ++attempt) {
    Search search(model, prompt, book, options, level);
    if (auto result = search.run()) {
      result->notes = std::move(notes);
      return std::move(*result);
    }
    if (level <= Strictness::RhymeOnly || attempt >= options.max_retries) {
      throw Error("infeasible", "infeasible constraints");
    }
    const Strictness lower = prosody::relax(level);
    notes.push_back("beam exhausted at " + std::string(prosody::strictness_name(level)) + "; relaxed to " +
                    std::string(prosody::strictness_name(lower)));
    level = lower;
  }
}

}  // namespace guiyun::generation
