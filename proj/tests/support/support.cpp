#include "support.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "guiyun/error.h"
#include "guiyun/service.h"
#include "guiyun/text.h"

namespace guiyun::testing {

namespace fs = std::filesystem;
using generation::Distribution;
using generation::kEndOfPoem;
using generation::kLineBreak;
using generation::kStartOfPoem;

fs::path data_dir() { return GUIYUN_TEST_DATA_DIR; }

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "guiyun-test-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    const fs::path d = data_dir();
    x.book = prosody::RhymeBook::load_file(d / "rhyme_book.tsv");
    x.segmenter = extraction::MaxMatchSegmenter::load_file(d / "lexicon.txt");
    x.stopwords = extraction::load_stopwords_file(d / "stopwords.txt");
    x.embeddings = extraction::EmbeddingTable::load_file(d / "embeddings.txt");
    x.poems = service::load_poems(d / "corpus.csv");
    x.idf = extraction::build_idf(x.poems, x.segmenter, x.stopwords);
    std::vector<corpus::NormalizedPoem> clean;
    for (const auto& p : x.poems) {
      if (!p.has_gaps) clean.push_back(p);
    }
    x.lm = std::make_unique<generation::NGramModel>(generation::NGramModel::train(clean, 3));
    return x;
  }();
  return f;
}

prosody::RhymeBook toy_book() {
  std::istringstream in("东\t一东\t平\n青\t九青\t平\n月\t六月\t仄\n雪\t九屑\t仄\n");
  return prosody::RhymeBook::load(in, "toy");
}

TableModel TableModel::random_toy(std::mt19937_64& rng) {
  std::vector<char32_t> tokens(std::begin(kToyChars), std::end(kToyChars));
  tokens.push_back(kLineBreak);
  tokens.push_back(kEndOfPoem);
  std::sort(tokens.begin(), tokens.end());
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::map<char32_t, Distribution> rows;
  std::vector<char32_t> histories = tokens;
  histories.push_back(kStartOfPoem);
  for (char32_t h : histories) {
    Distribution row;
    double total = 0.0;
    for (char32_t t : tokens) {
      row.emplace_back(t, u(rng));
      total += row.back().second;
    }
    for (auto& [t, p] : row) p /= total;
    rows[h] = std::move(row);
  }
  return TableModel(std::move(tokens), std::move(rows));
}

Distribution TableModel::next_distribution(std::u32string_view context, const generation::PromptSpec&) const {
  const char32_t last = context.empty() ? kStartOfPoem : context.back();
  const auto it = rows_.find(last);
  if (it == rows_.end()) throw Error("lm", "no row for history");
  return it->second;
}

namespace {

double prob_of(const Distribution& d, char32_t ch) {
  const auto it = std::lower_bound(d.begin(), d.end(), ch, [](const auto& e, char32_t c) { return e.first < c; });
  return it != d.end() && it->first == ch ? it->second : 0.0;
}

struct Leaf {
  double log_prob;
  std::u32string text;
};

struct Enumerator {
  const generation::LanguageModel& lm;
  const generation::PromptSpec& prompt;
  const prosody::RhymeBook& book;
  std::size_t n_lines;
  std::size_t length;
  std::vector<std::string> tones;  // per line, 'P' or 'Z' per position
  std::vector<bool> must_rhyme;    // per line
  std::vector<Leaf>& leaves;
  char32_t anchor = 0;  // first end character that must rhyme

  void run(std::u32string& text, std::size_t line, std::size_t pos, double logp) {
    if (line == n_lines) {
      leaves.push_back({logp + std::log(prob_of(lm.next_distribution(text, prompt), kEndOfPoem)), text});
      return;
    }
    if (pos == 0) {
      text.push_back(kLineBreak);
      logp += std::log(prob_of(lm.next_distribution(text.substr(0, text.size() - 1), prompt), kLineBreak));
    }
    const Distribution dist = lm.next_distribution(text, prompt);
    for (char32_t ch : kToyChars) {
      const bool ping = book.has_tone(ch, prosody::Tone::Ping);
      if ((tones[line][pos] == 'P') != ping) continue;
      const bool rhyme_end = pos + 1 == length && must_rhyme[line];
      if (rhyme_end && anchor != 0 && !shares_group(ch, anchor)) continue;
      const char32_t saved = anchor;
      if (rhyme_end && anchor == 0) anchor = ch;
      text.push_back(ch);
      const std::size_t next_pos = pos + 1 == length ? 0 : pos + 1;
      run(text, pos + 1 == length ? line + 1 : line, next_pos, logp + std::log(prob_of(dist, ch)));
      text.pop_back();
      anchor = saved;
    }
    if (pos == 0) text.pop_back();
  }

  bool shares_group(char32_t a, char32_t b) const {
    for (const auto& ra : book.readings(a)) {
      if (book.in_group(b, ra.group)) return true;
    }
    return false;
  }
};

bool passes_strict(const std::u32string& text, corpus::Genre genre, const prosody::RhymeBook& book) {
  std::vector<std::u32string> lines(1);
  for (char32_t ch : text) {
    if (ch == kLineBreak) lines.emplace_back(); else lines.back().push_back(ch);
  }
  const auto poem = corpus::from_lines(std::move(lines));
  return prosody::validate(poem, genre, book, prosody::Strictness::Strict).overall == prosody::Overall::Pass;
}

}  // namespace

OracleResult exhaustive_best(const generation::LanguageModel& lm, const generation::PromptSpec& prompt,
                             const prosody::RhymeBook& book) {
  const std::size_t n = corpus::line_count(prompt.genre);
  const std::size_t len = corpus::line_length(prompt.genre);
  std::vector<Leaf> leaves;
  for (std::size_t t = 0; t < prosody::kTemplateCount; ++t) {
    Enumerator e{lm, prompt, book, n, len, {}, std::vector<bool>(n, false), leaves};
    for (auto p : prosody::template_lines(t, n)) e.tones.push_back(prosody::pattern_tones(p, len));
    // Necessary condition only; validate() still decides every candidate.
    for (std::size_t i : prosody::rhyme_lines(prompt.genre)) e.must_rhyme[i] = true;
    if (e.tones[0].back() == 'P') e.anchor = prompt.first_line.back();
    std::u32string text = prompt.first_line;
    e.run(text, 1, 0, 0.0);
  }
  // Most probable first, so the first candidate that validates is the
  // maximum; equal scores are all examined for the smallest text.
  std::sort(leaves.begin(), leaves.end(), [](const Leaf& a, const Leaf& b) {
    return a.log_prob != b.log_prob ? a.log_prob > b.log_prob : a.text < b.text;
  });
  for (const Leaf& leaf : leaves) {
    if (passes_strict(leaf.text, prompt.genre, book)) return {leaf.text, leaf.log_prob, leaves.size()};
  }
  throw Error("infeasible", "oracle found no satisfying poem");
}

generation::PromptSpec random_prompt(std::mt19937_64& rng) {
  static const std::u32string alphabet = U"山水风月花鸟云天江湖春秋东青零中白鹭烟柳";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1), small(0, 3), word_len(1, 3);
  auto text = [&](std::size_t n) {
    std::u32string s;
    while (s.size() < n) s.push_back(alphabet[pick(rng)]);
    return s;
  };
  generation::PromptSpec spec;
  spec.genre = corpus::kRegulatedGenres[small(rng)];
  const std::size_t len = corpus::line_length(spec.genre);
  for (std::size_t i = small(rng); i > 0; --i) spec.theme_words.push_back(text(word_len(rng)));
  for (std::size_t i = small(rng); i > 0; --i) spec.key_chars.push_back(alphabet[pick(rng)]);
  if (rng() % 2 == 0) {
    spec.mode = generation::Mode::Fs2Text;
    spec.first_line = text(len);
  } else {
    spec.mode = generation::Mode::Rr2Text;
    generation::RhymeConstraint r;
    r.group_id = to_utf8(text(word_len(rng)));
    r.lines = prosody::rhyme_lines(spec.genre);
    if (rng() % 2 == 0) r.lines.insert(r.lines.begin(), 0);
    for (std::size_t i = 0; i < r.lines.size(); ++i) r.end_chars.push_back(alphabet[pick(rng)]);
    r.forbidden_first_line = text(len);
    spec.rhyme = std::move(r);
  }
  return spec;
}

std::u32string context_text(const corpus::NormalizedPoem& poem) {
  std::u32string out;
  for (std::size_t i = 0; i < poem.lines.size(); ++i) {
    if (i) out.push_back(kLineBreak);
    out += poem.lines[i];
  }
  return out;
}

double brute_force_pvalue(unsigned n, unsigned k) {
  std::vector<unsigned long long> c(n + 1, 1);
  for (unsigned i = 1; i <= n; ++i) {
    for (unsigned j = i - 1; j >= 1; --j) c[j] += c[j - 1];
  }
  unsigned long long sum = 0;
  for (unsigned i = 0; i <= n; ++i) {
    if (c[i] <= c[k]) sum += c[i];
  }
  return std::ldexp(static_cast<double>(sum), -static_cast<int>(n));
}

}  // namespace guiyun::testing
