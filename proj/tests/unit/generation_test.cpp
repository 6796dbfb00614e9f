#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "guiyun/error.h"
#include "guiyun/generation.h"
#include "guiyun/service.h"
#include "guiyun/text.h"
#include "support.h"

namespace guiyun::generation {
namespace {

using corpus::normalize;
using guiyun::testing::fixture;

const std::vector<NormalizedPoem>& style_poems() {
  static const auto poems = service::load_poems(guiyun::testing::data_dir() / "style_amorous.csv");
  return poems;
}

const StyleLexicon& amorous() {
  static const StyleLexicon s = build_style_lexicon("amorous", style_poems(), fixture().context());
  return s;
}

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

TEST(StyleLexicon, SinglePoemMatchesItsExtraction) {
  const auto& f = fixture();
  const auto& poem = style_poems().front();
  const auto style = build_style_lexicon("one", std::span(&poem, 1), f.context());
  const auto theme = extraction::theme_words(poem, f.idf, f.segmenter, f.stopwords);
  const auto keys = extraction::key_chars(poem, f.embeddings, f.stopwords);
  EXPECT_EQ(style.theme_words, std::set<std::u32string>(theme.begin(), theme.end()));
  EXPECT_EQ(style.key_chars, std::set<char32_t>(keys.begin(), keys.end()));
  EXPECT_EQ(style.style_name, "one");
}

TEST(StyleLexicon, IsTheUnionOverPoems) {
  const auto& f = fixture();
  const std::vector<NormalizedPoem> two(style_poems().begin(), style_poems().begin() + 2);
  const auto style = build_style_lexicon("two", two, f.context());
  std::set<std::u32string> theme;
  std::set<char32_t> keys;
  for (const auto& p : two) {
    for (auto& w : extraction::theme_words(p, f.idf, f.segmenter, f.stopwords)) theme.insert(w);
    for (char32_t ch : extraction::key_chars(p, f.embeddings, f.stopwords)) keys.insert(ch);
  }
  EXPECT_EQ(style.theme_words, theme);
  EXPECT_EQ(style.key_chars, keys);
  EXPECT_GT(theme.size(), 2u);
}

TEST(StyleLexicon, EmptyCorpusIsRejected) {
  EXPECT_EQ(error_code([] { build_style_lexicon("none", {}, fixture().context()); }), "empty_style");
}

TEST(StyleLexicon, RejectsAndNamesOutsideTokens) {
  const auto& style = amorous();
  ASSERT_FALSE(style.theme_words.count(U"边塞"));
  ASSERT_FALSE(style.key_chars.count(U'剑'));
  const std::vector<std::u32string> theme = {*style.theme_words.begin(), U"边塞"};
  const std::vector<char32_t> keys = {U'剑', *style.key_chars.begin()};
  try {
    check_style(style, theme, keys);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "style_violation");
    EXPECT_EQ(std::string(e.what()), "not in style lexicon 'amorous': 边塞, 剑");
  }
}

TEST(StyleLexicon, AcceptsEveryLexiconToken) {
  const auto& style = amorous();
  const std::vector<std::u32string> theme(style.theme_words.begin(), style.theme_words.end());
  const std::vector<char32_t> keys(style.key_chars.begin(), style.key_chars.end());
  EXPECT_NO_THROW(check_style(style, theme, keys));
  EXPECT_NO_THROW(check_style(style, {}, {}));
}

TEST(StyleLexicon, JsonAndFileRoundTrip) {
  const auto& style = amorous();
  EXPECT_EQ(style_from_json(to_json(style)), style);
  guiyun::testing::TempDir dir;
  save_style(style, dir / "s.json");
  EXPECT_EQ(load_style(dir / "s.json"), style);
  EXPECT_EQ(error_code([] { style_from_json(nlohmann::json::parse(R"({"style":"x","theme_words":["a"],"key_chars":["ab"]})")); }),
            "invalid_style");
  EXPECT_EQ(error_code([] { style_from_json(nlohmann::json::parse(R"({"style":"x"})")); }), "invalid_style");
  EXPECT_EQ(error_code([] { style_from_json(nlohmann::json::parse(R"({"style":"x","theme_words":[],"key_chars":["a"]})")); }),
            "empty_style");
  EXPECT_EQ(error_code([&] { load_style(dir / "missing.json"); }), "io");
}

TEST(Generate, StyleViolationStopsBeforeDecoding) {
  const auto& f = fixture();
  EXPECT_EQ(error_code([&] {
              generate_fs2text(U"杨柳花飞芜草青", Genre::Qijue, {U"边塞"}, {}, &amorous(), *f.lm, f.book, {});
            }),
            "style_violation");
}

TEST(Generate, Fs2TextRecordsProvenance) {
  const auto& f = fixture();
  DecodeOptions o;
  o.seed = 11;
  const auto g = generate_fs2text(U"杨柳花飞芜草青", Genre::Qijue, {U"白鹭"}, {U'烟', U'一', U'山'}, nullptr, *f.lm,
                                  f.book, o);
  EXPECT_EQ(serialize(g.provenance.prompt), "七言绝句 白鹭 烟一山 杨柳花飞芜草青");
  EXPECT_EQ(g.provenance.seed, 11u);
  EXPECT_EQ(g.provenance.requested, prosody::Strictness::Relaxed);
  EXPECT_EQ(g.provenance.lm_id, f.lm->id());
  EXPECT_EQ(g.report.strictness, g.provenance.strictness);
  EXPECT_EQ(g.report.overall, prosody::Overall::Pass);

  const auto doc = to_json(g);
  for (const char* key : {"poem", "lines", "genre", "prompt", "seed", "strictness", "requested_strictness",
                          "beam_width", "lm_id", "notes", "log_prob", "meter"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
  EXPECT_EQ(doc["lines"][0], "杨柳花飞芜草青");
  EXPECT_EQ(doc["poem"], corpus::render(g.poem));
}

TEST(Generate, Rr2TextOnDawnWindPoem) {
  const auto& f = fixture();
  const auto g = generate_rr2text(normalize(guiyun::testing::kDawnWindPoem), f.book, f.context(), *f.lm, {});
  EXPECT_EQ(g.provenance.prompt.mode, Mode::Rr2Text);
  EXPECT_EQ(g.poem.lines[3].back(), U'中');
  EXPECT_EQ(g.report.overall, prosody::Overall::Pass);
}

TEST(TrainingPairs, OnePerRegulatedGapFreePoem) {
  const auto& f = fixture();
  std::size_t expected = 0;
  for (const auto& p : f.poems) {
    if (!p.has_gaps && corpus::classify_genre(p) != Genre::Other) ++expected;
  }
  const auto pairs = assemble_training_pairs(f.poems, f.context(), 9);
  ASSERT_EQ(pairs.size(), expected);
  std::size_t i = 0;
  for (const auto& p : f.poems) {
    if (p.has_gaps || corpus::classify_genre(p) == Genre::Other) continue;
    const auto spec = parse_prompt(pairs[i].source);
    EXPECT_EQ(spec.mode, Mode::Fs2Text);
    EXPECT_EQ(spec.first_line, p.lines.front());
    const auto theme = extraction::theme_words(p, f.idf, f.segmenter, f.stopwords);
    ASSERT_LE(spec.theme_words.size(), theme.size());
    EXPECT_TRUE(std::equal(spec.theme_words.begin(), spec.theme_words.end(), theme.begin()));
    EXPECT_EQ(pairs[i].target, corpus::render(p));
    ++i;
  }
}

TEST(TrainingPairs, SeededSubsetSizes) {
  const auto& f = fixture();
  const std::vector<NormalizedPoem> some(f.poems.begin(), f.poems.begin() + 50);
  const auto a = assemble_training_pairs(some, f.context(), 1);
  const auto b = assemble_training_pairs(some, f.context(), 1);
  const auto c = assemble_training_pairs(some, f.context(), 2);
  ASSERT_EQ(a.size(), b.size());
  std::size_t differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].source, b[i].source);
    differ += a[i].source != c[i].source;
  }
  EXPECT_GT(differ, 0u);
}

}  // namespace
}  // namespace guiyun::generation
