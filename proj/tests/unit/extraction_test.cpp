#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "guiyun/error.h"
#include "guiyun/extraction.h"
#include "guiyun/text.h"
#include "support.h"
#include "toy_extraction.h"

namespace guiyun::extraction {
namespace {

using corpus::normalize;
using guiyun::testing::brute_force_key;
using guiyun::testing::brute_force_theme;
using guiyun::testing::kDocs;
using guiyun::testing::kDocTokens;
using guiyun::testing::kLexicon;
using guiyun::testing::kStopwords;
using guiyun::testing::toy_embeddings;

struct Toy {
  MaxMatchSegmenter segmenter{kLexicon};
  std::vector<corpus::NormalizedPoem> poems;
  IdfTable idf;

  Toy() {
    for (const char* d : kDocs) poems.push_back(normalize(d));
    idf = build_idf(poems, segmenter, kStopwords);
  }
};

TEST(Segmenter, MaxMatchAndConcatenation) {
  const MaxMatchSegmenter seg(kLexicon);
  const auto tokens = seg.segment(U"一双白鹭来烟际");
  EXPECT_EQ(tokens, (std::vector<std::u32string>{U"一", U"双", U"白鹭", U"来", U"烟", U"际"}));
  std::u32string joined;
  for (const auto& t : tokens) joined += t;
  EXPECT_EQ(joined, U"一双白鹭来烟际");
  EXPECT_TRUE(MaxMatchSegmenter().segment(U"").empty());
}

TEST(Segmenter, PrefersLongestMatch) {
  const std::vector<std::u32string> lex = {U"白", U"白鹭", U"白鹭洲"};
  EXPECT_EQ(MaxMatchSegmenter(lex).segment(U"白鹭洲白"), (std::vector<std::u32string>{U"白鹭洲", U"白"}));
}

TEST(ContentTokens, ToyDocumentsMatchHandSegmentation) {
  const Toy toy;
  for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(content_tokens(toy.poems[d], toy.segmenter, kStopwords), kDocTokens[d]);
}

TEST(Idf, ToyCorpusMatchesDocumentScan) {
  const Toy toy;
  EXPECT_EQ(toy.idf.doc_count(), 3u);
  std::map<std::u32string, std::size_t> df;
  for (const auto& doc : kDocTokens) {
    for (const auto& t : std::set<std::u32string>(doc.begin(), doc.end())) ++df[t];
  }
  EXPECT_EQ(toy.idf.table().size(), df.size());
  for (const auto& [t, n] : df) {
    EXPECT_EQ(toy.idf.df(t), n) << to_utf8(t);
    EXPECT_NEAR(toy.idf.idf(t), std::log(4.0 / (1.0 + static_cast<double>(n))) + 1, 1e-12);
  }
}

TEST(Idf, TokenInEveryDocumentHasIdfOne) {
  const Toy toy;
  EXPECT_EQ(toy.idf.df(U"青"), 3u);
  EXPECT_DOUBLE_EQ(toy.idf.idf(U"青"), 1.0);
}

TEST(Idf, UnseenToken) {
  const Toy toy;
  EXPECT_EQ(toy.idf.df(U"龘"), 0u);
  EXPECT_DOUBLE_EQ(toy.idf.idf(U"龘"), std::log(4.0) + 1);
}

TEST(Idf, EmptyCorpusRejected) {
  try {
    build_idf({}, MaxMatchSegmenter(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "empty_corpus");
  }
}

TEST(CountRules, RoundHalfUpWithFloorOne) {
  EXPECT_EQ(default_theme_count(28), 2u);
  EXPECT_EQ(default_key_count(28), 3u);
  EXPECT_EQ(default_theme_count(18), 2u);
  EXPECT_EQ(default_key_count(25), 3u);
  EXPECT_EQ(default_theme_count(20), 2u);
  EXPECT_EQ(default_key_count(20), 2u);
  EXPECT_EQ(default_theme_count(1), 1u);
  EXPECT_EQ(default_key_count(4), 1u);
}

TEST(ThemeWords, ToyRankingMatchesBruteForce) {
  const Toy toy;
  for (std::size_t d = 0; d < 3; ++d) {
    const auto want = brute_force_theme(d);
    const auto got = rank_theme_words(toy.poems[d], toy.idf, toy.segmenter, kStopwords);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(got[i].token, want[i].token) << d << ":" << i;
      EXPECT_NEAR(got[i].score, want[i].score, 1e-9);
      EXPECT_EQ(got[i].first_position, want[i].first);
    }
  }
}

TEST(ThemeWords, DefaultCountOn28Characters) {
  const Toy toy;
  ASSERT_EQ(toy.poems[0].char_count, 28u);
  const auto words = theme_words(toy.poems[0], toy.idf, toy.segmenter, kStopwords);
  // 青 scores 2 * 1; 花 wins the tie among the document-unique tokens.
  EXPECT_EQ(words, (std::vector<std::u32string>{U"青", U"花"}));
}

TEST(ThemeWords, AllStopwordsGivesEmpty) {
  const Toy toy;
  EXPECT_TRUE(theme_words(normalize("一自一，自一自。"), toy.idf, toy.segmenter, kStopwords).empty());
}

TEST(ThemeWords, FewerCandidatesThanRequested) {
  const Toy toy;
  EXPECT_EQ(theme_words(normalize("青青"), toy.idf, toy.segmenter, kStopwords, 5).size(), 1u);
}

TEST(KeyChars, ToyRankingMatchesBruteForce) {
  const auto emb = toy_embeddings();
  const auto poem = normalize(kDocs[0]);
  const auto want = brute_force_key(poem.joined(), emb, kStopwords);
  const auto got = rank_key_chars(poem, emb, kStopwords);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(got[i].unit, std::u32string(1, want[i].ch)) << i;
    EXPECT_NEAR(got[i].distance, want[i].dist, 1e-9);
  }
  std::vector<char32_t> top3 = {want[0].ch, want[1].ch, want[2].ch};
  EXPECT_EQ(key_chars(poem, emb, kStopwords), top3);
}

TEST(KeyChars, TieBrokenByFirstOccurrence) {
  const auto emb = toy_embeddings();
  const auto ranked = rank_key_chars(normalize(kDocs[0]), emb, kStopwords);
  const auto pos = [&](char32_t ch) {
    return std::find_if(ranked.begin(), ranked.end(), [&](const auto& r) { return r.unit[0] == ch; }) - ranked.begin();
  };
  EXPECT_EQ(pos(U'花') + 1, pos(U'烟'));
}

TEST(KeyChars, FiveCandidateSyntheticPoem) {
  EmbeddingTable emb(2);
  emb.set(U"甲", {0, 0});
  emb.set(U"乙", {4, 0});
  emb.set(U"丙", {0, 3});
  emb.set(U"丁", {1, 1});
  emb.set(U"戊", {-2, -2});
  const auto poem = normalize("甲乙丙丁戊");
  const auto want = brute_force_key(poem.joined(), emb, {});
  const auto got = key_chars(poem, emb, {}, 5);
  ASSERT_EQ(got.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(got[i], want[i].ch);
}

TEST(KeyChars, SingleCandidate) {
  EmbeddingTable emb(2);
  emb.set(U"青", {3, 4});
  const auto ranked = rank_key_chars(normalize("青草"), emb, {});
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_EQ(ranked[0].unit, U"青");
  EXPECT_EQ(ranked[0].distance, 0.0);
}

TEST(KeyChars, NoCoverageListsMissing) {
  EmbeddingTable emb(2);
  emb.set(U"月", {1, 1});
  try {
    key_chars(normalize("山水"), emb, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "no_coverage");
    EXPECT_NE(std::string(e.what()).find("山"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("水"), std::string::npos);
  }
}

TEST(KeyChars, ScaleInvariant) {
  const auto emb = toy_embeddings();
  EmbeddingTable scaled(2);
  for (const auto& k : std::u32string(U"杨柳花飞芜草青野塘烟凋零双白鹭来际点破遥山自一")) {
    const auto* v = emb.find(k);
    scaled.set(std::u32string(1, k), {(*v)[0] * 3.7, (*v)[1] * 3.7});
  }
  const auto poem = normalize(kDocs[0]);
  EXPECT_EQ(key_chars(poem, emb, kStopwords, 10), key_chars(poem, scaled, kStopwords, 10));
}

TEST(KeyChars, OutputsArePoemCharactersWithoutStopwords) {
  const auto& f = guiyun::testing::fixture();
  for (std::size_t i = 0; i < f.poems.size(); i += 37) {
    const auto& p = f.poems[i];
    const auto keys = key_chars(p, f.embeddings, f.stopwords);
    EXPECT_LE(keys.size(), default_key_count(p.char_count));
    for (char32_t ch : keys) {
      EXPECT_NE(p.joined().find(ch), std::u32string::npos);
      EXPECT_EQ(f.stopwords.count(std::u32string(1, ch)), 0u);
    }
    const auto words = theme_words(p, f.idf, f.segmenter, f.stopwords);
    EXPECT_LE(words.size(), default_theme_count(p.char_count));
    EXPECT_EQ(words, theme_words(p, f.idf, f.segmenter, f.stopwords));
  }
}

TEST(KeyWords, WordGranularity) {
  EmbeddingTable emb(2);
  emb.set(U"白鹭", {0, 0});
  emb.set(U"遥山", {2, 0});
  emb.set(U"青", {10, 0});
  const MaxMatchSegmenter seg(kLexicon);
  const auto words = key_words(normalize("白鹭遥山青"), emb, seg, {}, 2);
  EXPECT_EQ(words, (std::vector<std::u32string>{U"遥山", U"白鹭"}));
}

TEST(Embeddings, HeaderAndLines) {
  std::istringstream in("2 3\n东 0.5 1 -2\n西 1e-3 0 3.25\n");
  const auto t = EmbeddingTable::load(in);
  EXPECT_EQ(t.dim(), 3u);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(*t.find(U'西'), (std::vector<double>{1e-3, 0, 3.25}));
}

TEST(Embeddings, DimensionMismatchNamesLine) {
  std::istringstream in("2 3\n东 0.5 1 -2\n西 1 2\n");
  try {
    EmbeddingTable::load(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "embeddings");
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Embeddings, NonFiniteRejectedAndDuplicatesCounted) {
  std::istringstream bad("东 1 nan\n");
  EXPECT_THROW(EmbeddingTable::load(bad), Error);
  std::istringstream dup("东 1 2\n东 3 4\n");
  const auto t = EmbeddingTable::load(dup);
  EXPECT_EQ(t.duplicates(), 1u);
  EXPECT_EQ(*t.find(U'东'), (std::vector<double>{3, 4}));
}

TEST(Embeddings, HundredTokenFileReparses) {
  guiyun::testing::TempDir dir;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::map<std::u32string, std::vector<double>> want;
  std::ofstream out(dir / "v.txt");
  out << "100 4\n";
  out.precision(17);
  for (char32_t ch = U'一'; want.size() < 100; ++ch) {
    std::vector<double> v = {g(rng), g(rng), g(rng), g(rng)};
    out << to_utf8(ch);
    for (double x : v) out << ' ' << x;
    out << '\n';
    want[std::u32string(1, ch)] = v;
  }
  out.close();
  const auto t = EmbeddingTable::load_file(dir / "v.txt");
  ASSERT_EQ(t.size(), 100u);
  for (const auto& [k, v] : want) EXPECT_EQ(*t.find(k), v);
}

TEST(Stopwords, LoadSkipsBlanksAndComments) {
  std::istringstream in("# list\n之\n\n 乎 \n");
  const auto s = load_stopwords(in);
  EXPECT_EQ(s, (StopwordSet{U"之", U"乎"}));
}

}  // namespace
}  // namespace guiyun::extraction
