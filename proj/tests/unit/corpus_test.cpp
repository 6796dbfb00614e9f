#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "guiyun/corpus.h"
#include "guiyun/error.h"
#include "guiyun/text.h"
#include "support.h"

namespace guiyun::corpus {
namespace {

using guiyun::testing::kReunionPoem;
using guiyun::testing::kEgretPoem;
using guiyun::testing::kFarewellPoem;

bool same_fields(const PoemRecord& a, const PoemRecord& b) {
  return a.title == b.title && a.dynasty == b.dynasty && a.author == b.author && a.content == b.content;
}

TEST(ParseCorpus, StorageExampleRow) {
  const auto r = parse_corpus_text(std::string("失题,当代,杜随,") + kReunionPoem + "\n");
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_TRUE(r.errors.empty());
  EXPECT_FALSE(r.had_header);
  EXPECT_EQ(r.records[0].title, "失题");
  EXPECT_EQ(r.records[0].dynasty, "当代");
  EXPECT_EQ(r.records[0].author, "杜随");
  EXPECT_EQ(r.records[0].content, kReunionPoem);
  EXPECT_EQ(r.records[0].source_id, "corpus:1");
}

TEST(ParseCorpus, EmptyStream) {
  const auto r = parse_corpus_text("");
  EXPECT_TRUE(r.records.empty());
  EXPECT_TRUE(r.errors.empty());
}

TEST(ParseCorpus, HeaderDetectedAndMalformedRowsCollected) {
  const std::string text =
      "title,dynasty,author,content\n"
      "a,b,c,山高月小。\n"
      "only,three,fields\n"
      "x,y,z,\"unterminated\n";
  const auto r = parse_corpus_text(text, "t");
  EXPECT_TRUE(r.had_header);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].source_id, "t:2");
  ASSERT_EQ(r.errors.size(), 2u);
  EXPECT_EQ(r.errors[0].record, 3u);
  EXPECT_EQ(r.errors[1].record, 4u);
}

TEST(ParseCorpus, InvalidUtf8IsFatalWithOffset) {
  try {
    parse_corpus_text("a,b,c,\xE4\xB8\n");
    FAIL();
  } catch (const Utf8Error& e) {
    EXPECT_EQ(e.offset(), 6u);
  }
}

TEST(ParseCorpus, ThreeRowRoundTrip) {
  const std::vector<PoemRecord> rows = {
      {"失题", "当代", "杜随", kReunionPoem, ""},
      {"白鹭, 其一", "", "佚名", kEgretPoem, ""},
      {"引\"号\"", "唐", "", "山高月小，\n水落石出。", ""},
  };
  std::ostringstream out;
  write_corpus(out, rows);
  const auto back = parse_corpus_text(out.str());
  ASSERT_EQ(back.records.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(same_fields(rows[i], back.records[i])) << i;
}

TEST(ParseCorpus, RandomizedRoundTrip) {
  std::mt19937_64 rng(11);
  const std::u32string alphabet = U"山月风花,\"\n 。，青东ab";
  auto random_text = [&](std::size_t min_len) {
    std::uniform_int_distribution<std::size_t> len(min_len, 12), pick(0, alphabet.size() - 1);
    std::u32string s;
    for (std::size_t n = len(rng); s.size() < n;) s.push_back(alphabet[pick(rng)]);
    return to_utf8(s);
  };
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PoemRecord> rows;
    for (int i = 0; i < 5; ++i) rows.push_back({random_text(0), random_text(0), random_text(0), "月" + random_text(1), ""});
    std::ostringstream out;
    write_corpus(out, rows, trial % 2 == 0);
    const auto back = parse_corpus_text(out.str());
    ASSERT_EQ(back.records.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_TRUE(same_fields(rows[i], back.records[i]));
  }
}

TEST(Normalize, StorageExample) {
  const auto p = normalize(kReunionPoem);
  EXPECT_EQ(p.lines.size(), 4u);
  EXPECT_EQ(p.line_lengths, (std::vector<std::size_t>{5, 5, 5, 5}));
  EXPECT_EQ(p.char_count, 20u);
  EXPECT_FALSE(p.has_gaps);
  EXPECT_EQ(p.lines[3], U"万古各参商");
}

TEST(Normalize, GapPlaceholder) {
  const auto p = normalize("山中?日落。");
  EXPECT_EQ(p.lines.size(), 1u);
  EXPECT_TRUE(p.has_gaps);
}

TEST(Normalize, EgretPoem) {
  const auto p = normalize(kEgretPoem);
  EXPECT_EQ(p.lines.size(), 4u);
  EXPECT_EQ(p.char_count, 28u);
  EXPECT_EQ(p.lines[0], U"杨柳花飞芜草青");
}

TEST(Normalize, PunctuationOnlyIsEmptyPoem) {
  try {
    normalize("，。 ！");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "empty_poem");
  }
}

TEST(Normalize, ReconstructsContentExactly) {
  for (const char* text : {kReunionPoem, kEgretPoem, kFarewellPoem, "  “山”中?日落……\n水 流。", "a,b;c"}) {
    const auto p = normalize(text);
    EXPECT_EQ(to_utf8(p.reconstruct()), text);
    std::size_t sum = 0;
    for (auto l : p.line_lengths) sum += l;
    EXPECT_EQ(sum, p.char_count);
    for (const auto& line : p.lines) {
      EXPECT_FALSE(line.empty());
      for (char32_t ch : line) EXPECT_FALSE(is_punctuation(ch));
    }
  }
}

TEST(Normalize, FromLinesPunctuates) {
  const auto p = from_lines({U"白日依山尽", U"黄河入海流"});
  EXPECT_EQ(render(p), "白日依山尽，黄河入海流。");
  EXPECT_EQ(p.char_count, 10u);
}

TEST(ClassifyGenre, Shapes) {
  EXPECT_EQ(classify_genre(normalize(kReunionPoem)), Genre::Wujue);
  EXPECT_EQ(classify_genre(normalize(kEgretPoem)), Genre::Qijue);
  EXPECT_EQ(classify_genre(normalize(kFarewellPoem)), Genre::Qilv);
  EXPECT_EQ(classify_genre(from_lines(std::vector<std::u32string>(8, U"一二三四五"))), Genre::Wulv);
  EXPECT_EQ(classify_genre(normalize("山高月小，水落石出。清风徐来。")), Genre::Other);
  EXPECT_EQ(classify_genre(normalize("一二三四五，一二三四五六七。一二三四五，一二三四五。")), Genre::Other);
}

TEST(ClassifyGenre, InvariantUnderPermutationWithinLines) {
  std::mt19937_64 rng(3);
  for (const char* text : {kReunionPoem, kEgretPoem, kFarewellPoem}) {
    const auto p = normalize(text);
    auto lines = p.lines;
    for (auto& l : lines) std::shuffle(l.begin(), l.end(), rng);
    EXPECT_EQ(classify_genre(from_lines(lines)), classify_genre(p));
  }
}

TEST(GenreNames, RoundTrip) {
  for (Genre g : {Genre::Wujue, Genre::Qijue, Genre::Wulv, Genre::Qilv, Genre::Other}) {
    EXPECT_EQ(parse_genre(display_name(g)), g);
    EXPECT_EQ(parse_genre(genre_id(g)), g);
  }
  EXPECT_EQ(display_name(Genre::Qijue), "七言绝句");
  EXPECT_FALSE(parse_genre("sonnet").has_value());
}

TEST(Deduplicate, PunctuationSpacingVariant) {
  const std::vector<PoemRecord> rows = {{"a", "", "", "山高，月小。", ""}, {"b", "", "", "山高 ，月小．", ""}};
  EXPECT_EQ(deduplicate(rows).size(), 1u);
  EXPECT_EQ(deduplicate(rows)[0].title, "a");
}

TEST(Deduplicate, OneCharacterDifference) {
  const std::vector<PoemRecord> rows = {{"a", "", "", "山高月小", ""}, {"b", "", "", "山高月大", ""}};
  EXPECT_EQ(deduplicate(rows).size(), 2u);
}

TEST(Deduplicate, PlantedDuplicates) {
  std::mt19937_64 rng(5);
  const std::u32string alphabet = U"山水风月花鸟云天江湖春秋";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::vector<PoemRecord> rows;
  std::set<std::string> seen;
  while (rows.size() < 990) {
    std::u32string s;
    for (int i = 0; i < 10; ++i) s.push_back(alphabet[pick(rng)]);
    const std::string line = to_utf8(s.substr(0, 5)) + "，" + to_utf8(s.substr(5)) + "。";
    if (seen.insert(line).second) rows.push_back({std::to_string(rows.size()), "", "", line, ""});
  }
  std::vector<PoemRecord> all = rows;
  std::uniform_int_distribution<std::size_t> which(0, rows.size() - 1);
  for (int i = 0; i < 10; ++i) {
    PoemRecord dup = rows[which(rng)];
    const auto original = std::find_if(all.begin(), all.end(), [&](const auto& r) { return r.title == dup.title; });
    std::uniform_int_distribution<std::ptrdiff_t> after(original - all.begin() + 1, std::ssize(all));
    dup.title += "-dup";
    dup.content = " " + dup.content + " ";
    all.insert(all.begin() + after(rng), dup);
  }
  ASSERT_EQ(all.size(), 1000u);
  const auto unique = deduplicate(all);
  ASSERT_EQ(unique.size(), 990u);
  for (const auto& r : unique) EXPECT_EQ(r.title.find("-dup"), std::string::npos);
}

TEST(ContentKey, IgnoresPunctuationAndSpace) {
  EXPECT_EQ(content_key("山高，月小。"), content_key(" 山高 月小 "));
  EXPECT_NE(content_key("山高月小"), content_key("山高月大"));
  EXPECT_EQ(content_key("abc").size(), 64u);
}

}  // namespace
}  // namespace guiyun::corpus
