#include <gtest/gtest.h>

#include <random>
#include <set>

#include "guiyun/decoder.h"
#include "guiyun/error.h"
#include "guiyun/text.h"
#include "support.h"

namespace guiyun::generation {
namespace {

using corpus::normalize;
using guiyun::testing::fixture;
using guiyun::testing::TableModel;
using prosody::Overall;

PromptSpec egret_prompt() {
  return assemble_fs2text_prompt(Genre::Qijue, {U"白鹭"}, {U'烟', U'一', U'山'}, U"杨柳花飞芜草青");
}

DecodeOptions with_seed(std::uint64_t seed) {
  DecodeOptions o;
  o.seed = seed;
  return o;
}

TEST(Decode, Fs2TextKeepsFirstLineAndRhymesWithIt) {
  const auto& f = fixture();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = constrained_decode(*f.lm, egret_prompt(), f.book, with_seed(seed));
    ASSERT_EQ(r.poem.lines.size(), 4u);
    EXPECT_EQ(r.poem.lines[0], U"杨柳花飞芜草青");
    EXPECT_TRUE(f.book.in_group(r.poem.lines[1].back(), "九青"));
    EXPECT_TRUE(f.book.in_group(r.poem.lines[3].back(), "九青"));
    EXPECT_EQ(prosody::validate(r.poem, Genre::Qijue, f.book, r.strictness_used).overall, Overall::Pass);
  }
}

TEST(Decode, Rr2TextReusesRhymeCharacters) {
  const auto& f = fixture();
  const auto original = normalize(guiyun::testing::kDawnWindPoem);
  const auto prompt = assemble_rr2text_prompt(original, f.book, f.context());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = constrained_decode(*f.lm, prompt, f.book, with_seed(seed));
    EXPECT_EQ(r.poem.lines[0].back(), U'风');
    EXPECT_EQ(r.poem.lines[1].back(), U'东');
    EXPECT_EQ(r.poem.lines[3].back(), U'中');
    EXPECT_NE(r.poem.lines[0], original.lines[0]);
    EXPECT_EQ(prosody::validate(r.poem, Genre::Qijue, f.book, r.strictness_used).overall, Overall::Pass);
  }
}

TEST(Decode, SameGroupOnlyAcceptsAnyGroupMember) {
  const auto& f = fixture();
  const auto prompt = assemble_rr2text_prompt(normalize(guiyun::testing::kDawnWindPoem), f.book, f.context());
  DecodeOptions o;
  o.same_group_only = true;
  std::set<std::u32string> endings;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    o.seed = seed;
    const auto r = constrained_decode(*f.lm, prompt, f.book, o);
    std::u32string ends;
    for (std::size_t line : {0u, 1u, 3u}) {
      EXPECT_TRUE(f.book.in_group(r.poem.lines[line].back(), "一东"));
      ends.push_back(r.poem.lines[line].back());
    }
    endings.insert(ends);
  }
  EXPECT_GT(endings.size(), 1u);
}

TEST(Decode, DeterministicPerSeed) {
  const auto& f = fixture();
  std::set<std::u32string> distinct;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = constrained_decode(*f.lm, egret_prompt(), f.book, with_seed(seed));
    const auto b = constrained_decode(*f.lm, egret_prompt(), f.book, with_seed(seed));
    EXPECT_EQ(a.poem, b.poem);
    EXPECT_EQ(a.log_prob, b.log_prob);
    distinct.insert(a.poem.joined());
  }
  EXPECT_GT(distinct.size(), 5u);
}

TEST(Decode, ZeroNoiseIgnoresSeed) {
  const auto& f = fixture();
  DecodeOptions o;
  o.noise = 0.0;
  o.seed = 1;
  const auto a = constrained_decode(*f.lm, egret_prompt(), f.book, o);
  o.seed = 99;
  EXPECT_EQ(constrained_decode(*f.lm, egret_prompt(), f.book, o).poem, a.poem);
}

TEST(Decode, InvalidOptions) {
  const auto& f = fixture();
  for (auto tweak : {+[](DecodeOptions& o) { o.beam_width = 0; }, +[](DecodeOptions& o) { o.boost = 0.0; },
                     +[](DecodeOptions& o) { o.noise = -1.0; }}) {
    DecodeOptions o;
    tweak(o);
    try {
      constrained_decode(*f.lm, egret_prompt(), f.book, o);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), "invalid_options");
    }
  }
}

TEST(Decode, OptimalOnToyInstances) {
  const auto book = guiyun::testing::toy_book();
  std::mt19937_64 rng(77);
  const std::u32string first_lines[] = {U"月雪月东东", U"月雪东青月"};  // D and A shapes
  for (int trial = 0; trial < 4; ++trial) {
    const auto lm = TableModel::random_toy(rng);
    const auto prompt = assemble_fs2text_prompt(Genre::Wujue, {}, {U'月'}, first_lines[trial % 2]);
    DecodeOptions o;
    o.strictness = prosody::Strictness::Strict;
    o.beam_width = 1u << 15;
    o.noise = 0.0;
    const auto r = constrained_decode(lm, prompt, book, o);
    const auto want = guiyun::testing::exhaustive_best(BoostedModel(lm, o.boost), prompt, book);
    EXPECT_EQ(guiyun::testing::context_text(r.poem), want.text) << trial;
    EXPECT_EQ(r.log_prob, want.log_prob);
    EXPECT_GT(want.candidates, 1u);
  }
}

TEST(Decode, NarrowBeamIsNotOptimalEverywhere) {
  const auto book = guiyun::testing::toy_book();
  std::mt19937_64 rng(5);
  int worse = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto lm = TableModel::random_toy(rng);
    const auto prompt = assemble_fs2text_prompt(Genre::Wujue, {}, {}, U"东青东月雪");
    DecodeOptions o;
    o.strictness = prosody::Strictness::Strict;
    o.beam_width = 1;
    o.noise = 0.0;
    const auto r = constrained_decode(lm, prompt, book, o);
    const auto want = guiyun::testing::exhaustive_best(lm, prompt, book);
    EXPECT_LE(r.log_prob, want.log_prob);
    worse += r.log_prob < want.log_prob ? 1 : 0;
  }
  EXPECT_GT(worse, 0);
}

TEST(Decode, RelaxesWhenStrictIsInfeasible) {
  const auto book = guiyun::testing::toy_book();
  std::mt19937_64 rng(3);
  const auto lm = TableModel::random_toy(rng);
  // An all-level first line fits no line pattern, so only RhymeOnly works.
  const auto prompt = assemble_fs2text_prompt(Genre::Wujue, {}, {}, U"东东东东东");
  DecodeOptions o;
  o.strictness = prosody::Strictness::Strict;
  const auto r = constrained_decode(lm, prompt, book, o);
  EXPECT_EQ(r.strictness_used, prosody::Strictness::RhymeOnly);
  ASSERT_EQ(r.notes.size(), 2u);
  EXPECT_EQ(r.notes[0], "beam exhausted at strict; relaxed to relaxed");
  EXPECT_EQ(r.notes[1], "beam exhausted at relaxed; relaxed to rhyme-only");
  EXPECT_EQ(r.poem.lines[1].back(), U'东');
  EXPECT_EQ(r.poem.lines[3].back(), U'东');

  o.max_retries = 1;
  try {
    constrained_decode(lm, prompt, book, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "infeasible");
  }
}

TEST(Decode, InfeasibleAtRhymeOnly) {
  const auto book = guiyun::testing::toy_book();
  const std::vector<char32_t> tokens = {kEndOfPoem, kLineBreak, U'月', U'雪'};
  std::map<char32_t, Distribution> rows;
  for (char32_t h : {kStartOfPoem, kLineBreak, U'东', U'青', U'月', U'雪'}) {
    rows[h] = {{kEndOfPoem, 0.1}, {kLineBreak, 0.3}, {U'月', 0.3}, {U'雪', 0.3}};
  }
  const TableModel lm(tokens, rows);
  const auto prompt = assemble_fs2text_prompt(Genre::Wujue, {}, {}, U"月雪月青东");
  DecodeOptions o;
  o.strictness = prosody::Strictness::RhymeOnly;
  try {
    constrained_decode(lm, prompt, book, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "infeasible");
    EXPECT_STREQ(e.what(), "infeasible constraints");
  }
}

TEST(Decode, RhymeGroupFixedByFirstRhymeLineWhenLineOneIsOblique) {
  const auto& f = fixture();
  const auto prompt = assemble_fs2text_prompt(Genre::Wujue, {}, {}, U"白日依山尽");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = constrained_decode(*f.lm, prompt, f.book, with_seed(seed));
    const auto d = prosody::detect_rhyme_group(r.poem, f.book);
    EXPECT_FALSE(d.groups.empty());
  }
}

}  // namespace
}  // namespace guiyun::generation
