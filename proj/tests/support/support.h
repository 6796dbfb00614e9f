#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "guiyun/corpus.h"
#include "guiyun/extraction.h"
#include "guiyun/language_model.h"
#include "guiyun/prompt.h"
#include "guiyun/prosody.h"

namespace guiyun::testing {

std::filesystem::path data_dir();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// The shipped data directory, loaded once per process.
struct Fixture {
  prosody::RhymeBook book;
  extraction::MaxMatchSegmenter segmenter;
  extraction::StopwordSet stopwords;
  extraction::EmbeddingTable embeddings;
  std::vector<corpus::NormalizedPoem> poems;  // deduplicated corpus
  extraction::IdfTable idf;
  std::unique_ptr<generation::NGramModel> lm;  // order 3 on the gap-free poems

  generation::ExtractionContext context() const { return {idf, embeddings, segmenter, stopwords}; }
};

const Fixture& fixture();

/// The named fixture poems.
inline constexpr const char* kEgretPoem =
    "杨柳花飞芜草青，野塘烟草自凋零。一双白鹭来烟际，点破遥山数抹青。";
inline constexpr const char* kDawnWindPoem =
    "独起凭栏对晓风，满溪春水小桥东。始知昨夜红楼梦，身在桃花万树中。";
inline constexpr const char* kDawnWindReply =
    "日没荒墟生晓风，满溪流水碧山东。不知渔父相扶醉，独立苍茫烟雨中。";
inline constexpr const char* kReunionPoem = "后会何须约，前尘自可忘。一时同梦寐，万古各参商。";
inline constexpr const char* kFarewellPoem =
    "相见时难别亦难，临歧无奈暂盘桓。舟沿碧草同千里，人隔青天共一峦。"
    "梦去不妨风浩荡，酒来犹喜月团圆。从今珍重琼瑶字，莫作鸳鸯万缕看。";

/// Four characters: 东 (一东, level), 青 (九青, level), 月 and 雪 (oblique).
prosody::RhymeBook toy_book();
inline constexpr char32_t kToyChars[] = {U'东', U'青', U'月', U'雪'};

/// First-order Markov model over an explicit token set: the distribution
/// depends only on the last token of the context (kStartOfPoem when empty).
class TableModel : public generation::LanguageModel {
 public:
  TableModel(std::vector<char32_t> tokens, std::map<char32_t, generation::Distribution> rows)
      : tokens_(std::move(tokens)), rows_(std::move(rows)) {}

  /// Every row a random distribution over kToyChars, kLineBreak and
  /// kEndOfPoem with all entries positive.
  static TableModel random_toy(std::mt19937_64& rng);

  generation::Distribution next_distribution(std::u32string_view context,
                                             const generation::PromptSpec& prompt) const override;
  std::string id() const override { return "table"; }

 private:
  std::vector<char32_t> tokens_;
  std::map<char32_t, generation::Distribution> rows_;
};

struct OracleResult {
  std::u32string text;  // decoding context form: lines joined by kLineBreak
  double log_prob = 0.0;
  std::size_t candidates = 0;  // template-consistent completions enumerated
};

/// Exhaustive search for the most probable FS2TEXT completion that passes
/// validation at Strict. Enumerates every template-consistent completion
/// over the toy characters, keeps those validate() accepts and sums
/// log-probabilities left to right: the break after each line, each
/// character, then the end marker. Ties go to the smaller text.
OracleResult exhaustive_best(const generation::LanguageModel& lm, const generation::PromptSpec& prompt,
                             const prosody::RhymeBook& book);

/// A valid prompt of either mode with random genre, conditioning and lines
/// drawn from a small CJK alphabet.
generation::PromptSpec random_prompt(std::mt19937_64& rng);

/// Lines of a decoded poem in context form.
std::u32string context_text(const corpus::NormalizedPoem& poem);

/// Two-sided binomial p-value for p0 = 1/2 by direct enumeration in exact
/// integer arithmetic (n <= 60).
double brute_force_pvalue(unsigned n, unsigned k);

}  // namespace guiyun::testing
