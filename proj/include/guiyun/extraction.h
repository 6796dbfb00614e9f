#pragma once

// Theme words (segmentation + stopwords + TF-IDF) and key characters (the
// characters whose embeddings lie closest to the poem's centroid).

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "guiyun/corpus.h"

namespace guiyun::extraction {

using corpus::NormalizedPoem;

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  /// Tokens concatenate back to the input; none is empty.
  virtual std::vector<std::u32string> segment(std::u32string_view text) const = 0;
};

/// Greedy forward maximum match against a lexicon; characters not starting
/// any lexicon word become single-character tokens.
class MaxMatchSegmenter : public Segmenter {
 public:
  MaxMatchSegmenter() = default;
  explicit MaxMatchSegmenter(std::span<const std::u32string> lexicon);

  /// One word per line, UTF-8; blank lines and '#' comments skipped.
  static MaxMatchSegmenter load(std::istream& in);
  static MaxMatchSegmenter load_file(const std::filesystem::path& path);

  std::vector<std::u32string> segment(std::u32string_view text) const override;

  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::u32string> words_;
  std::size_t max_len_ = 1;
};

using StopwordSet = std::unordered_set<std::u32string>;

StopwordSet load_stopwords(std::istream& in);
StopwordSet load_stopwords_file(const std::filesystem::path& path);

/// Tokens of every line, in reading order, with stopwords and gap-marked
/// tokens removed. Lines are segmented separately.
std::vector<std::u32string> content_tokens(const NormalizedPoem& poem, const Segmenter& segmenter,
                                           const StopwordSet& stopwords);

/// Smoothed inverse document frequency: idf(t) = ln((1+N)/(1+df(t))) + 1.
class IdfTable {
 public:
  IdfTable() = default;
  IdfTable(std::size_t doc_count, std::unordered_map<std::u32string, std::size_t> df);

  std::size_t doc_count() const { return doc_count_; }
  /// 0 for unseen tokens.
  std::size_t df(const std::u32string& token) const;
  double idf(const std::u32string& token) const;
  const std::unordered_map<std::u32string, std::size_t>& table() const { return df_; }

 private:
  std::size_t doc_count_ = 0;
  std::unordered_map<std::u32string, std::size_t> df_;
};

/// One document per poem. Throws Error("empty_corpus") for an empty corpus.
IdfTable build_idf(std::span<const NormalizedPoem> corpus, const Segmenter& segmenter, const StopwordSet& stopwords);

/// max(1, round-half-up(char_count / 12)).
std::size_t default_theme_count(std::size_t char_count);
/// max(1, round-half-up(char_count / 10)).
std::size_t default_key_count(std::size_t char_count);

struct ScoredToken {
  std::u32string token;
  double score = 0.0;
  std::size_t first_position = 0;  // index of first occurrence in content_tokens()
};

/// Every candidate, ranked by tf·idf descending, ties by first occurrence.
std::vector<ScoredToken> rank_theme_words(const NormalizedPoem& poem, const IdfTable& idf,
                                          const Segmenter& segmenter, const StopwordSet& stopwords);

std::vector<std::u32string> theme_words(const NormalizedPoem& poem, const IdfTable& idf, const Segmenter& segmenter,
                                        const StopwordSet& stopwords, std::optional<std::size_t> k = std::nullopt);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  /// Text format: optional `V D` header, then `token v1 ... vD` per line.
  /// Dimension mismatches and non-finite components throw Error("embeddings")
  /// naming the line; duplicate tokens keep the last vector.
  static EmbeddingTable load(std::istream& in);
  static EmbeddingTable load_file(const std::filesystem::path& path);

  void set(std::u32string token, std::vector<double> vec);
  const std::vector<double>* find(const std::u32string& token) const;
  const std::vector<double>* find(char32_t ch) const { return find(std::u32string(1, ch)); }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  std::size_t duplicates() const { return duplicates_; }

 private:
  std::size_t dim_ = 0;
  std::size_t duplicates_ = 0;
  std::unordered_map<std::u32string, std::vector<double>> vectors_;
};

struct RankedUnit {
  std::u32string unit;
  double distance = 0.0;  // Euclidean distance to the candidates' centroid
};

/// Distinct non-stopword characters with embeddings, ranked by distance to
/// their centroid (ties by first occurrence). Characters without vectors are
/// left out of both the centroid and the ranking. Throws
/// Error("no_coverage") listing the uncovered characters when none remain.
std::vector<RankedUnit> rank_key_chars(const NormalizedPoem& poem, const EmbeddingTable& emb,
                                       const StopwordSet& stopwords);

std::vector<char32_t> key_chars(const NormalizedPoem& poem, const EmbeddingTable& emb, const StopwordSet& stopwords,
                                std::optional<std::size_t> k = std::nullopt);

/// Word-granularity variant: candidates are the segmenter's tokens instead of
/// single characters.
std::vector<std::u32string> key_words(const NormalizedPoem& poem, const EmbeddingTable& emb,
                                      const Segmenter& segmenter, const StopwordSet& stopwords,
                                      std::optional<std::size_t> k = std::nullopt);

}  // namespace guiyun::extraction
