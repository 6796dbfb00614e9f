#pragma once

// Everything the HTTP endpoints and CLI share: configuration, the loaded
// resources, and request handlers that map JSON bodies to JSON results.
// The HTTP layer only moves bytes; handler output is the response body.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "guiyun/corpus.h"
#include "guiyun/extraction.h"
#include "guiyun/generation.h"
#include "guiyun/ledger.h"
#include "guiyun/prosody.h"

namespace guiyun::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path corpus;
  std::filesystem::path rhyme_book;
  std::filesystem::path embeddings;
  std::filesystem::path stopwords;
  std::filesystem::path lexicon;  // optional; without it every character is a token
  std::filesystem::path ledger;
  std::filesystem::path model;    // saved n-gram model; trained from corpus when empty
  std::string model_command;      // external model process, overrides `model`
  std::size_t ngram_order = 3;
  std::map<std::string, std::filesystem::path> styles;
  prosody::Strictness strictness = prosody::Strictness::Relaxed;
  std::size_t beam_width = 16;
  std::string cors_origin = "*";

  /// Applies one `key=value` setting; relative paths resolve against `base`.
  /// Keys: host, port, corpus, rhyme_book, embeddings, stopwords, lexicon,
  /// ledger, model, model_command, ngram_order, strictness, beam_width,
  /// cors_origin, style.<name>. Throws Error("config").
  void set(const std::string& key, const std::string& value, const std::filesystem::path& base = {});

  /// Throws Error("config") for a missing required path or a bad port.
  void validate() const;
};

/// Reads the key=value file (blank lines and '#' comments skipped), then
/// applies GUIYUN_<KEY> variables from `env` (GUIYUN_STYLE_<NAME> sets
/// style.<name>).
ServiceConfig load_config(const std::optional<std::filesystem::path>& file,
                          const std::map<std::string, std::string>& env);

/// The process environment as a map.
std::map<std::string, std::string> environment();

/// Immutable data plus the ledger, loaded once per process.
class Resources {
 public:
  explicit Resources(const ServiceConfig& config);

  const ServiceConfig& config() const { return config_; }
  const prosody::RhymeBook& book() const { return book_; }
  const extraction::Segmenter& segmenter() const { return segmenter_; }
  const extraction::StopwordSet& stopwords() const { return stopwords_; }
  const extraction::EmbeddingTable& embeddings() const { return embeddings_; }
  const extraction::IdfTable& idf() const { return idf_; }
  const generation::LanguageModel& lm() const { return *lm_; }
  const std::map<std::string, generation::StyleLexicon>& styles() const { return styles_; }
  ledger::Ledger& ledger() { return *ledger_; }
  generation::ExtractionContext extraction() const { return {idf_, embeddings_, segmenter_, stopwords_}; }

 private:
  ServiceConfig config_;
  prosody::RhymeBook book_;
  extraction::MaxMatchSegmenter segmenter_;
  extraction::StopwordSet stopwords_;
  extraction::EmbeddingTable embeddings_;
  extraction::IdfTable idf_;
  std::unique_ptr<generation::LanguageModel> lm_;
  std::map<std::string, generation::StyleLexicon> styles_;
  std::unique_ptr<ledger::Ledger> ledger_;
};

/// Loads the corpus CSV, drops duplicate contents and normalizes; records
/// whose content has no characters are skipped.
std::vector<corpus::NormalizedPoem> load_poems(const std::filesystem::path& csv);

/// Genre, rhyme detection and meter reports of a poem text. Other-genre
/// text yields a "no_template" error object inside the result.
nlohmann::json analyze_text(const std::string& text, const prosody::RhymeBook& book,
                            std::optional<prosody::Strictness> strictness);

/// Theme words and key characters; k values default to the count rules.
nlohmann::json extract_text(const std::string& text, const generation::ExtractionContext& extraction,
                            std::optional<std::size_t> k_theme, std::optional<std::size_t> k_key);

nlohmann::json error_json(const std::string& code, const std::string& message);

class Api {
 public:
  explicit Api(Resources& resources) : res_(resources) {}

  /// Body: genre, first_line, theme_words[], key_chars[], style?, seed?,
  /// strictness?, beam_width?
  nlohmann::json generate(const nlohmann::json& body);
  /// Body: text, seed?, theme_fraction?, key_fraction?, strictness?,
  /// beam_width?, same_group_only?
  nlohmann::json follow_rhyme(const nlohmann::json& body);
  /// Body: text, strictness?
  nlohmann::json analyze(const nlohmann::json& body) const;
  /// Body: text, k_theme?, k_key?
  nlohmann::json extract(const nlohmann::json& body) const;
  nlohmann::json ledger_check(const std::string& text) const;

 private:
  nlohmann::json record(const generation::Generation& g);

  Resources& res_;
};

/// 500 for storage and model-process failures, 400 for everything else.
int http_status(const std::string& error_code);

}  // namespace guiyun::service
