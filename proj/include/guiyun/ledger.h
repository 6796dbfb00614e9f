#pragma once

// Append-only record of generated poems, answering "did this system write
// that?". One JSON object per line; the digest index is rebuilt on open.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace guiyun::ledger {

struct Provenance {
  std::string prompt;  // canonical prompt text
  std::string lm_id;
  std::uint64_t seed = 0;
};

struct LedgerEntry {
  std::string entry_id;         // SHA-256 hex of normalized_text
  std::string normalized_text;  // characters only, UTF-8
  std::string raw_text;
  std::string created_at;  // ISO-8601 UTC
  std::string prompt;
  std::string lm_id;
  std::uint64_t seed = 0;

  bool operator==(const LedgerEntry&) const = default;
};

/// Punctuation and whitespace removed.
std::string normalize_text(std::string_view raw);
std::string entry_id_for(std::string_view raw);

nlohmann::json to_json(const LedgerEntry& entry);
LedgerEntry entry_from_json(const nlohmann::json& doc);

struct RecordResult {
  std::string entry_id;
  bool created = false;  // false when the text was already present
};

class Ledger {
 public:
  enum class Access { ReadWrite, ReadOnly };

  /// ReadWrite creates the file if needed and takes an exclusive lock on it
  /// (Error("ledger_locked") if another writer holds it). A torn final line
  /// left by a crash is cut off. Malformed lines throw Error("ledger_corrupt").
  explicit Ledger(std::filesystem::path path, Access access = Access::ReadWrite);
  ~Ledger();
  Ledger(const Ledger&) = delete;
  Ledger& operator=(const Ledger&) = delete;

  /// Appends unless the normalized text is already present, in which case
  /// the existing id is returned and its hit counter bumped. Throws
  /// Error("empty_poem") for text without characters and Error("io") when
  /// the write fails; a failed write leaves the file as it was.
  RecordResult record(std::string_view raw_text, const Provenance& provenance);

  std::optional<LedgerEntry> check(std::string_view text) const;
  std::vector<LedgerEntry> list() const;

  /// Repeat records of the entry since this ledger was opened.
  std::size_t hits(const std::string& entry_id) const;
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  void load();

  std::filesystem::path path_;
  Access access_;
  int fd_ = -1;
  mutable std::shared_mutex mu_;
  std::vector<LedgerEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::size_t> hits_;
};

}  // namespace guiyun::ledger
