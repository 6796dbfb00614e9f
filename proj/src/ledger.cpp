#include "guiyun/ledger.h"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <mutex>

#include <nlohmann/json.hpp>

#include "guiyun/digest.h"
#include "guiyun/error.h"
#include "guiyun/text.h"

namespace guiyun::ledger {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string errno_text() { return std::strerror(errno); }

// Best effort: if this fails too, the torn tail is cut on the next open.
void rollback(int fd, off_t size) {
  while (::ftruncate(fd, size) != 0 && errno == EINTR) {
  }
}

}  // namespace

std::string normalize_text(std::string_view raw) { return to_utf8(strip_to_characters(from_utf8(raw))); }

std::string entry_id_for(std::string_view raw) { return sha256_hex(normalize_text(raw)); }

nlohmann::json to_json(const LedgerEntry& e) {
  return {{"entry_id", e.entry_id},   {"normalized_text", e.normalized_text},
          {"raw_text", e.raw_text},   {"created_at", e.created_at},
          {"prompt", e.prompt},       {"lm_id", e.lm_id},
          {"seed", e.seed}};
}

LedgerEntry entry_from_json(const nlohmann::json& doc) {
  LedgerEntry e;
  e.entry_id = doc.at("entry_id").get<std::string>();
  e.normalized_text = doc.at("normalized_text").get<std::string>();
  e.raw_text = doc.at("raw_text").get<std::string>();
  e.created_at = doc.at("created_at").get<std::string>();
  e.prompt = doc.at("prompt").get<std::string>();
  e.lm_id = doc.at("lm_id").get<std::string>();
  e.seed = doc.at("seed").get<std::uint64_t>();
  return e;
}

Ledger::Ledger(std::filesystem::path path, Access access) : path_(std::move(path)), access_(access) {
  if (access_ == Access::ReadWrite) {
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("io", "cannot open ledger " + path_.string() + ": " + errno_text());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error("ledger_locked", "ledger " + path_.string() + " is held by another writer");
    }
  }
  try {
    load();
  } catch (...) {
    if (fd_ >= 0) ::close(fd_);
    throw;
  }
}

Ledger::~Ledger() {
  if (fd_ >= 0) ::close(fd_);  // releases the lock
}

void Ledger::load() {
  std::ifstream in(path_, std::ios::binary);
  if (!in) {
    if (access_ == Access::ReadOnly && !std::filesystem::exists(path_)) return;
    throw Error("io", "cannot read ledger " + path_.string());
  }
  const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

  std::size_t complete = data.rfind('\n');
  complete = complete == std::string::npos ? 0 : complete + 1;
  if (complete < data.size() && access_ == Access::ReadWrite) {
    if (::ftruncate(fd_, static_cast<off_t>(complete)) != 0) throw Error("io", "cannot trim torn ledger tail");
  }

  std::size_t line_no = 0;
  for (std::size_t pos = 0; pos < complete;) {
    const std::size_t nl = data.find('\n', pos);
    const std::string_view line(data.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    LedgerEntry e;
    try {
      e = entry_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& ex) {
      throw Error("ledger_corrupt", "ledger line " + std::to_string(line_no) + ": " + ex.what());
    }
    if (sha256_hex(e.normalized_text) != e.entry_id) {
      throw Error("ledger_corrupt", "ledger line " + std::to_string(line_no) + ": entry_id does not match text");
    }
    if (index_.emplace(e.entry_id, entries_.size()).second) entries_.push_back(std::move(e));
  }
}

RecordResult Ledger::record(std::string_view raw_text, const Provenance& provenance) {
  if (access_ != Access::ReadWrite) throw Error("read_only", "ledger opened read-only");
  LedgerEntry e;
  e.normalized_text = normalize_text(raw_text);
  if (e.normalized_text.empty()) throw Error("empty_poem", "empty poem");
  e.entry_id = sha256_hex(e.normalized_text);

  std::unique_lock lock(mu_);
  if (const auto it = index_.find(e.entry_id); it != index_.end()) {
    ++hits_[e.entry_id];
    return {e.entry_id, false};
  }
  e.raw_text = std::string(raw_text);
  e.created_at = utc_now();
  e.prompt = provenance.prompt;
  e.lm_id = provenance.lm_id;
  e.seed = provenance.seed;
  const std::string line = to_json(e).dump() + "\n";

  struct stat st {};
  if (::fstat(fd_, &st) != 0) throw Error("io", "cannot stat ledger: " + errno_text());
  const off_t before = st.st_size;
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd_, line.data() + written, line.size() - written);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      const std::string why = errno_text();
      rollback(fd_, before);
      throw Error("io", "ledger write failed: " + why);
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fdatasync(fd_) != 0) {
    const std::string why = errno_text();
    rollback(fd_, before);
    throw Error("io", "ledger sync failed: " + why);
  }
  index_.emplace(e.entry_id, entries_.size());
  const std::string id = e.entry_id;
  entries_.push_back(std::move(e));
  return {id, true};
}

std::optional<LedgerEntry> Ledger::check(std::string_view text) const {
  const std::string id = entry_id_for(text);
  std::shared_lock lock(mu_);
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second];
}

std::vector<LedgerEntry> Ledger::list() const {
  std::shared_lock lock(mu_);
  return entries_;
}

std::size_t Ledger::hits(const std::string& entry_id) const {
  std::shared_lock lock(mu_);
  const auto it = hits_.find(entry_id);
  return it == hits_.end() ? 0 : it->second;
}

std::size_t Ledger::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

}  // namespace guiyun::ledger
