#include "guiyun/language_model.h"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "guiyun/digest.h"
#include "guiyun/error.h"
#include "guiyun/text.h"

namespace guiyun::generation {

std::u32string poem_context(std::span<const std::u32string> lines) {
  std::u32string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back(kLineBreak);
    out += lines[i];
  }
  return out;
}

NGramModel NGramModel::train(std::span<const NormalizedPoem> corpus, std::size_t order) {
  if (order < 1) throw Error("invalid_order", "n-gram order must be at least 1");
  std::map<std::u32string, std::map<char32_t, std::uint64_t>> table;
  for (const auto& poem : corpus) {
    std::u32string seq(order - 1, kStartOfPoem);
    seq += poem_context(poem.lines);
    seq.push_back(kEndOfPoem);
    for (std::size_t p = order - 1; p < seq.size(); ++p) {
      for (std::size_t k = 0; k < order; ++k) ++table[seq.substr(p - k, k)][seq[p]];
    }
  }
  if (table.empty()) throw Error("empty_corpus", "cannot train an n-gram model on an empty corpus");

  NGramModel model;
  model.order_ = order;
  for (const auto& [history, succ] : table) {
    for (const auto& [tok, count] : succ) model.add_count(history, tok, count);
  }
  model.finalize();
  return model;
}

void NGramModel::add_count(const std::u32string& history, char32_t token, std::uint64_t count) {
  raw_[history][token] += count;
}

void NGramModel::finalize() {
  vocab_.clear();
  for (const auto& [history, succ] : raw_) {
    if (!history.empty()) continue;
    for (const auto& [tok, count] : succ) vocab_.push_back(tok);
  }
  std::sort(vocab_.begin(), vocab_.end());
  vocab_.erase(std::unique(vocab_.begin(), vocab_.end()), vocab_.end());
  index_.clear();
  for (std::size_t i = 0; i < vocab_.size(); ++i) index_[vocab_[i]] = static_cast<std::uint32_t>(i);

  counts_.clear();
  nlohmann::json fp = nlohmann::json::array();
  for (const auto& [history, succ] : raw_) {
    HistoryCounts hc;
    for (const auto& [tok, count] : succ) {
      if (count == 0) throw Error("invalid_model", "n-gram counts must be positive");
      const auto it = index_.find(tok);
      if (it == index_.end()) throw Error("invalid_model", "successor outside the unigram vocabulary");
      hc.successors.push_back({it->second, count});
      hc.total += count;
      fp.push_back({to_utf8(history), to_utf8(tok), count});
    }
    counts_[history] = std::move(hc);
  }
  if (vocab_.empty()) throw Error("invalid_model", "empty vocabulary");
  fingerprint_ = sha256_hex(std::to_string(order_) + fp.dump()).substr(0, 12);
}

Distribution NGramModel::next_distribution(std::u32string_view context, const PromptSpec&) const {
  std::u32string seq(order_ - 1, kStartOfPoem);
  seq.append(context.substr(context.size() > order_ ? context.size() - order_ : 0));

  std::vector<double> p(vocab_.size(), 0.0);
  const auto& uni = counts_.at(std::u32string());
  for (const auto& [idx, count] : uni.successors) p[idx] = static_cast<double>(count) / static_cast<double>(uni.total);

  for (std::size_t k = 1; k < order_; ++k) {
    const auto it = counts_.find(seq.substr(seq.size() - k));
    if (it == counts_.end()) break;
    const auto& hc = it->second;
    const double types = static_cast<double>(hc.successors.size());
    const double denom = static_cast<double>(hc.total) + types;
    const double back = types / denom;
    for (double& x : p) x *= back;
    for (const auto& [idx, count] : hc.successors) p[idx] += static_cast<double>(count) / denom;
  }

  Distribution out;
  out.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (p[i] > 0.0) out.push_back({vocab_[i], p[i]});
  }
  return out;
}

std::string NGramModel::id() const { return "ngram-" + std::to_string(order_) + "-" + fingerprint_; }

void NGramModel::save(std::ostream& out) const {
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& [history, succ] : raw_) {
    for (const auto& [tok, count] : succ) counts.push_back({to_utf8(history), to_utf8(tok), count});
  }
  nlohmann::json doc = {{"format", "guiyun-ngram"}, {"version", 1}, {"order", order_}, {"counts", std::move(counts)}};
  out << doc.dump() << '\n';
}

NGramModel NGramModel::load(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid_model", std::string("cannot parse n-gram model: ") + e.what());
  }
  if (doc.value("format", "") != "guiyun-ngram") throw Error("invalid_model", "not a guiyun n-gram model");
  NGramModel model;
  model.order_ = doc.at("order").get<std::size_t>();
  if (model.order_ < 1) throw Error("invalid_order", "n-gram order must be at least 1");
  for (const auto& row : doc.at("counts")) {
    const auto tok = from_utf8(row.at(1).get<std::string>());
    if (tok.size() != 1) throw Error("invalid_model", "token must be one character");
    model.add_count(from_utf8(row.at(0).get<std::string>()), tok[0], row.at(2).get<std::uint64_t>());
  }
  model.finalize();
  return model;
}

void NGramModel::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write " + path.string());
  save(out);
  if (!out) throw Error("io", "write failed for " + path.string());
}

NGramModel NGramModel::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open model " + path.string());
  return load(in);
}

Distribution BoostedModel::next_distribution(std::u32string_view context, const PromptSpec& prompt) const {
  Distribution dist = base_.next_distribution(context, prompt);
  if (beta_ == 1.0) return dist;
  const std::u32string boosted = conditioning_chars(prompt);
  if (boosted.empty()) return dist;
  double total = 0.0;
  for (auto& [tok, p] : dist) {
    if (boosted.find(tok) != std::u32string::npos && context.find(tok) == std::u32string_view::npos) p *= beta_;
    total += p;
  }
  for (auto& entry : dist) entry.second /= total;
  return dist;
}

ProcessModel::ProcessModel(std::vector<std::string> argv) : argv_(std::move(argv)) {
  if (argv_.empty()) throw Error("invalid_model", "empty model command");
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw Error("io", "pipe failed");
  ::signal(SIGPIPE, SIG_IGN);
  pid_ = fork();
  if (pid_ < 0) throw Error("io", "fork failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ProcessModel::~ProcessModel() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

std::string ProcessModel::id() const {
  std::string out = "process:";
  for (std::size_t i = 0; i < argv_.size(); ++i) out += (i ? " " : "") + argv_[i];
  return out;
}

Distribution ProcessModel::next_distribution(std::u32string_view context, const PromptSpec& prompt) const {
  const std::string request =
      nlohmann::json{{"context", to_utf8(context)}, {"prompt", serialize(prompt)}}.dump() + "\n";
  std::lock_guard lock(mu_);
  for (std::size_t sent = 0; sent < request.size();) {
    const ssize_t n = ::write(to_child_, request.data() + sent, request.size() - sent);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error("lm_adapter", "model process closed its input");
    sent += static_cast<std::size_t>(n);
  }
  std::size_t nl;
  while ((nl = buffer_.find('\n')) == std::string::npos) {
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error("lm_adapter", "model process closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
  const std::string line = buffer_.substr(0, nl);
  buffer_.erase(0, nl + 1);

  Distribution dist;
  try {
    const auto doc = nlohmann::json::parse(line);
    for (const auto& [key, value] : doc.at("probs").items()) {
      const auto tok = from_utf8(key);
      const double p = value.get<double>();
      if (tok.size() != 1 || !(p >= 0.0)) throw Error("lm_adapter", "bad probability entry '" + key + "'");
      if (p > 0.0) dist.push_back({tok[0], p});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("lm_adapter", std::string("bad model response: ") + e.what());
  }
  std::sort(dist.begin(), dist.end());
  double total = 0.0;
  for (const auto& e : dist) total += e.second;
  if (!(total > 0.0)) throw Error("lm_adapter", "model returned an empty distribution");
  for (auto& e : dist) e.second /= total;
  return dist;
}

}  // namespace guiyun::generation
