#pragma once

// The language-model slot of the generator. Any model that can produce a
// next-character distribution given the poem so far and the conditioning
// prompt plugs in here: the character n-gram reference model, the decode-time
// conditioning boost, or an external process speaking JSON lines.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "guiyun/prompt.h"

namespace guiyun::generation {

/// Separates lines inside a decoding context.
inline constexpr char32_t kLineBreak = U'\n';
/// Final token of every poem.
inline constexpr char32_t kEndOfPoem = U'\x03';
/// History padding before the first character.
inline constexpr char32_t kStartOfPoem = U'\x02';

/// (token, probability) pairs sorted by token; zero-probability tokens may be
/// omitted.
using Distribution = std::vector<std::pair<char32_t, double>>;

/// Context for a poem: lines joined by kLineBreak. A trailing kLineBreak
/// means the next token starts a new line.
std::u32string poem_context(std::span<const std::u32string> lines);

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  /// Probabilities are nonnegative and sum to 1 (±1e-9). Must be safe to
  /// call concurrently.
  virtual Distribution next_distribution(std::u32string_view context, const PromptSpec& prompt) const = 0;

  virtual std::string id() const = 0;
};

/// Interpolated character n-gram model with Witten-Bell weights:
///   P_k(c | h) = (C(h c) + T(h) P_{k-1}(c | h')) / (C(h) + T(h))
/// where T(h) is the number of distinct successors of h and h' drops the
/// oldest character. Unseen histories fall through to the lower order; the
/// unigram level is the maximum-likelihood estimate. Poems are modelled as
/// their characters with kLineBreak between lines and kEndOfPoem at the end.
class NGramModel : public LanguageModel {
 public:
  /// Throws Error("invalid_order") for order < 1 and Error("empty_corpus")
  /// when there is nothing to count.
  static NGramModel train(std::span<const NormalizedPoem> corpus, std::size_t order);

  Distribution next_distribution(std::u32string_view context, const PromptSpec& prompt) const override;
  std::string id() const override;

  std::size_t order() const { return order_; }
  const std::vector<char32_t>& vocabulary() const { return vocab_; }

  void save(std::ostream& out) const;
  static NGramModel load(std::istream& in);
  void save_file(const std::filesystem::path& path) const;
  static NGramModel load_file(const std::filesystem::path& path);

 private:
  struct HistoryCounts {
    std::vector<std::pair<std::uint32_t, std::uint64_t>> successors;  // vocab index, count
    std::uint64_t total = 0;
  };

  void add_count(const std::u32string& history, char32_t token, std::uint64_t count);
  void finalize();

  std::size_t order_ = 1;
  std::vector<char32_t> vocab_;
  std::unordered_map<char32_t, std::uint32_t> index_;
  std::unordered_map<std::u32string, HistoryCounts> counts_;
  std::map<std::u32string, std::map<char32_t, std::uint64_t>> raw_;
  std::string fingerprint_;
};

/// Multiplies the probability of every conditioning character (theme-word
/// characters and key characters of the prompt) by beta and renormalizes.
/// A character already present in the context keeps its base probability.
class BoostedModel : public LanguageModel {
 public:
  BoostedModel(const LanguageModel& base, double beta) : base_(base), beta_(beta) {}

  Distribution next_distribution(std::u32string_view context, const PromptSpec& prompt) const override;
  std::string id() const override { return base_.id(); }

 private:
  const LanguageModel& base_;
  double beta_;
};

/// Out-of-process model. Each query writes one line
///   {"context": "...", "prompt": "<canonical prompt text>"}
/// to the child's stdin and reads one line {"probs": {"字": p, ...}} back.
/// kLineBreak and kEndOfPoem travel as "\n" and "\u0003". Queries are
/// serialized through a mutex.
class ProcessModel : public LanguageModel {
 public:
  explicit ProcessModel(std::vector<std::string> argv);
  ~ProcessModel() override;
  ProcessModel(const ProcessModel&) = delete;
  ProcessModel& operator=(const ProcessModel&) = delete;

  Distribution next_distribution(std::u32string_view context, const PromptSpec& prompt) const override;
  std::string id() const override;

 private:
  std::vector<std::string> argv_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  mutable std::mutex mu_;
  mutable std::string buffer_;
};

}  // namespace guiyun::generation
