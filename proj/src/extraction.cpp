#include "guiyun/extraction.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <unordered_map>

#include "guiyun/error.h"
#include "guiyun/text.h"

namespace guiyun::extraction {

MaxMatchSegmenter::MaxMatchSegmenter(std::span<const std::u32string> lexicon) {
  for (const auto& w : lexicon) {
    if (w.empty()) continue;
    words_.insert(w);
    max_len_ = std::max(max_len_, w.size());
  }
}

MaxMatchSegmenter MaxMatchSegmenter::load(std::istream& in) {
  std::vector<std::u32string> words;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    words.push_back(from_utf8(line));
  }
  return MaxMatchSegmenter(words);
}

MaxMatchSegmenter MaxMatchSegmenter::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open lexicon " + path.string());
  return load(in);
}

std::vector<std::u32string> MaxMatchSegmenter::segment(std::u32string_view text) const {
  std::vector<std::u32string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t take = 1;
    for (std::size_t len = std::min(max_len_, text.size() - i); len > 1; --len) {
      if (words_.count(std::u32string(text.substr(i, len)))) {
        take = len;
        break;
      }
    }
    out.emplace_back(text.substr(i, take));
    i += take;
  }
  return out;
}

StopwordSet load_stopwords(std::istream& in) {
  StopwordSet out;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    out.insert(from_utf8(line));
  }
  return out;
}

StopwordSet load_stopwords_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open stopword list " + path.string());
  return load_stopwords(in);
}

std::vector<std::u32string> content_tokens(const NormalizedPoem& poem, const Segmenter& segmenter,
                                           const StopwordSet& stopwords) {
  std::vector<std::u32string> out;
  for (const auto& line : poem.lines) {
    for (auto& tok : segmenter.segment(line)) {
      if (stopwords.count(tok) || tok.find(kGapChar) != std::u32string::npos) continue;
      out.push_back(std::move(tok));
    }
  }
  return out;
}

IdfTable::IdfTable(std::size_t doc_count, std::unordered_map<std::u32string, std::size_t> df)
    : doc_count_(doc_count), df_(std::move(df)) {}

std::size_t IdfTable::df(const std::u32string& token) const {
  const auto it = df_.find(token);
  return it == df_.end() ? 0 : it->second;
}

double IdfTable::idf(const std::u32string& token) const {
  const double n = static_cast<double>(doc_count_);
  return std::log((1.0 + n) / (1.0 + static_cast<double>(df(token)))) + 1.0;
}

IdfTable build_idf(std::span<const NormalizedPoem> corpus, const Segmenter& segmenter, const StopwordSet& stopwords) {
  if (corpus.empty()) throw Error("empty_corpus", "cannot build IDF table from an empty corpus");
  std::unordered_map<std::u32string, std::size_t> df;
  for (const auto& poem : corpus) {
    auto tokens = content_tokens(poem, segmenter, stopwords);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df[std::move(t)];
  }
  return IdfTable(corpus.size(), std::move(df));
}

std::size_t default_theme_count(std::size_t char_count) { return std::max<std::size_t>(1, (char_count + 6) / 12); }

std::size_t default_key_count(std::size_t char_count) { return std::max<std::size_t>(1, (char_count + 5) / 10); }

std::vector<ScoredToken> rank_theme_words(const NormalizedPoem& poem, const IdfTable& idf,
                                          const Segmenter& segmenter, const StopwordSet& stopwords) {
  const auto tokens = content_tokens(poem, segmenter, stopwords);
  std::vector<ScoredToken> ranked;
  std::unordered_map<std::u32string, std::size_t> index;
  std::vector<std::size_t> tf;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto [it, inserted] = index.try_emplace(tokens[i], ranked.size());
    if (inserted) {
      ranked.push_back({tokens[i], 0.0, i});
      tf.push_back(0);
    }
    ++tf[it->second];
  }
  for (std::size_t j = 0; j < ranked.size(); ++j) ranked[j].score = static_cast<double>(tf[j]) * idf.idf(ranked[j].token);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const ScoredToken& a, const ScoredToken& b) { return a.score > b.score; });
  return ranked;
}

std::vector<std::u32string> theme_words(const NormalizedPoem& poem, const IdfTable& idf, const Segmenter& segmenter,
                                        const StopwordSet& stopwords, std::optional<std::size_t> k) {
  const std::size_t want = k.value_or(default_theme_count(poem.char_count));
  std::vector<std::u32string> out;
  for (auto& s : rank_theme_words(poem, idf, segmenter, stopwords)) {
    if (out.size() >= want) break;
    out.push_back(std::move(s.token));
  }
  return out;
}

namespace {

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_size(const std::string& s, std::size_t& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Ranks the distinct candidate units by distance to their centroid.
std::vector<RankedUnit> rank_by_centroid(const std::vector<std::u32string>& units, const EmbeddingTable& emb) {
  std::vector<std::u32string> candidates;
  std::vector<const std::vector<double>*> vecs;
  std::unordered_set<std::u32string> seen;
  std::u32string missing;
  for (const auto& u : units) {
    if (!seen.insert(u).second) continue;
    if (const auto* v = emb.find(u)) {
      candidates.push_back(u);
      vecs.push_back(v);
    } else {
      if (!missing.empty()) missing += U' ';
      missing += u;
    }
  }
  if (candidates.empty()) {
    throw Error("no_coverage", "no coverage: no candidate has an embedding (missing: " + to_utf8(missing) + ")");
  }
  std::vector<double> centroid(emb.dim(), 0.0);
  for (const auto* v : vecs) {
    for (std::size_t d = 0; d < centroid.size(); ++d) centroid[d] += (*v)[d];
  }
  for (double& c : centroid) c /= static_cast<double>(vecs.size());

  std::vector<RankedUnit> ranked;
  double max_distance = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double sq = 0.0;
    for (std::size_t d = 0; d < centroid.size(); ++d) {
      const double diff = (*vecs[i])[d] - centroid[d];
      sq += diff * diff;
    }
    ranked.push_back({candidates[i], std::sqrt(sq)});
    max_distance = std::max(max_distance, ranked.back().distance);
  }
  // Distances equal up to rounding count as ties, on a grid relative to the
  // largest distance so that rescaling the vectors cannot reorder them.
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const double rel = max_distance > 0.0 ? ranked[i].distance / max_distance : 0.0;
    order.emplace_back(std::round(std::ldexp(rel, 40)), i);
  }
  std::sort(order.begin(), order.end());
  std::vector<RankedUnit> out;
  out.reserve(ranked.size());
  for (const auto& [q, i] : order) out.push_back(std::move(ranked[i]));
  return out;
}

}  // namespace

EmbeddingTable EmbeddingTable::load(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw Error("embeddings", "embeddings line " + std::to_string(line_no) + ": " + why);
    };
    if (first) {
      first = false;
      std::size_t v = 0;
      std::size_t d = 0;
      if (fields.size() == 2 && parse_size(fields[0], v) && parse_size(fields[1], d)) {
        if (d == 0) fail("dimension must be positive");
        table.dim_ = d;
        continue;
      }
    }
    if (fields.size() < 2) fail("expected a token followed by components");
    const std::size_t d = fields.size() - 1;
    if (table.dim_ == 0) table.dim_ = d;
    if (d != table.dim_) {
      fail("dimension mismatch: expected " + std::to_string(table.dim_) + ", found " + std::to_string(d));
    }
    std::vector<double> vec(d);
    for (std::size_t i = 0; i < d; ++i) {
      if (!parse_double(fields[i + 1], vec[i]) || !std::isfinite(vec[i])) fail("bad component '" + fields[i + 1] + "'");
    }
    std::u32string token;
    try {
      token = from_utf8(fields[0]);
    } catch (const Utf8Error& e) {
      fail(e.what());
    }
    table.set(std::move(token), std::move(vec));
  }
  return table;
}

EmbeddingTable EmbeddingTable::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open embeddings " + path.string());
  return load(in);
}

void EmbeddingTable::set(std::u32string token, std::vector<double> vec) {
  if (dim_ == 0) dim_ = vec.size();
  if (vec.size() != dim_ || dim_ == 0) throw Error("embeddings", "vector dimension mismatch");
  auto [it, inserted] = vectors_.insert_or_assign(std::move(token), std::move(vec));
  if (!inserted) ++duplicates_;
}

const std::vector<double>* EmbeddingTable::find(const std::u32string& token) const {
  const auto it = vectors_.find(token);
  return it == vectors_.end() ? nullptr : &it->second;
}

std::vector<RankedUnit> rank_key_chars(const NormalizedPoem& poem, const EmbeddingTable& emb,
                                       const StopwordSet& stopwords) {
  std::vector<std::u32string> units;
  for (const auto& line : poem.lines) {
    for (char32_t ch : line) {
      std::u32string u(1, ch);
      if (ch == kGapChar || stopwords.count(u)) continue;
      units.push_back(std::move(u));
    }
  }
  return rank_by_centroid(units, emb);
}

std::vector<char32_t> key_chars(const NormalizedPoem& poem, const EmbeddingTable& emb, const StopwordSet& stopwords,
                                std::optional<std::size_t> k) {
  const std::size_t want = k.value_or(default_key_count(poem.char_count));
  std::vector<char32_t> out;
  for (const auto& r : rank_key_chars(poem, emb, stopwords)) {
    if (out.size() >= want) break;
    out.push_back(r.unit.front());
  }
  return out;
}

std::vector<std::u32string> key_words(const NormalizedPoem& poem, const EmbeddingTable& emb,
                                      const Segmenter& segmenter, const StopwordSet& stopwords,
                                      std::optional<std::size_t> k) {
  const std::size_t want = k.value_or(default_key_count(poem.char_count));
  std::vector<std::u32string> out;
  for (auto& r : rank_by_centroid(content_tokens(poem, segmenter, stopwords), emb)) {
    if (out.size() >= want) break;
    out.push_back(std::move(r.unit));
  }
  return out;
}

}  // namespace guiyun::extraction
