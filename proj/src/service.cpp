#include "guiyun/service.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>

#include "guiyun/error.h"
#include "guiyun/text.h"

extern char** environ;

namespace guiyun::service {

using nlohmann::json;
using prosody::Strictness;

namespace {

std::filesystem::path resolve(const std::string& value, const std::filesystem::path& base) {
  std::filesystem::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size() || v < 1) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error("config", key + " must be a positive integer, got '" + value + "'");
  }
}

void require_file(const char* key, const std::filesystem::path& p) {
  if (p.empty()) throw Error("config", std::string(key) + " is not set");
  if (!std::filesystem::exists(p)) throw Error("config", std::string(key) + " " + p.string() + " does not exist");
}

const json& require_object(const json& body) {
  if (!body.is_object()) throw Error("invalid_request", "request body must be a JSON object");
  return body;
}

std::string get_string(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end() || !it->is_string()) {
    throw Error("invalid_request", std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

template <typename T>
std::optional<T> get_number(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw Error("invalid_request", std::string("field '") + key + "' must be a number");
  if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer() || (it->is_number_integer() && !it->is_number_unsigned() && it->get<long long>() < 0)) {
      throw Error("invalid_request", std::string("field '") + key + "' must be a non-negative integer");
    }
  }
  return it->get<T>();
}

std::vector<std::u32string> get_words(const json& body, const char* key) {
  std::vector<std::u32string> out;
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) return out;
  if (!it->is_array()) throw Error("invalid_request", std::string("field '") + key + "' must be an array");
  for (const auto& w : *it) {
    if (!w.is_string()) throw Error("invalid_request", std::string("field '") + key + "' must hold strings");
    out.push_back(from_utf8(w.get<std::string>()));
  }
  return out;
}

// Accepts ["烟", "一"] or the block "烟一".
std::vector<char32_t> get_chars(const json& body, const char* key) {
  std::vector<char32_t> out;
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) return out;
  if (it->is_string()) {
    for (char32_t ch : from_utf8(it->get<std::string>())) out.push_back(ch);
    return out;
  }
  for (const auto& w : get_words(body, key)) {
    if (w.size() != 1) throw Error("invalid_request", std::string("entries of '") + key + "' must be single characters");
    out.push_back(w[0]);
  }
  return out;
}

std::optional<Strictness> get_strictness(const json& body) {
  const auto it = body.find("strictness");
  if (it == body.end() || it->is_null()) return std::nullopt;
  const auto s = it->is_string() ? prosody::parse_strictness(it->get<std::string>()) : std::nullopt;
  if (!s) throw Error("invalid_request", "strictness must be one of off, rhyme-only, relaxed, strict");
  return s;
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

constexpr std::size_t kMaxBeam = 1024;

generation::DecodeOptions decode_options(const json& body, const ServiceConfig& config) {
  generation::DecodeOptions o;
  o.strictness = get_strictness(body).value_or(config.strictness);
  o.beam_width = get_number<std::size_t>(body, "beam_width").value_or(config.beam_width);
  if (o.beam_width < 1 || o.beam_width > kMaxBeam) {
    throw Error("invalid_request", "beam_width must lie in 1.." + std::to_string(kMaxBeam));
  }
  o.seed = get_number<std::uint64_t>(body, "seed").value_or(fresh_seed());
  return o;
}

std::optional<double> get_fraction(const json& body, const char* key) {
  const auto v = get_number<double>(body, key);
  if (v && !(*v >= 0.0 && *v <= 1.0)) throw Error("invalid_request", std::string(key) + " must lie in [0, 1]");
  return v;
}

}  // namespace

void ServiceConfig::set(const std::string& key, const std::string& value, const std::filesystem::path& base) {
  if (key == "host") {
    host = value;
  } else if (key == "port") {
    const std::size_t p = parse_count(key, value);
    if (p > 65535) throw Error("config", "port out of range: " + value);
    port = static_cast<int>(p);
  } else if (key == "corpus") {
    corpus = resolve(value, base);
  } else if (key == "rhyme_book") {
    rhyme_book = resolve(value, base);
  } else if (key == "embeddings") {
    embeddings = resolve(value, base);
  } else if (key == "stopwords") {
    stopwords = resolve(value, base);
  } else if (key == "lexicon") {
    lexicon = value.empty() ? std::filesystem::path() : resolve(value, base);
  } else if (key == "ledger") {
    ledger = resolve(value, base);
  } else if (key == "model") {
    model = value.empty() ? std::filesystem::path() : resolve(value, base);
  } else if (key == "model_command") {
    model_command = value;
  } else if (key == "ngram_order") {
    ngram_order = parse_count(key, value);
  } else if (key == "strictness") {
    const auto s = prosody::parse_strictness(value);
    if (!s) throw Error("config", "unknown strictness '" + value + "'");
    strictness = *s;
  } else if (key == "beam_width") {
    beam_width = parse_count(key, value);
  } else if (key == "cors_origin") {
    cors_origin = value;
  } else if (key.rfind("style.", 0) == 0 && key.size() > 6) {
    styles[key.substr(6)] = resolve(value, base);
  } else {
    throw Error("config", "unknown setting '" + key + "'");
  }
}

void ServiceConfig::validate() const {
  if (port < 1 || port > 65535) throw Error("config", "port out of range");
  require_file("corpus", corpus);
  require_file("rhyme_book", rhyme_book);
  require_file("embeddings", embeddings);
  require_file("stopwords", stopwords);
  if (!lexicon.empty()) require_file("lexicon", lexicon);
  if (!model.empty() && model_command.empty()) require_file("model", model);
  for (const auto& [name, path] : styles) require_file(("style." + name).c_str(), path);
  if (ledger.empty()) throw Error("config", "ledger is not set");
  const auto dir = ledger.has_parent_path() ? ledger.parent_path() : std::filesystem::path(".");
  if (!std::filesystem::is_directory(dir)) throw Error("config", "ledger directory " + dir.string() + " does not exist");
}

ServiceConfig load_config(const std::optional<std::filesystem::path>& file,
                          const std::map<std::string, std::string>& env) {
  ServiceConfig config;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw Error("config", "cannot open config file " + file->string());
    const auto base = file->has_parent_path() ? file->parent_path() : std::filesystem::path();
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw Error("config", file->string() + " line " + std::to_string(no) + ": expected key=value");
      }
      config.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)), base);
    }
  }
  for (const auto& [name, value] : env) {
    if (name.rfind("GUIYUN_", 0) != 0) continue;
    std::string key = name.substr(7);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    if (key.rfind("style_", 0) == 0) key = "style." + key.substr(6);
    config.set(key, value);
  }
  return config;
}

std::map<std::string, std::string> environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv(*e);
    const auto eq = kv.find('=');
    if (eq != std::string::npos) out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

std::vector<corpus::NormalizedPoem> load_poems(const std::filesystem::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw Error("io", "cannot open corpus " + csv.string());
  const auto parsed = corpus::parse_corpus(in, csv.filename().string());
  std::vector<corpus::NormalizedPoem> out;
  for (const auto& r : corpus::deduplicate(parsed.records)) {
    try {
      out.push_back(corpus::normalize(r));
    } catch (const Error& e) {
      if (e.code() != "empty_poem") throw;
    }
  }
  return out;
}

Resources::Resources(const ServiceConfig& config) : config_(config) {
  config_.validate();
  book_ = prosody::RhymeBook::load_file(config_.rhyme_book);
  if (!config_.lexicon.empty()) segmenter_ = extraction::MaxMatchSegmenter::load_file(config_.lexicon);
  stopwords_ = extraction::load_stopwords_file(config_.stopwords);
  embeddings_ = extraction::EmbeddingTable::load_file(config_.embeddings);
  const auto poems = load_poems(config_.corpus);
  idf_ = extraction::build_idf(poems, segmenter_, stopwords_);
  if (!config_.model_command.empty()) {
    lm_ = std::make_unique<generation::ProcessModel>(split_whitespace(config_.model_command));
  } else if (!config_.model.empty()) {
    lm_ = std::make_unique<generation::NGramModel>(generation::NGramModel::load_file(config_.model));
  } else {
    std::vector<corpus::NormalizedPoem> clean;
    std::copy_if(poems.begin(), poems.end(), std::back_inserter(clean), [](const auto& p) { return !p.has_gaps; });
    lm_ = std::make_unique<generation::NGramModel>(generation::NGramModel::train(clean, config_.ngram_order));
  }
  for (const auto& [name, path] : config_.styles) styles_.emplace(name, generation::load_style(path));
  ledger_ = std::make_unique<ledger::Ledger>(config_.ledger);
}

json error_json(const std::string& code, const std::string& message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

int http_status(const std::string& code) {
  static const char* const internal[] = {"io", "lm_adapter", "ledger_corrupt", "ledger_locked", "internal"};
  return std::find(std::begin(internal), std::end(internal), code) != std::end(internal) ? 500 : 400;
}

json analyze_text(const std::string& text, const prosody::RhymeBook& book, std::optional<Strictness> strictness) {
  const auto poem = corpus::normalize(text);
  const auto genre = corpus::classify_genre(poem);
  json lines = json::array();
  for (const auto& l : poem.lines) lines.push_back(to_utf8(l));
  json out = {{"genre", corpus::display_name(genre)},
              {"genre_id", corpus::genre_id(genre)},
              {"lines", std::move(lines)},
              {"char_count", poem.char_count},
              {"has_gaps", poem.has_gaps}};
  if (genre == corpus::Genre::Other) {
    out["rhyme_group"] = json::array();
    out["report"] = nullptr;
    out["error"] = error_json("no_template", "no template")["error"];
    return out;
  }
  const auto detection = prosody::detect_rhyme_group(poem, book);
  json missing = json::array();
  for (char32_t ch : detection.missing) missing.push_back(to_utf8(ch));
  out["rhyme_group"] = detection.groups;
  out["first_line_rhymes"] = detection.first_line_rhymes;
  out["missing"] = std::move(missing);
  json levels = json::object();
  for (Strictness s : {Strictness::Off, Strictness::RhymeOnly, Strictness::Relaxed, Strictness::Strict}) {
    levels[std::string(prosody::strictness_name(s))] =
        prosody::overall_name(prosody::validate(poem, genre, book, s).overall);
  }
  out["overall_by_strictness"] = std::move(levels);
  out["report"] = prosody::to_json(prosody::validate(poem, genre, book, strictness.value_or(Strictness::Relaxed)));
  return out;
}

json extract_text(const std::string& text, const generation::ExtractionContext& ctx, std::optional<std::size_t> k_theme,
                  std::optional<std::size_t> k_key) {
  const auto poem = corpus::normalize(text);
  const std::size_t kt = k_theme.value_or(extraction::default_theme_count(poem.char_count));
  const std::size_t kk = k_key.value_or(extraction::default_key_count(poem.char_count));
  json theme = json::array();
  for (const auto& w : extraction::theme_words(poem, ctx.idf, ctx.segmenter, ctx.stopwords, kt)) {
    theme.push_back(to_utf8(w));
  }
  json keys = json::array();
  json notes = json::array();
  try {
    for (char32_t ch : extraction::key_chars(poem, ctx.embeddings, ctx.stopwords, kk)) keys.push_back(to_utf8(ch));
  } catch (const Error& e) {
    if (e.code() != "no_coverage") throw;
    notes.push_back(e.what());
  }
  return {{"theme_words", std::move(theme)},
          {"key_chars", std::move(keys)},
          {"k_theme", kt},
          {"k_key", kk},
          {"char_count", poem.char_count},
          {"notes", std::move(notes)}};
}

json Api::record(const generation::Generation& g) {
  json out = generation::to_json(g);
  const auto r = res_.ledger().record(corpus::render(g.poem), {generation::serialize(g.provenance.prompt),
                                                                g.provenance.lm_id, g.provenance.seed});
  out["entry_id"] = r.entry_id;
  out["ledger_created"] = r.created;
  return out;
}

json Api::generate(const json& body) {
  require_object(body);
  const std::string genre_name = get_string(body, "genre");
  const auto genre = corpus::parse_genre(genre_name);
  if (!genre) throw Error("invalid_request", "unknown genre '" + genre_name + "'");
  if (*genre == corpus::Genre::Other) throw Error("unsupported_genre", "unsupported genre");
  const generation::StyleLexicon* style = nullptr;
  if (const auto it = body.find("style"); it != body.end() && !it->is_null()) {
    const std::string name = get_string(body, "style");
    const auto s = res_.styles().find(name);
    if (s == res_.styles().end()) throw Error("unknown_style", "unknown style '" + name + "'");
    style = &s->second;
  }
  const auto options = decode_options(body, res_.config());
  const auto g = generation::generate_fs2text(from_utf8(get_string(body, "first_line")), *genre,
                                              get_words(body, "theme_words"), get_chars(body, "key_chars"), style,
                                              res_.lm(), res_.book(), options);
  return record(g);
}

json Api::follow_rhyme(const json& body) {
  require_object(body);
  const auto original = corpus::normalize(get_string(body, "text"));
  auto options = decode_options(body, res_.config());
  if (const auto it = body.find("same_group_only"); it != body.end() && !it->is_null()) {
    if (!it->is_boolean()) throw Error("invalid_request", "same_group_only must be a boolean");
    options.same_group_only = it->get<bool>();
  }
  const auto g = generation::generate_rr2text(original, res_.book(), res_.extraction(), res_.lm(), options,
                                              get_fraction(body, "theme_fraction").value_or(0.5),
                                              get_fraction(body, "key_fraction").value_or(0.5));
  return record(g);
}

json Api::analyze(const json& body) const {
  require_object(body);
  return analyze_text(get_string(body, "text"), res_.book(), get_strictness(body));
}

json Api::extract(const json& body) const {
  require_object(body);
  return extract_text(get_string(body, "text"), res_.extraction(), get_number<std::size_t>(body, "k_theme"),
                      get_number<std::size_t>(body, "k_key"));
}

json Api::ledger_check(const std::string& text) const {
  const auto entry = res_.ledger().check(text);
  return {{"found", entry.has_value()}, {"entry", entry ? ledger::to_json(*entry) : json(nullptr)}};
}

}  // namespace guiyun::service
