#include "guiyun/generation.h"

#include <algorithm>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "guiyun/error.h"
#include "guiyun/text.h"

namespace guiyun::generation {

StyleLexicon build_style_lexicon(std::string style_name, std::span<const NormalizedPoem> style_corpus,
                                 const ExtractionContext& ctx) {
  StyleLexicon out;
  out.style_name = std::move(style_name);
  for (const auto& poem : style_corpus) {
    for (auto& w : extraction::theme_words(poem, ctx.idf, ctx.segmenter, ctx.stopwords)) {
      out.theme_words.insert(std::move(w));
    }
    try {
      for (char32_t ch : extraction::key_chars(poem, ctx.embeddings, ctx.stopwords)) out.key_chars.insert(ch);
    } catch (const Error& e) {
      if (e.code() != "no_coverage") throw;
    }
  }
  if (out.theme_words.empty() || out.key_chars.empty()) {
    throw Error("empty_style", "style corpus yields no theme words or no key characters");
  }
  return out;
}

void check_style(const StyleLexicon& style, std::span<const std::u32string> theme_words,
                 std::span<const char32_t> key_chars) {
  std::vector<std::string> bad;
  for (const auto& w : theme_words) {
    if (!style.theme_words.count(w)) bad.push_back(to_utf8(w));
  }
  for (char32_t ch : key_chars) {
    if (!style.key_chars.count(ch)) bad.push_back(to_utf8(ch));
  }
  if (bad.empty()) return;
  std::string msg = "not in style lexicon '" + style.style_name + "': ";
  for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? ", " : "") + bad[i];
  throw Error("style_violation", msg);
}

nlohmann::json to_json(const StyleLexicon& style) {
  nlohmann::json theme = nlohmann::json::array();
  for (const auto& w : style.theme_words) theme.push_back(to_utf8(w));
  nlohmann::json keys = nlohmann::json::array();
  for (char32_t ch : style.key_chars) keys.push_back(to_utf8(ch));
  return {{"style", style.style_name}, {"theme_words", std::move(theme)}, {"key_chars", std::move(keys)}};
}

StyleLexicon style_from_json(const nlohmann::json& doc) {
  StyleLexicon out;
  try {
    out.style_name = doc.at("style").get<std::string>();
    for (const auto& w : doc.at("theme_words")) out.theme_words.insert(from_utf8(w.get<std::string>()));
    for (const auto& k : doc.at("key_chars")) {
      const auto ch = from_utf8(k.get<std::string>());
      if (ch.size() != 1) throw Error("invalid_style", "key entry must be one character");
      out.key_chars.insert(ch[0]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid_style", std::string("bad style lexicon: ") + e.what());
  }
  if (out.theme_words.empty() || out.key_chars.empty()) throw Error("empty_style", "style lexicon is empty");
  return out;
}

void save_style(const StyleLexicon& style, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << to_json(style).dump(2) << '\n';
  if (!out) throw Error("io", "write failed for " + path.string());
}

StyleLexicon load_style(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open style lexicon " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid_style", std::string("bad style lexicon: ") + e.what());
  }
  return style_from_json(doc);
}

namespace {

Generation run(const PromptSpec& prompt, const LanguageModel& lm, const prosody::RhymeBook& book,
               const DecodeOptions& options) {
  DecodeResult decoded = constrained_decode(lm, prompt, book, options);
  Generation out;
  out.report = prosody::validate(decoded.poem, prompt.genre, book, decoded.strictness_used);
  out.poem = std::move(decoded.poem);
  out.provenance.prompt = prompt;
  out.provenance.seed = options.seed;
  out.provenance.requested = options.strictness;
  out.provenance.strictness = decoded.strictness_used;
  out.provenance.beam_width = options.beam_width;
  out.provenance.lm_id = lm.id();
  out.provenance.notes = std::move(decoded.notes);
  out.provenance.log_prob = decoded.log_prob;
  return out;
}

}  // namespace

Generation generate_fs2text(std::u32string first_line, Genre genre, std::vector<std::u32string> theme_words,
                            std::vector<char32_t> key_chars, const StyleLexicon* style, const LanguageModel& lm,
                            const prosody::RhymeBook& book, const DecodeOptions& options) {
  if (style) check_style(*style, theme_words, key_chars);
  const PromptSpec prompt =
      assemble_fs2text_prompt(genre, std::move(theme_words), std::move(key_chars), std::move(first_line));
  return run(prompt, lm, book, options);
}

Generation generate_rr2text(const NormalizedPoem& original, const prosody::RhymeBook& book,
                            const ExtractionContext& extraction, const LanguageModel& lm,
                            const DecodeOptions& options, double theme_fraction, double key_fraction) {
  const PromptSpec prompt = assemble_rr2text_prompt(original, book, extraction, theme_fraction, key_fraction);
  return run(prompt, lm, book, options);
}

nlohmann::json to_json(const Generation& g) {
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& l : g.poem.lines) lines.push_back(to_utf8(l));
  const auto& p = g.provenance;
  return {{"poem", corpus::render(g.poem)},
          {"lines", std::move(lines)},
          {"genre", corpus::display_name(p.prompt.genre)},
          {"prompt", to_json(p.prompt)},
          {"seed", p.seed},
          {"strictness", prosody::strictness_name(p.strictness)},
          {"requested_strictness", prosody::strictness_name(p.requested)},
          {"beam_width", p.beam_width},
          {"lm_id", p.lm_id},
          {"notes", p.notes},
          {"log_prob", p.log_prob},
          {"meter", prosody::to_json(g.report)}};
}

std::vector<TrainingPair> assemble_training_pairs(std::span<const NormalizedPoem> corpus,
                                                  const ExtractionContext& ctx, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TrainingPair> out;
  for (const auto& poem : corpus) {
    const Genre genre = corpus::classify_genre(poem);
    if (poem.has_gaps || genre == Genre::Other) continue;
    auto theme = extraction::theme_words(poem, ctx.idf, ctx.segmenter, ctx.stopwords);
    std::vector<char32_t> keys;
    try {
      keys = extraction::key_chars(poem, ctx.embeddings, ctx.stopwords);
    } catch (const Error& e) {
      if (e.code() != "no_coverage") throw;
    }
    theme.resize(std::uniform_int_distribution<std::size_t>(0, theme.size())(rng));
    keys.resize(std::uniform_int_distribution<std::size_t>(0, keys.size())(rng));
    const PromptSpec spec = assemble_fs2text_prompt(genre, std::move(theme), std::move(keys), poem.lines.front());
    out.push_back({serialize(spec), corpus::render(poem)});
  }
  return out;
}

}  // namespace guiyun::generation
