// guiyun: command-line front end. Each subcommand wraps one library call and
// prints JSON on stdout. Exit status: 0 success, 1 domain error, 2 usage.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "guiyun/corpus.h"
#include "guiyun/csv.h"
#include "guiyun/error.h"
#include "guiyun/evaluation.h"
#include "guiyun/extraction.h"
#include "guiyun/generation.h"
#include "guiyun/ledger.h"
#include "guiyun/server.h"
#include "guiyun/service.h"
#include "guiyun/text.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace guiyun;

namespace {

struct Paths {
  std::string config;
  std::string corpus;
  std::string rhyme_book;
  std::string embeddings;
  std::string stopwords;
  std::string lexicon;
  std::string model;
  std::string ledger;
};

void add_paths(CLI::App* cmd, Paths& p, bool corpus, bool book, bool extraction, bool model, bool ledger) {
  cmd->add_option("--config", p.config, "key=value settings file");
  if (corpus) cmd->add_option("--corpus", p.corpus, "poem CSV (title,dynasty,author,content)");
  if (book) cmd->add_option("--rhyme-book", p.rhyme_book, "rhyme book TSV");
  if (extraction) {
    cmd->add_option("--embeddings", p.embeddings, "character vectors");
    cmd->add_option("--stopwords", p.stopwords, "stopword list");
    cmd->add_option("--lexicon", p.lexicon, "segmentation lexicon");
  }
  if (model) cmd->add_option("--model", p.model, "saved n-gram model (trained from --corpus otherwise)");
  if (ledger) cmd->add_option("--ledger", p.ledger, "ledger file to record into");
}

// Defaults from the bundled data directory, then the config file and
// GUIYUN_* variables, then explicit flags.
service::ServiceConfig resolve_config(const Paths& p) {
  service::ServiceConfig defaults;
  const fs::path data = GUIYUN_DATA_DIR;
  defaults.corpus = data / "corpus.csv";
  defaults.rhyme_book = data / "rhyme_book.tsv";
  defaults.embeddings = data / "embeddings.txt";
  defaults.stopwords = data / "stopwords.txt";
  defaults.lexicon = data / "lexicon.txt";

  service::ServiceConfig c = service::load_config(p.config.empty() ? std::nullopt : std::optional<fs::path>(p.config),
                                                  service::environment());
  auto pick = [](fs::path& field, const fs::path& fallback, const std::string& flag) {
    if (!flag.empty()) field = flag;
    else if (field.empty()) field = fallback;
  };
  pick(c.corpus, defaults.corpus, p.corpus);
  pick(c.rhyme_book, defaults.rhyme_book, p.rhyme_book);
  pick(c.embeddings, defaults.embeddings, p.embeddings);
  pick(c.stopwords, defaults.stopwords, p.stopwords);
  pick(c.lexicon, defaults.lexicon, p.lexicon);
  if (!p.model.empty()) c.model = p.model;
  if (!p.ledger.empty()) c.ledger = p.ledger;
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string poem_text(const std::string& text, const std::string& file) {
  if (!text.empty()) return text;
  if (!file.empty()) return read_file(file);
  throw Error("usage", "give --text or --poem-file");
}

struct ExtractionData {
  extraction::MaxMatchSegmenter segmenter;
  extraction::StopwordSet stopwords;
  extraction::EmbeddingTable embeddings;
  extraction::IdfTable idf;
  std::vector<corpus::NormalizedPoem> poems;

  explicit ExtractionData(const service::ServiceConfig& c)
      : segmenter(c.lexicon.empty() || !fs::exists(c.lexicon) ? extraction::MaxMatchSegmenter()
                                                              : extraction::MaxMatchSegmenter::load_file(c.lexicon)),
        stopwords(extraction::load_stopwords_file(c.stopwords)),
        embeddings(extraction::EmbeddingTable::load_file(c.embeddings)),
        poems(service::load_poems(c.corpus)) {
    idf = extraction::build_idf(poems, segmenter, stopwords);
  }

  generation::ExtractionContext context() const { return {idf, embeddings, segmenter, stopwords}; }
};

std::unique_ptr<generation::LanguageModel> load_model(const service::ServiceConfig& c,
                                                      const std::vector<corpus::NormalizedPoem>* poems) {
  if (!c.model_command.empty()) return std::make_unique<generation::ProcessModel>(split_whitespace(c.model_command));
  if (!c.model.empty()) return std::make_unique<generation::NGramModel>(generation::NGramModel::load_file(c.model));
  std::vector<corpus::NormalizedPoem> loaded;
  if (!poems) {
    loaded = service::load_poems(c.corpus);
    poems = &loaded;
  }
  std::vector<corpus::NormalizedPoem> clean;
  for (const auto& p : *poems) {
    if (!p.has_gaps) clean.push_back(p);
  }
  return std::make_unique<generation::NGramModel>(generation::NGramModel::train(clean, c.ngram_order));
}

prosody::Strictness parse_level(const std::string& s) {
  const auto level = prosody::parse_strictness(s);
  if (!level) throw Error("usage", "unknown strictness '" + s + "'");
  return *level;
}

json record_if_configured(const service::ServiceConfig& c, const generation::Generation& g) {
  json out = generation::to_json(g);
  if (!c.ledger.empty()) {
    ledger::Ledger book(c.ledger);
    const auto r = book.record(corpus::render(g.poem), {generation::serialize(g.provenance.prompt),
                                                        g.provenance.lm_id, g.provenance.seed});
    out["entry_id"] = r.entry_id;
    out["ledger_created"] = r.created;
  }
  return out;
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regulated-verse generation toolkit"};
  app.require_subcommand(1);

  Paths paths;
  std::string text, poem_file, out_path, strictness = "relaxed", genre, first_line, style_file, name;
  std::vector<std::string> theme, keys;
  std::uint64_t seed = 0;
  std::size_t beam = 16, order = 3;
  std::optional<std::size_t> k_theme, k_key;
  double theme_fraction = 0.5, key_fraction = 0.5, boost = std::exp(1.0), noise = 1.0;
  bool same_group = false;
  std::string input, key_file, responses, pairs_file, questionnaire_out, key_out, host;
  int port = 0;

  auto* ingest = app.add_subcommand("ingest", "parse, deduplicate and classify a corpus CSV");
  ingest->add_option("input", input, "corpus CSV")->required();
  ingest->add_option("--out", out_path, "write the deduplicated corpus here");

  auto* extract = app.add_subcommand("extract", "theme words and key characters");
  add_paths(extract, paths, true, false, true, false, false);
  extract->add_option("--text", text, "poem text");
  extract->add_option("--poem-file", poem_file, "file holding one poem");
  extract->add_option("--input", input, "CSV of poems; one JSON object per line");
  extract->add_option("--k-theme", k_theme, "theme word count");
  extract->add_option("--k-key", k_key, "key character count");

  auto* analyze = app.add_subcommand("analyze", "genre, rhyme group and meter report");
  add_paths(analyze, paths, false, true, false, false, false);
  analyze->add_option("--text", text, "poem text");
  analyze->add_option("--poem-file", poem_file, "file holding one poem");
  analyze->add_option("--strictness", strictness, "off, rhyme-only, relaxed or strict");

  auto* train = app.add_subcommand("train-lm", "train the character n-gram model");
  add_paths(train, paths, true, false, false, false, false);
  train->add_option("--order", order, "n-gram order")->check(CLI::PositiveNumber);
  train->add_option("--out", out_path, "model file")->required();

  auto* generate = app.add_subcommand("generate", "FS2TEXT: complete a poem from its first line");
  add_paths(generate, paths, true, true, false, true, true);
  generate->add_option("--genre", genre, "五言绝句 / wujue, 七言绝句 / qijue, ...")->required();
  generate->add_option("--first-line", first_line, "first line")->required();
  generate->add_option("--theme", theme, "theme words");
  generate->add_option("--key", keys, "key characters");
  generate->add_option("--style", style_file, "style lexicon JSON");
  generate->add_option("--seed", seed, "decoder seed");
  generate->add_option("--strictness", strictness, "off, rhyme-only, relaxed or strict");
  generate->add_option("--beam", beam, "beam width")->check(CLI::PositiveNumber);
  generate->add_option("--boost", boost, "conditioning boost factor");
  generate->add_option("--noise", noise, "Gumbel noise scale (0 = plain beam search)");

  auto* follow = app.add_subcommand("follow-rhyme", "RR2TEXT: write a poem on another poem's rhyme");
  add_paths(follow, paths, true, true, true, true, true);
  follow->add_option("--text", text, "original poem text");
  follow->add_option("--poem-file", poem_file, "file holding the original poem");
  follow->add_option("--seed", seed, "decoder seed");
  follow->add_option("--strictness", strictness, "off, rhyme-only, relaxed or strict");
  follow->add_option("--beam", beam, "beam width")->check(CLI::PositiveNumber);
  follow->add_option("--theme-fraction", theme_fraction, "share of theme words kept")->check(CLI::Range(0.0, 1.0));
  follow->add_option("--key-fraction", key_fraction, "share of key characters kept")->check(CLI::Range(0.0, 1.0));
  follow->add_flag("--same-group", same_group, "reuse the rhyme group, not the exact characters");
  follow->add_option("--noise", noise, "Gumbel noise scale (0 = plain beam search)");

  auto* style = app.add_subcommand("style-lexicon", "build a style lexicon from a single-style corpus");
  add_paths(style, paths, true, false, true, false, false);
  style->add_option("style_corpus", input, "CSV of poems in one style")->required();
  style->add_option("--name", name, "style name")->required();
  style->add_option("--out", out_path, "lexicon JSON")->required();

  auto* tbuild = app.add_subcommand("turing-build", "build a blind A/B questionnaire");
  tbuild->add_option("pairs", pairs_file, "CSV human,machine (header optional)")->required();
  tbuild->add_option("--seed", seed, "A/B assignment seed");
  tbuild->add_option("--questionnaire", questionnaire_out, "questionnaire JSON")->required();
  tbuild->add_option("--key", key_out, "answer key JSON")->required();

  auto* tscore = app.add_subcommand("turing-score", "score response sheets against the key");
  tscore->add_option("--key", key_file, "answer key JSON")->required();
  tscore->add_option("--responses", responses, "CSV respondent_id,item_id,choice")->required();

  auto* lcheck = app.add_subcommand("ledger-check", "was this poem generated here?");
  add_paths(lcheck, paths, false, false, false, false, true);
  lcheck->add_option("--text", text, "poem text");
  lcheck->add_option("--poem-file", poem_file, "file holding the poem");

  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  serve->add_option("--config", paths.config, "key=value settings file");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port")->check(CLI::Range(1, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (ingest->parsed()) {
      std::ifstream in(input, std::ios::binary);
      if (!in) throw Error("io", "cannot open " + input);
      const auto parsed = corpus::parse_corpus(in, fs::path(input).filename().string());
      const auto unique = corpus::deduplicate(parsed.records);
      std::map<std::string, std::size_t> genres;
      std::size_t gaps = 0;
      json errors = json::array();
      for (const auto& e : parsed.errors) errors.push_back({{"record", e.record}, {"message", e.message}});
      for (const auto& r : unique) {
        try {
          const auto poem = corpus::normalize(r);
          ++genres[std::string(corpus::genre_id(corpus::classify_genre(poem)))];
          gaps += poem.has_gaps ? 1 : 0;
        } catch (const Error& e) {
          errors.push_back({{"source_id", r.source_id}, {"message", e.what()}});
        }
      }
      if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw Error("io", "cannot write " + out_path);
        corpus::write_corpus(out, unique, true);
      }
      print({{"records", parsed.records.size()},
             {"unique", unique.size()},
             {"duplicates", parsed.records.size() - unique.size()},
             {"with_gaps", gaps},
             {"genres", genres},
             {"had_header", parsed.had_header},
             {"errors", errors}});
    } else if (extract->parsed()) {
      const auto cfg = resolve_config(paths);
      const ExtractionData data(cfg);
      if (!input.empty()) {
        std::ifstream in(input, std::ios::binary);
        if (!in) throw Error("io", "cannot open " + input);
        for (const auto& r : corpus::parse_corpus(in, input).records) {
          json j = service::extract_text(r.content, data.context(), k_theme, k_key);
          j["source_id"] = r.source_id;
          j["title"] = r.title;
          std::cout << j.dump() << '\n';
        }
      } else {
        print(service::extract_text(poem_text(text, poem_file), data.context(), k_theme, k_key));
      }
    } else if (analyze->parsed()) {
      const auto cfg = resolve_config(paths);
      const auto book = prosody::RhymeBook::load_file(cfg.rhyme_book);
      print(service::analyze_text(poem_text(text, poem_file), book, parse_level(strictness)));
    } else if (train->parsed()) {
      const auto cfg = resolve_config(paths);
      std::vector<corpus::NormalizedPoem> clean;
      for (auto& p : service::load_poems(cfg.corpus)) {
        if (!p.has_gaps) clean.push_back(std::move(p));
      }
      const auto model = generation::NGramModel::train(clean, order);
      model.save_file(out_path);
      print({{"model", out_path}, {"id", model.id()}, {"poems", clean.size()}, {"vocabulary", model.vocabulary().size()}});
    } else if (generate->parsed()) {
      const auto cfg = resolve_config(paths);
      const auto book = prosody::RhymeBook::load_file(cfg.rhyme_book);
      const auto lm = load_model(cfg, nullptr);
      const auto g_genre = corpus::parse_genre(genre);
      if (!g_genre) throw Error("invalid_prompt", "unknown genre '" + genre + "'");
      std::vector<std::u32string> theme_words;
      for (const auto& w : theme) theme_words.push_back(from_utf8(w));
      std::vector<char32_t> key_chars;
      for (const auto& k : keys) {
        for (char32_t ch : from_utf8(k)) key_chars.push_back(ch);
      }
      std::optional<generation::StyleLexicon> lexicon;
      if (!style_file.empty()) lexicon = generation::load_style(style_file);
      generation::DecodeOptions o;
      o.strictness = parse_level(strictness);
      o.beam_width = beam;
      o.seed = seed;
      o.boost = boost;
      o.noise = noise;
      const auto g = generation::generate_fs2text(from_utf8(first_line), *g_genre, std::move(theme_words),
                                                  std::move(key_chars), lexicon ? &*lexicon : nullptr, *lm, book, o);
      print(record_if_configured(cfg, g));
    } else if (follow->parsed()) {
      const auto cfg = resolve_config(paths);
      const auto book = prosody::RhymeBook::load_file(cfg.rhyme_book);
      const ExtractionData data(cfg);
      const auto lm = load_model(cfg, &data.poems);
      generation::DecodeOptions o;
      o.strictness = parse_level(strictness);
      o.beam_width = beam;
      o.seed = seed;
      o.noise = noise;
      o.same_group_only = same_group;
      const auto original = corpus::normalize(poem_text(text, poem_file));
      const auto g =
          generation::generate_rr2text(original, book, data.context(), *lm, o, theme_fraction, key_fraction);
      print(record_if_configured(cfg, g));
    } else if (style->parsed()) {
      const auto cfg = resolve_config(paths);
      const ExtractionData data(cfg);
      const auto lexicon = generation::build_style_lexicon(name, service::load_poems(input), data.context());
      generation::save_style(lexicon, out_path);
      print(generation::to_json(lexicon));
    } else if (tbuild->parsed()) {
      const std::string bytes = read_file(pairs_file);
      CsvReader reader(bytes);
      std::vector<evaluation::PoemPair> pairs;
      for (std::size_t row = 1; !reader.done(); ++row) {
        const auto rec = reader.next();
        if (rec.blank()) continue;
        if (!rec.error.empty() || rec.fields.size() != 2) {
          throw Error("invalid_pairs", "row " + std::to_string(row) + ": expected human,machine");
        }
        if (row == 1 && rec.fields[0] == "human" && rec.fields[1] == "machine") continue;
        pairs.push_back({corpus::normalize(rec.fields[0]), corpus::normalize(rec.fields[1])});
      }
      const auto set = evaluation::build_turing_set(pairs, seed);
      std::ofstream q(questionnaire_out);
      std::ofstream k(key_out);
      if (!q || !k) throw Error("io", "cannot write questionnaire or key");
      q << evaluation::questionnaire_json(set.items).dump(2) << '\n';
      k << evaluation::key_json(set.key).dump(2) << '\n';
      print({{"items", set.items.size()}, {"questionnaire", questionnaire_out}, {"key", key_out}});
    } else if (tscore->parsed()) {
      const auto key = evaluation::key_from_json(json::parse(read_file(key_file)));
      std::ifstream in(responses, std::ios::binary);
      if (!in) throw Error("io", "cannot open " + responses);
      const auto parsed = evaluation::parse_responses(in);
      json report = evaluation::to_json(evaluation::score_responses(key, parsed.sheets));
      report["row_errors"] = parsed.errors;
      print(report);
    } else if (lcheck->parsed()) {
      const auto cfg = resolve_config(paths);
      if (cfg.ledger.empty()) throw Error("usage", "give --ledger");
      const ledger::Ledger book(cfg.ledger, ledger::Ledger::Access::ReadOnly);
      const auto entry = book.check(poem_text(text, poem_file));
      print({{"found", entry.has_value()}, {"entry", entry ? ledger::to_json(*entry) : json(nullptr)}});
    } else if (serve->parsed()) {
      auto cfg = service::load_config(paths.config.empty() ? std::nullopt : std::optional<fs::path>(paths.config),
                                      service::environment());
      if (!host.empty()) cfg.host = host;
      if (port != 0) cfg.port = port;
      service::Resources resources(cfg);
      service::Api api(resources);
      service::HttpServer server(api, cfg.cors_origin);
      const int bound = server.bind(cfg.host, cfg.port);
      std::cerr << "listening on " << cfg.host << ":" << bound << std::endl;
      server.listen();
    }
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << '\n';
    return e.code() == "usage" ? 2 : 1;
  } catch (const json::exception& e) {
    std::cerr << "error [invalid_json]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
