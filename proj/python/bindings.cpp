#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "guiyun/corpus.h"
#include "guiyun/error.h"
#include "guiyun/evaluation.h"
#include "guiyun/ledger.h"
#include "guiyun/prompt.h"
#include "guiyun/prosody.h"
#include "guiyun/service.h"
#include "guiyun/text.h"

namespace py = pybind11;
using nlohmann::json;

namespace {

// Owned for the life of the interpreter; never released.
py::handle error_type;

std::string normalize_json(const std::string& text) {
  const auto poem = guiyun::corpus::normalize(text);
  json lines = json::array();
  for (const auto& l : poem.lines) lines.push_back(guiyun::to_utf8(l));
  return json{{"lines", std::move(lines)},
              {"line_lengths", poem.line_lengths},
              {"char_count", poem.char_count},
              {"has_gaps", poem.has_gaps},
              {"genre", guiyun::corpus::genre_id(guiyun::corpus::classify_genre(poem))}}
      .dump();
}

std::string fs2text_prompt(const std::string& genre, const std::vector<std::string>& theme_words,
                           const std::string& key_chars, const std::string& first_line) {
  const auto g = guiyun::corpus::parse_genre(genre);
  if (!g) throw guiyun::Error("invalid_request", "unknown genre '" + genre + "'");
  std::vector<std::u32string> theme;
  for (const auto& w : theme_words) theme.push_back(guiyun::from_utf8(w));
  const auto keys = guiyun::from_utf8(key_chars);
  return guiyun::generation::serialize(guiyun::generation::assemble_fs2text_prompt(
      *g, std::move(theme), std::vector<char32_t>(keys.begin(), keys.end()), guiyun::from_utf8(first_line)));
}

std::string score_turing(const std::string& key_json, const std::string& responses_csv) {
  const auto key = guiyun::evaluation::key_from_json(json::parse(key_json));
  std::istringstream in(responses_csv);
  const auto parsed = guiyun::evaluation::parse_responses(in);
  auto doc = guiyun::evaluation::to_json(guiyun::evaluation::score_responses(key, parsed.sheets));
  doc["row_errors"] = parsed.errors;
  return doc.dump();
}

/// Resources plus the request handlers, built from key=value settings.
class Service {
 public:
  explicit Service(const std::map<std::string, std::string>& settings) {
    guiyun::service::ServiceConfig config;
    for (const auto& [k, v] : settings) config.set(k, v);
    resources_ = std::make_unique<guiyun::service::Resources>(config);
    api_ = std::make_unique<guiyun::service::Api>(*resources_);
  }

  std::string call(const std::string& endpoint, const std::string& body) {
    const json request = json::parse(body);
    py::gil_scoped_release release;
    if (endpoint == "generate") return api_->generate(request).dump();
    if (endpoint == "follow_rhyme") return api_->follow_rhyme(request).dump();
    if (endpoint == "analyze") return api_->analyze(request).dump();
    if (endpoint == "extract") return api_->extract(request).dump();
    throw guiyun::Error("invalid_request", "unknown endpoint '" + endpoint + "'");
  }

  std::string ledger_check(const std::string& text) const { return api_->ledger_check(text).dump(); }

 private:
  std::unique_ptr<guiyun::service::Resources> resources_;
  std::unique_ptr<guiyun::service::Api> api_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the guiyun package; structured results are JSON text.";

  error_type = py::exception<guiyun::Error>(m, "Error", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const guiyun::Error& e) {
      PyErr_SetObject(error_type.ptr(), py::make_tuple(e.code(), e.what()).ptr());
    } catch (const json::exception& e) {
      PyErr_SetObject(error_type.ptr(), py::make_tuple("invalid_json", e.what()).ptr());
    }
  });

  m.def("normalize", &normalize_json, py::arg("text"));
  m.def("fs2text_prompt", &fs2text_prompt, py::arg("genre"), py::arg("theme_words"), py::arg("key_chars"),
        py::arg("first_line"));
  m.def(
      "parse_prompt",
      [](const std::string& text) { return guiyun::generation::to_json(guiyun::generation::parse_prompt(text)).dump(); },
      py::arg("text"));
  m.def("binomial_pvalue", &guiyun::evaluation::binomial_pvalue, py::arg("n"), py::arg("k"), py::arg("p0") = 0.5);
  m.def("score_turing", &score_turing, py::arg("key_json"), py::arg("responses_csv"));
  m.def("normalize_text", &guiyun::ledger::normalize_text, py::arg("text"));
  m.def("entry_id_for", &guiyun::ledger::entry_id_for, py::arg("text"));

  py::class_<guiyun::prosody::RhymeBook>(m, "RhymeBook")
      .def_static(
          "load", [](const std::string& path) { return guiyun::prosody::RhymeBook::load_file(path); }, py::arg("path"))
      .def("__len__", &guiyun::prosody::RhymeBook::size)
      .def(
          "analyze",
          [](const guiyun::prosody::RhymeBook& book, const std::string& text, std::optional<std::string> strictness) {
            std::optional<guiyun::prosody::Strictness> s;
            if (strictness) {
              s = guiyun::prosody::parse_strictness(*strictness);
              if (!s) throw guiyun::Error("invalid_request", "unknown strictness '" + *strictness + "'");
            }
            return guiyun::service::analyze_text(text, book, s).dump();
          },
          py::arg("text"), py::arg("strictness") = py::none());

  py::class_<guiyun::ledger::Ledger>(m, "Ledger")
      .def(py::init([](const std::string& path, bool read_only) {
             return std::make_unique<guiyun::ledger::Ledger>(
                 path, read_only ? guiyun::ledger::Ledger::Access::ReadOnly : guiyun::ledger::Ledger::Access::ReadWrite);
           }),
           py::arg("path"), py::arg("read_only") = false)
      .def(
          "record",
          [](guiyun::ledger::Ledger& l, const std::string& text, const std::string& prompt, const std::string& lm_id,
             std::uint64_t seed) {
            const auto r = l.record(text, {prompt, lm_id, seed});
            return py::make_tuple(r.entry_id, r.created);
          },
          py::arg("text"), py::arg("prompt") = "", py::arg("lm_id") = "", py::arg("seed") = 0)
      .def(
          "check",
          [](const guiyun::ledger::Ledger& l, const std::string& text) -> std::optional<std::string> {
            const auto e = l.check(text);
            if (!e) return std::nullopt;
            return guiyun::ledger::to_json(*e).dump();
          },
          py::arg("text"))
      .def("__len__", &guiyun::ledger::Ledger::size);

  py::class_<Service>(m, "Service")
      .def(py::init<const std::map<std::string, std::string>&>(), py::arg("settings"))
      .def("call", &Service::call, py::arg("endpoint"), py::arg("body"))
      .def("ledger_check", &Service::ledger_check, py::arg("text"));
}
