"""Regulated Chinese poetry: meter checking, keyword extraction, constrained
generation, evaluation and a generation ledger."""

import json

from . import _core
from ._core import Error, binomial_pvalue, entry_id_for, fs2text_prompt, normalize_text

Error.code = property(lambda self: self.args[0])
Error.message = property(lambda self: self.args[1])
Error.__str__ = lambda self: f"[{self.args[0]}] {self.args[1]}"

__all__ = [
    "Error",
    "Ledger",
    "RhymeBook",
    "Service",
    "binomial_pvalue",
    "entry_id_for",
    "fs2text_prompt",
    "normalize",
    "normalize_text",
    "parse_prompt",
    "score_turing",
]


def normalize(text):
    """Lines, lengths, character count, gap flag and genre id of a poem."""
    return json.loads(_core.normalize(text))


def parse_prompt(text):
    """Structured form of a canonical prompt string."""
    return json.loads(_core.parse_prompt(text))


def score_turing(key, responses_csv):
    """Score response CSV text against an answer key mapping item id to A/B."""
    return json.loads(_core.score_turing(json.dumps(key), responses_csv))


class RhymeBook:
    """Character readings table loaded from a TSV file."""

    def __init__(self, path):
        self._book = _core.RhymeBook.load(str(path))

    def __len__(self):
        return len(self._book)

    def analyze(self, text, strictness=None):
        """Genre, rhyme group and meter report of a poem."""
        return json.loads(self._book.analyze(text, strictness))


class Ledger:
    """Append-only record of generated poems."""

    def __init__(self, path, read_only=False):
        self._ledger = _core.Ledger(str(path), read_only)

    def __len__(self):
        return len(self._ledger)

    def record(self, text, prompt="", lm_id="", seed=0):
        """Returns (entry_id, created)."""
        return self._ledger.record(text, prompt, lm_id, seed)

    def check(self, text):
        """The stored entry for this text, or None."""
        entry = self._ledger.check(text)
        return None if entry is None else json.loads(entry)


class Service:
    """The request handlers behind the HTTP endpoints, in process.

    Settings use the configuration keys: corpus, rhyme_book, embeddings,
    stopwords, lexicon, ledger, model, strictness, beam_width, style.<name>.
    """

    def __init__(self, **settings):
        self._service = _core.Service({k: str(v) for k, v in settings.items()})

    def _call(self, endpoint, body):
        return json.loads(self._service.call(endpoint, json.dumps(body, ensure_ascii=False)))

    def generate(self, **body):
        return self._call("generate", body)

    def follow_rhyme(self, **body):
        return self._call("follow_rhyme", body)

    def analyze(self, **body):
        return self._call("analyze", body)

    def extract(self, **body):
        return self._call("extract", body)

    def ledger_check(self, text):
        return json.loads(self._service.ledger_check(text))
