import os
import pathlib

import pytest


@pytest.fixture(scope="session")
def data_dir():
    default = pathlib.Path(__file__).resolve().parents[2] / "data"
    return pathlib.Path(os.environ.get("GUIYUN_TEST_DATA_DIR", default))


@pytest.fixture(scope="session")
def service(data_dir, tmp_path_factory):
    import guiyun

    return guiyun.Service(
        corpus=data_dir / "corpus.csv",
        rhyme_book=data_dir / "rhyme_book.tsv",
        embeddings=data_dir / "embeddings.txt",
        stopwords=data_dir / "stopwords.txt",
        lexicon=data_dir / "lexicon.txt",
        ledger=tmp_path_factory.mktemp("ledger") / "ledger.jsonl",
    )
