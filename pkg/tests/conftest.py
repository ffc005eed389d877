import pathlib

import pytest

from mfj.prelude import load_program

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


def corpus_text(name: str) -> str:
    return (CORPUS / f"{name}.mfj").read_text()


def load(name: str):
    """Corpus program (prelude included) by basename."""
    return load_program(corpus_text(name))


@pytest.fixture
def prelude():
    from mfj.prelude import prelude_program

    return prelude_program()
