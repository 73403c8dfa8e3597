import sys

import pytest

from citematch.parsing import Dictionaries, ReferenceParser, train_tagger
from citematch.synth import make_corpus


@pytest.fixture(scope="session")
def dicts():
    return Dictionaries.bundled()


@pytest.fixture(scope="session")
def small_corpus():
    return make_corpus(60, seed=11)


@pytest.fixture(scope="session")
def tagger(small_corpus, dicts):
    return train_tagger([(c.tokens, c.labels) for c in small_corpus.citations], 8, dicts, seed=0)


@pytest.fixture(scope="session")
def parser(tagger, dicts):
    return ReferenceParser(tagger, dicts)


@pytest.fixture(scope="session")
def pipeline_model(small_corpus, parser):
    from citematch.experiment import matcher_pairs
    from citematch.match_model import train
    from citematch.rotation_index import build

    by_id = {d.id: d for d in small_corpus.documents}
    pairs = matcher_pairs(
        [(parser.parse(c.raw), c.target) for c in small_corpus.citations], build(small_corpus.documents), by_id
    )
    return train(pairs, seed=0)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
    missing = [n for n in range(1, 11) if n not in results]
    for n in missing:
        terminalreporter.write_line(f"[FAIL] criterion {n:>2}: did not report (errored or not run)")
