import random
import string

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from citematch.mapred.jobs import MapFileIndexStore
from citematch.mapred.mapfile import MapFileStore, write_mapfile
from citematch.parsing import ParsedCitation
from citematch.records import DocumentRecord
from citematch.rotation_index import (
    IndexBuildError,
    MemoryStore,
    RotationIndex,
    build,
    candidates,
    decode_postings,
    encode_postings,
    lookup_token,
    rotations,
    unrotate,
)


def doc(i, *authors):
    return DocumentRecord(i, tuple(authors), "t", "j", 2000, frozenset(), ())


def random_index(rng, n_tokens, alphabet=string.ascii_lowercase[:6]):
    vocab = {"".join(rng.choice(alphabet) for _ in range(rng.randint(1, 12))) for _ in range(n_tokens)}
    postings = {w: [f"d{rng.randrange(50):02d}"] for w in vocab}
    entries = {}
    for w, ids in postings.items():
        for k in rotations(w):
            entries[k] = ids
    return postings, entries


def test_rotations():
    assert rotations("cat") == ["cat$", "at$c", "t$ca", "$cat"]
    assert rotations("a") == ["a$", "$a"]
    assert unrotate("t$ca") == "cat"
    for bad in ("", "a$b"):
        with pytest.raises(IndexBuildError):
            rotations(bad)


@given(st.text(alphabet="abc", min_size=1, max_size=8))
def test_rotation_count_and_inverse(w):
    rs = rotations(w)
    assert len(rs) == len(w) + 1 and len(set(rs)) <= len(rs)
    assert all(r.count("$") == 1 and unrotate(r) == w for r in rs)


def test_build_examples():
    idx = build([doc("d1", "cat")])
    assert idx.as_dict() == {k: ("d1",) for k in ["cat$", "at$c", "t$ca", "$cat"]}
    assert len(build([])) == 0
    shared = build([doc("d1", "Ann Lee"), doc("d2", "Bob Lee")]).as_dict()
    assert all(shared[k] == ("d1", "d2") for k in rotations("lee"))
    keys = [k for k, _ in build([doc("a", "zed amy"), doc("b", "bob")]).entries()]
    assert keys == sorted(keys)


def test_build_errors():
    with pytest.raises(IndexBuildError):
        build([doc("d1", "x"), doc("d1", "y")])
    # "$" is punctuation to the tokenizer, so it never reaches a key
    assert {unrotate(k) for k in build([doc("d1", "a$b")]).as_dict()} == {"a", "b"}
    with pytest.raises(IndexBuildError):
        build([doc("d1", "x")]).lookup_token("a$")


def test_lookup_examples():
    idx = build([doc("d1", "cat")])
    assert lookup_token(idx, "cut") == {"d1"}
    assert lookup_token(idx, "at") == {"d1"}
    assert lookup_token(idx, "cat") == {"d1"}
    assert lookup_token(idx, "CAT") == {"d1"}
    assert lookup_token(idx, "dog") == set()


def test_verify_filter():
    idx = build([doc("d1", "cat"), doc("d2", "ca")], verify=False)
    loose = idx.retrieve("c")
    strict = build([doc("d1", "cat"), doc("d2", "ca")], verify=True).retrieve("c")
    assert set(strict) <= set(loose)
    assert all(unrotate(k) in ("ca",) for k in strict)


def test_lookup_matches_literal_oracle_memory():
    rng = random.Random(1)
    for _ in range(15):
        postings, entries = random_index(rng, rng.randint(1, 300))
        idx = RotationIndex(MemoryStore(entries))
        queries = list(postings)[:20] + [
            "".join(rng.choice("abcdefg") for _ in range(rng.randint(1, 10))) for _ in range(20)
        ]
        for q in queries:
            assert idx.lookup_token(q) == oracles.literal_rule_lookup(entries, q), q


class ScanOnly:
    """A store without the fast path, to exercise the literal scan."""

    def __init__(self, entries):
        self.inner = MemoryStore(entries)

    def __len__(self):
        return len(self.inner)

    def scan(self, prefix):
        return self.inner.scan(prefix)

    def entries(self):
        return self.inner.entries()


def test_skip_scan_equals_plain_scan():
    rng = random.Random(2)
    for _ in range(10):
        postings, entries = random_index(rng, 200, alphabet="abc")
        fast = RotationIndex(MemoryStore(entries))
        slow = RotationIndex(ScanOnly(entries))
        for q in list(postings)[:30] + ["a", "b", "abcabc", "cc"]:
            assert fast.retrieve(q) == slow.retrieve(q)


def test_mapfile_backed_index_matches_oracle(tmp_path):
    rng = random.Random(3)
    postings, entries = random_index(rng, 150)
    write_mapfile(
        ((k.encode(), encode_postings(v)) for k, v in sorted(entries.items())), tmp_path / "idx", interval=4
    )
    idx = RotationIndex(MapFileIndexStore(MapFileStore(tmp_path / "idx")))
    for q in list(postings)[:40] + ["abc", "f", "zzz"]:
        assert idx.lookup_token(q) == oracles.literal_rule_lookup(entries, q)


@settings(max_examples=200)
@given(st.text(alphabet="abcdef", min_size=1, max_size=10), st.data())
def test_substitution_and_exact_completeness(w, data):
    idx = build([doc("target", w), doc("other", "zzzz")])
    assert "target" in idx.lookup_token(w)
    i = data.draw(st.integers(0, len(w) - 1))
    c = data.draw(st.sampled_from("abcdefgh"))
    variant = w[:i] + c + w[i + 1 :]
    assert "target" in idx.lookup_token(variant)


def test_postings_codec():
    assert decode_postings(encode_postings(["b", "a", "b"])) == ("a", "b")


def test_candidates_filter():
    class Fixed:
        def __init__(self, table):
            self.table = table

        def lookup_token(self, q):
            return self.table.get(q, set())

    table = {"x": {"A", "B", "C"}, "y": {"A", "B"}, "z": {"A"}}
    got = RotationIndex.candidates(Fixed(table), ["x", "y", "z"])
    assert got == {"A": 3, "B": 2}
    assert RotationIndex.candidates(Fixed({"x": {"A"}}), ["x"]) == {"A": 1}
    assert RotationIndex.candidates(Fixed({}), ["q"]) == {}
    assert RotationIndex.candidates(Fixed(table), []) == {}
    # repeated tokens count once
    assert RotationIndex.candidates(Fixed(table), ["z", "z", "Z"]) == {"A": 1}


def test_candidates_from_citation():
    idx = build([doc("d1", "John Smith"), doc("d2", "Jane Smith"), doc("d3", "Bob Jones")])
    c = ParsedCitation(author_text="J. Smith", author_tokens=("J", "Smith"))
    got = candidates(idx, c)
    assert got == {"d1": 1, "d2": 1}


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sets(st.sampled_from("abcdefgh"), max_size=4), min_size=1, max_size=8),
       st.lists(st.sampled_from("abcdefgh"), max_size=5))
def test_candidates_threshold_property(doc_tokens, query):
    idx = build([doc(f"d{i}", " ".join(sorted(t))) for i, t in enumerate(doc_tokens)])
    got = idx.candidates(query)
    counts = {}
    for tok in {q.lower() for q in query}:
        for d in idx.lookup_token(tok):
            counts[d] = counts.get(d, 0) + 1
    if not counts:
        assert got == {}
        return
    cut = max(1, max(counts.values()) - 1)
    assert got == {d: c for d, c in counts.items() if c >= cut}
