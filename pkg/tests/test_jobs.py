import json

import pytest

from citematch.mapred.jobs import (
    IndexBuildError,
    citation_key,
    ingest_jsonl,
    job_build_index,
    job_match,
    match_reference,
    open_index,
    read_docs,
    sort_results,
    split_citation_key,
    write_docs,
)
from citematch.mapred.mapfile import MapFileStore
from citematch.mapred.seqfile import seq_read
from citematch.parsing import ReferenceParser
from citematch.records import DocumentRecord
from citematch.rotation_index import build, decode_postings
from citematch.synth import make_corpus


def index_dict(directory):
    store = MapFileStore(directory)
    try:
        return {r.key.decode(): decode_postings(r.value) for r in store}
    finally:
        store.close()


def test_citation_key_sorts_and_round_trips():
    keys = [citation_key("a", 10), citation_key("a", 2), citation_key("ab", 0), citation_key("b", 1)]
    assert split_citation_key(citation_key("dé", 7)) == ("dé", 7)
    # length prefix groups by id before reference number
    assert sorted(keys) == [citation_key("a", 2), citation_key("a", 10), citation_key("b", 1), citation_key("ab", 0)]


def test_build_index_single_doc(tmp_path):
    write_docs(tmp_path / "d.seq", [DocumentRecord("d1", ("cat",), "t", "j", None, frozenset(), ())])
    res = job_build_index(tmp_path / "d.seq", tmp_path / "idx")
    assert res.entries == 4
    assert index_dict(tmp_path / "idx") == {k: ("d1",) for k in ["$cat", "at$c", "cat$", "t$ca"]}
    assert set(res.timings) == {"Token grouping", "Rotation generation", "Sorting into map file"}


def test_build_index_empty_and_duplicate(tmp_path):
    write_docs(tmp_path / "d.seq", [])
    assert job_build_index(tmp_path / "d.seq", tmp_path / "idx").entries == 0
    doc = DocumentRecord("d1", ("x",), "t", "j", None, frozenset(), ())
    write_docs(tmp_path / "dup.seq", [doc, doc])
    with pytest.raises(IndexBuildError):
        job_build_index(tmp_path / "dup.seq", tmp_path / "idx2")


def test_build_index_equals_memory_and_is_worker_invariant(tmp_path):
    corpus = make_corpus(100, seed=4)
    write_docs(tmp_path / "d.seq", corpus.documents)
    expected = build(corpus.documents).as_dict()
    blobs = []
    for workers in (1, 3):
        out = tmp_path / f"idx{workers}"
        job_build_index(tmp_path / "d.seq", out, workers=workers, interval=5)
        assert index_dict(out) == expected
        blobs.append(((out / "data").read_bytes(), (out / "index").read_bytes()))
    assert blobs[0] == blobs[1]
    assert open_index(tmp_path / "idx1", in_memory=True).as_dict() == expected


def test_job_match_equals_reference(tmp_path, small_corpus, tagger, dicts, pipeline_model):
    docs = small_corpus.documents
    write_docs(tmp_path / "d.seq", docs)
    job_build_index(tmp_path / "d.seq", tmp_path / "idx")
    expected = sort_results(match_reference(docs, build(docs), pipeline_model, ReferenceParser(tagger, dicts)))
    outs = []
    for workers in (1, 4):
        out = tmp_path / f"m{workers}.seq"
        res = job_match(tmp_path / "d.seq", tmp_path / "idx", pipeline_model, tagger, out,
                        dicts=dicts, workers=workers)
        assert sort_results(res.results) == expected
        assert set(res.timings) == {"Citation extraction", "Heuristic matching", "Selecting the best match"}
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert len(expected) == len(small_corpus.citations)
    # self matches never occur
    assert all(r.matched_doc_id != r.source_doc_id for r in expected)


def test_verbatim_reference_matches_and_unknown_author_does_not(tmp_path, tagger, dicts, pipeline_model):
    target = DocumentRecord("t1", ("Helga Quistorp", "Ravi Menon"), "Sparse lattice sieving methods",
                            "Journal of Applied Combinatorics", 1999, frozenset({12, 13, 14}), ())
    citer = DocumentRecord("c1", ("Ann Other",), "x", "y", 2001, frozenset(),
                           (target.render(), "Zzyzx Qqq. Nothing here. Nowhere, 1990."))
    write_docs(tmp_path / "d.seq", [target, citer])
    job_build_index(tmp_path / "d.seq", tmp_path / "idx")
    res = job_match(tmp_path / "d.seq", tmp_path / "idx", pipeline_model, tagger, tmp_path / "m.seq", dicts=dicts)
    by_ref = {r.reference_index: r for r in res.results}
    assert by_ref[0].matched_doc_id == "t1" and by_ref[0].score > 0.5
    assert by_ref[1].matched_doc_id is None
    assert res.matched == 1


def test_threshold_extremes(tmp_path, small_corpus, tagger, dicts, pipeline_model):
    write_docs(tmp_path / "d.seq", small_corpus.documents)
    job_build_index(tmp_path / "d.seq", tmp_path / "idx")
    always = job_match(tmp_path / "d.seq", tmp_path / "idx", pipeline_model, tagger, tmp_path / "a.seq",
                       dicts=dicts, threshold=0.0)
    never = job_match(tmp_path / "d.seq", tmp_path / "idx", pipeline_model, tagger, tmp_path / "n.seq",
                      dicts=dicts, threshold=1.0)
    assert all(r.matched_doc_id is not None or r.score == 0.0 for r in always.results)
    assert all(r.matched_doc_id is None or r.score >= 1.0 for r in never.results)


def test_ingest_reports_rejects(tmp_path):
    good = DocumentRecord("d1", ("A B",), "t", "j", 2000, frozenset({1}), ("ref",)).to_json()
    lines = [json.dumps(good), "{not json", json.dumps({**good, "id": "d2"}), json.dumps(good), ""]
    (tmp_path / "c.jsonl").write_text("\n".join(lines))
    report = ingest_jsonl(tmp_path / "c.jsonl", tmp_path / "c.seq")
    assert report.count == 2
    assert [n for n, _ in report.rejected] == [2, 4]
    assert [d.id for d in read_docs(tmp_path / "c.seq")] == ["d1", "d2"]
    assert [r.key for r in seq_read(tmp_path / "c.seq")] == [b"d1", b"d2"]
