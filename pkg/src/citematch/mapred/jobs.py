"""The index-building and citation-matching jobs.

Index building::

    docs --map: author tokens--> (token, docId) --reduce: group--> (token, [docIds])
         --map: rotations--> (rotationKey, [docIds]) --sort--> map file

Matching::

    docs --map: extract references--> ((docId, i), reference)
         --map: parse + heuristic--> ((docId, i), (citation, candidateId))
         --reduce: best match--> ((docId, i), MatchResult)
"""

from __future__ import annotations

import json
import logging
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from ..match_model import LinearModel, score
from ..parsing.citation import ParsedCitation, ReferenceParser
from ..parsing.dictionaries import Dictionaries
from ..parsing.tagger import TaggerModel
from ..records import DocumentRecord, MatchResult, canonical_json
from ..rotation_index import (
    SENTINEL,
    IndexBuildError,
    MemoryStore,
    RotationIndex,
    decode_postings,
    encode_postings,
    rotations,
)
from ..similarity import Mode, feature_vector
from .engine import JobSpec, run_job
from .mapfile import MapFileStore, mapfile_build
from .seqfile import SeqFileWriter, seq_read

log = logging.getLogger(__name__)

PHASES = ("Citation extraction", "Heuristic matching", "Selecting the best match")

_U32 = struct.Struct(">I")


def citation_key(doc_id: str, ref_index: int) -> bytes:
    """Length-prefixed document id followed by the reference number."""
    raw = doc_id.encode("utf-8")
    return _U32.pack(len(raw)) + raw + _U32.pack(ref_index)


def split_citation_key(key: bytes) -> Tuple[str, int]:
    (n,) = _U32.unpack_from(key, 0)
    return key[4 : 4 + n].decode("utf-8"), _U32.unpack_from(key, 4 + n)[0]


# -- corpus ------------------------------------------------------------------


@dataclass
class IngestReport:
    count: int = 0
    rejected: List[Tuple[int, str]] = field(default_factory=list)


def ingest_jsonl(src, out) -> IngestReport:
    """Convert a JSON-lines corpus to a record file keyed by document id.

    Malformed lines and duplicate ids are skipped and reported with their
    line numbers.
    """
    report = IngestReport()
    seen = set()
    with open(src, encoding="utf-8") as fh, SeqFileWriter(out) as w:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = DocumentRecord.from_json(json.loads(line))
                for tok in doc.author_tokens():
                    if SENTINEL in tok:
                        raise ValueError(f"author token {tok!r} contains reserved {SENTINEL!r}")
            except ValueError as exc:  # JSONDecodeError is a ValueError
                report.rejected.append((lineno, str(exc)))
                continue
            if doc.id in seen:
                report.rejected.append((lineno, f"duplicate document id {doc.id!r}"))
                continue
            seen.add(doc.id)
            w.append(doc.id.encode("utf-8"), doc.encode())
    report.count = w.count
    return report


def write_docs(path, docs: Iterable[DocumentRecord]) -> int:
    with SeqFileWriter(path) as w:
        for doc in docs:
            w.append(doc.id.encode("utf-8"), doc.encode())
    return w.count


def read_docs(path) -> Iterator[DocumentRecord]:
    for _, value in seq_read(path):
        yield DocumentRecord.decode(value)


def _check_unique_ids(path) -> None:
    seen = set()
    for key, _ in seq_read(path):
        if key in seen:
            raise IndexBuildError(f"duplicate document id {key.decode('utf-8', 'replace')!r}")
        seen.add(key)


# -- index building ----------------------------------------------------------


class AuthorTokenMapper:
    def __call__(self, key: bytes, value: bytes):
        doc = DocumentRecord.decode(value)
        for tok in sorted(set(doc.author_tokens())):
            if SENTINEL in tok:
                raise IndexBuildError(f"token {tok!r} in document {doc.id!r} contains {SENTINEL!r}")
            yield tok.encode("utf-8"), doc.id.encode("utf-8")


class PostingReducer:
    def __call__(self, key: bytes, values):
        yield key, encode_postings(v.decode("utf-8") for v in values)


class RotationMapper:
    def __call__(self, key: bytes, value: bytes):
        for r in rotations(key.decode("utf-8")):
            yield r.encode("utf-8"), value


class MapFileIndexStore:
    """Rotation-index store view of an on-disk map file."""

    def __init__(self, store: MapFileStore):
        self.store = store

    def __len__(self) -> int:
        return len(self.store)

    def scan(self, prefix: str):
        for rec in self.store.seek_scan(prefix.encode("utf-8")):
            yield rec.key.decode("utf-8"), decode_postings(rec.value)

    def entries(self):
        for rec in self.store:
            yield rec.key.decode("utf-8"), decode_postings(rec.value)

    def to_memory(self) -> MemoryStore:
        return MemoryStore(dict(self.entries()))


def open_index(directory, in_memory: bool = False, verify: bool = False) -> RotationIndex:
    """Open an on-disk index; ``in_memory`` loads it into a sorted table."""
    store = MapFileIndexStore(MapFileStore(directory))
    if in_memory:
        mem = store.to_memory()
        store.store.close()
        return RotationIndex(mem, verify=verify)
    return RotationIndex(store, verify=verify)


@dataclass
class IndexBuildResult:
    index_dir: Path
    entries: int
    timings: Dict[str, float]


def job_build_index(docs_path, out_dir, workers: int = 1, scratch=None, interval: int = 128) -> IndexBuildResult:
    _check_unique_ids(docs_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    work = out_dir / "_work"
    work.mkdir(exist_ok=True)
    timings = {}
    t = time.perf_counter()
    run_job(
        JobSpec([docs_path], str(work / "postings"), AuthorTokenMapper(), PostingReducer(),
                workers=workers, scratch=scratch, name="group-tokens")
    )
    timings["Token grouping"] = time.perf_counter() - t
    t = time.perf_counter()
    run_job(JobSpec([work / "postings"], str(work / "rotations"), RotationMapper(),
                    workers=workers, scratch=scratch, name="rotations"))
    timings["Rotation generation"] = time.perf_counter() - t
    t = time.perf_counter()
    store = mapfile_build(work / "rotations", out_dir, interval=interval, scratch=scratch)
    entries = len(store)
    store.close()
    timings["Sorting into map file"] = time.perf_counter() - t
    for p in work.iterdir():
        p.unlink()
    work.rmdir()
    return IndexBuildResult(out_dir, entries, timings)


# -- matching ----------------------------------------------------------------


class ReferenceExtractMapper:
    def __call__(self, key: bytes, value: bytes):
        doc = DocumentRecord.decode(value)
        for i, ref in enumerate(doc.references):
            yield citation_key(doc.id, i), canonical_json(ref)


def to_citation(ref, parser: Optional[ReferenceParser]) -> ParsedCitation:
    """Parse a raw reference, or take an already-parsed one as is."""
    if isinstance(ref, dict):
        return ParsedCitation.from_json(ref)
    if parser is None:
        raise ValueError("raw reference found but no parser model was given")
    return parser.parse(ref)


class HeuristicMapper:
    """Parses each reference and emits one record per candidate document.

    The index is opened lazily in each worker and kept in memory; token
    lookups are memoised since author tokens repeat heavily.
    """

    def __init__(self, index_dir, tagger: Optional[TaggerModel], dicts: Optional[Dictionaries], verify: bool = False):
        self.index_dir = str(index_dir)
        self.tagger = tagger
        self.dicts = dicts
        self.verify = verify
        self._index = None
        self._parser = None
        self._cache: Dict[str, frozenset] = {}

    def __getstate__(self):
        state = dict(self.__dict__)
        state.update(_index=None, _parser=None, _cache={})
        return state

    def _setup(self):
        self._index = open_index(self.index_dir, in_memory=True, verify=self.verify)
        if self.tagger is not None:
            self._parser = ReferenceParser(self.tagger, self.dicts or Dictionaries.bundled())

    def _lookup(self, tok: str) -> frozenset:
        hit = self._cache.get(tok)
        if hit is None:
            hit = self._cache[tok] = frozenset(self._index.lookup_token(tok))
        return hit

    def candidates(self, citation: ParsedCitation) -> Dict[str, int]:
        return heuristic_candidates(citation, self._lookup)

    def __call__(self, key: bytes, value: bytes):
        if self._index is None:
            self._setup()
        citation = to_citation(json.loads(value), self._parser)
        cjson = citation.to_json()
        cands = self.candidates(citation)
        if not cands:
            yield key, canonical_json({"citation": cjson, "candidate": None})
        for doc_id in cands:
            yield key, canonical_json({"citation": cjson, "candidate": doc_id})


def heuristic_candidates(citation: ParsedCitation, lookup) -> Dict[str, int]:
    """Same filter as ``RotationIndex.candidates`` with a pluggable lookup."""
    counts: Dict[str, int] = {}
    for tok in sorted({t.lower() for t in citation.author_tokens if t}):
        if SENTINEL in tok:
            continue
        for doc_id in lookup(tok):
            counts[doc_id] = counts.get(doc_id, 0) + 1
    if not counts:
        return {}
    cutoff = max(1, max(counts.values()) - 1)
    return {d: c for d, c in sorted(counts.items()) if c >= cutoff}


def best_match(
    source_id: str,
    ref_index: int,
    citation: ParsedCitation,
    candidate_ids: Iterable[str],
    fetch,
    model: LinearModel,
    threshold: float,
) -> MatchResult:
    """Highest-scoring candidate (ties: smallest id), self-matches excluded."""
    best_id, best_score = None, 0.0
    for doc_id in sorted(set(candidate_ids)):
        if doc_id == source_id:
            continue
        doc = fetch(doc_id)
        if doc is None:
            log.warning("candidate %r for %s#%d has no metadata; skipped", doc_id, source_id, ref_index)
            continue
        s = score(model, feature_vector(citation, doc, Mode.PIPELINE))
        if best_id is None or s > best_score:
            best_id, best_score = doc_id, s
    matched = best_id if best_id is not None and best_score >= threshold else None
    return MatchResult(source_id, ref_index, matched, best_score)


class BestMatchReducer:
    """Scores each citation against its candidates.

    Candidate metadata comes from the sorted document MapFile; converted
    records are cached since popular documents are candidates many times.
    """

    CACHE_SIZE = 50_000

    def __init__(self, docs_dir, model: LinearModel, threshold: float):
        self.docs_dir = str(docs_dir)
        self.model = model
        self.threshold = threshold
        self._docs = None
        self._cache: Dict[str, Optional[ParsedCitation]] = {}

    def __getstate__(self):
        state = dict(self.__dict__)
        state.update(_docs=None, _cache={})
        return state

    def _fetch(self, doc_id: str) -> Optional[ParsedCitation]:
        if doc_id in self._cache:
            return self._cache[doc_id]
        if self._docs is None:
            self._docs = MapFileStore(self.docs_dir)
        values = self._docs.get(doc_id.encode("utf-8"))
        doc = DocumentRecord.decode(values[0]).as_citation() if values else None
        if len(self._cache) >= self.CACHE_SIZE:
            self._cache.clear()
        self._cache[doc_id] = doc
        return doc

    def __call__(self, key: bytes, values):
        source_id, ref_index = split_citation_key(key)
        citation = None
        cands = []
        for v in values:
            rec = json.loads(v)
            if citation is None:
                citation = ParsedCitation.from_json(rec["citation"])
            if rec["candidate"] is not None:
                cands.append(rec["candidate"])
        result = best_match(source_id, ref_index, citation, cands, self._fetch, self.model, self.threshold)
        yield key, result.encode()


@dataclass
class MatchJobResult:
    output: Path
    results: List[MatchResult]
    timings: Dict[str, float]

    @property
    def matched(self) -> int:
        return sum(r.matched_doc_id is not None for r in self.results)


def job_match(
    docs_path,
    index_dir,
    model: LinearModel,
    tagger: Optional[TaggerModel],
    out_path,
    *,
    dicts: Optional[Dictionaries] = None,
    threshold: float = 0.5,
    workers: int = 1,
    scratch=None,
    verify: bool = False,
) -> MatchJobResult:
    if model.mode is not Mode.PIPELINE:
        raise ValueError("the matching job scores with a Pipeline-mode model")
    out_path = Path(out_path)
    work = out_path.parent / (out_path.name + ".work")
    work.mkdir(parents=True, exist_ok=True)
    timings = {}

    t = time.perf_counter()
    mapfile_build(docs_path, work / "docs", scratch=scratch).close()
    run_job(JobSpec([docs_path], str(work / "citations"), ReferenceExtractMapper(),
                    workers=workers, scratch=scratch, name="extract"))
    timings[PHASES[0]] = time.perf_counter() - t

    t = time.perf_counter()
    run_job(JobSpec([work / "citations"], str(work / "candidates"),
                    HeuristicMapper(index_dir, tagger, dicts, verify),
                    workers=workers, scratch=scratch, name="heuristic"))
    timings[PHASES[1]] = time.perf_counter() - t

    t = time.perf_counter()
    run_job(JobSpec([work / "candidates"], str(out_path), None,
                    BestMatchReducer(work / "docs", model, threshold),
                    workers=workers, scratch=scratch, name="best-match"))
    timings[PHASES[2]] = time.perf_counter() - t

    results = [MatchResult.decode(v) for _, v in seq_read(out_path)]
    for p in sorted(work.rglob("*"), reverse=True):
        p.rmdir() if p.is_dir() else p.unlink()
    work.rmdir()
    return MatchJobResult(out_path, results, timings)


def match_reference(
    docs: Sequence[DocumentRecord],
    index: RotationIndex,
    model: LinearModel,
    parser: Optional[ReferenceParser],
    threshold: float = 0.5,
) -> List[MatchResult]:
    """Straight-line matcher: parse, retrieve candidates, score, pick best."""
    by_id = {d.id: d for d in docs}
    out = []
    for doc in docs:
        for i, ref in enumerate(doc.references):
            citation = to_citation(ref, parser)
            cands = index.candidates(citation)
            out.append(best_match(doc.id, i, citation, cands, by_id.get, model, threshold))
    return out


def sort_results(results: Iterable[MatchResult]) -> List[MatchResult]:
    return sorted(results, key=lambda r: (r.source_doc_id, r.reference_index))
