"""Approximate author-token index keyed by token rotations.

Each indexed token ``w`` is stored under every rotation of ``w + "$"``.
A query token is rotated the same way; for each rotation ``r = b + c``
(``c`` a single character) the index is positioned at the first key
starting with ``b`` and scanned forward, collecting keys that start with
``b`` and are no longer than ``r``, plus keys that start with ``r`` and are
at most one character longer.  Any key that differs from a query rotation
only in its last character is therefore found, which covers every
single-character substitution.
"""

from __future__ import annotations

import bisect
import json
from collections import defaultdict
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Set, Tuple, Union

from .parsing.citation import ParsedCitation
from .records import DocumentRecord
from .similarity import levenshtein

SENTINEL = "$"

Entry = Tuple[str, Tuple[str, ...]]


class IndexBuildError(ValueError):
    """Bad input for the rotation index (reserved character, duplicate id)."""


def rotations(w: str) -> List[str]:
    if not w:
        raise IndexBuildError("cannot rotate an empty token")
    if SENTINEL in w:
        raise IndexBuildError(f"token {w!r} contains the reserved character {SENTINEL!r}")
    s = w + SENTINEL
    return [s[i:] + s[:i] for i in range(len(s))]


def unrotate(key: str) -> str:
    head, _, tail = key.partition(SENTINEL)
    return tail + head


def encode_postings(ids: Iterable[str]) -> bytes:
    return json.dumps(sorted(set(ids)), separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def decode_postings(data: bytes) -> Tuple[str, ...]:
    return tuple(json.loads(data))


def token_postings(docs: Iterable[DocumentRecord]) -> Dict[str, List[str]]:
    """Lowercased author token -> sorted ids of the documents containing it."""
    seen = set()
    by_token: Dict[str, Set[str]] = defaultdict(set)
    for doc in docs:
        if doc.id in seen:
            raise IndexBuildError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)
        for tok in doc.author_tokens():
            if SENTINEL in tok:
                raise IndexBuildError(f"token {tok!r} in document {doc.id!r} contains {SENTINEL!r}")
            by_token[tok].add(doc.id)
    return {tok: sorted(ids) for tok, ids in by_token.items()}


def _rule_matches(key: str, r: str) -> bool:
    n = len(r)
    return (len(key) <= n and key.startswith(r[:-1])) or (len(key) <= n + 1 and key.startswith(r))


def _after_prefix(prefix: str) -> str:
    """Smallest string greater than every string starting with ``prefix``."""
    return prefix[:-1] + chr(ord(prefix[-1]) + 1)


class MemoryStore:
    """Sorted in-memory key -> postings table."""

    def __init__(self, entries: Mapping[str, Sequence[str]]):
        self.keys = sorted(entries)
        self.postings = [tuple(entries[k]) for k in self.keys]

    def __len__(self) -> int:
        return len(self.keys)

    def scan(self, prefix: str) -> Iterator[Entry]:
        i = bisect.bisect_left(self.keys, prefix)
        keys = self.keys
        while i < len(keys) and keys[i].startswith(prefix):
            yield keys[i], self.postings[i]
            i += 1

    def entries(self) -> Iterator[Entry]:
        return zip(self.keys, self.postings)

    def _exact(self, key: str) -> List[int]:
        i = bisect.bisect_left(self.keys, key)
        return [i] if i < len(self.keys) and self.keys[i] == key else []

    def _children(self, prefix: str) -> List[int]:
        """Positions of the keys exactly one character longer than ``prefix``.

        Jumps from one next-character group to the following one, so the
        cost depends on the number of distinct next characters, not on the
        size of the subtree.
        """
        keys = self.keys
        m = len(prefix) + 1
        out = []
        i = bisect.bisect_left(keys, prefix)
        while i < len(keys) and keys[i].startswith(prefix):
            if len(keys[i]) == len(prefix):
                i += 1
                continue
            child = keys[i][:m]
            if keys[i] == child:
                out.append(i)
            i = bisect.bisect_left(keys, _after_prefix(child), i + 1)
        return out

    def match_rotation(self, r: str) -> Iterator[Entry]:
        b = r[:-1]
        hits = set(self._exact(b)) | set(self._children(b)) | set(self._children(r))
        for i in sorted(hits):
            yield self.keys[i], self.postings[i]


class RotationIndex:
    """Rotation-keyed index over a sorted key -> postings store.

    The store needs ``scan(prefix)`` (forward scan from the first key with
    that prefix) and ``entries()``; a store may also provide a faster
    ``match_rotation(r)`` returning exactly the keys the scan rule accepts.
    ``verify`` drops retrieved keys whose token is more than one edit away
    from the query; it is off by default.
    """

    def __init__(self, store, verify: bool = False):
        self.store = store
        self.verify = verify
        self._match = getattr(store, "match_rotation", None) or self._scan_rotation

    def __len__(self) -> int:
        return len(self.store)

    def entries(self) -> Iterator[Entry]:
        return self.store.entries()

    def as_dict(self) -> Dict[str, Tuple[str, ...]]:
        return {k: tuple(v) for k, v in self.entries()}

    def _scan_rotation(self, r: str) -> Iterator[Entry]:
        for key, ids in self.store.scan(r[:-1]):
            if _rule_matches(key, r):
                yield key, ids

    def retrieve(self, q: str) -> Dict[str, Tuple[str, ...]]:
        """Index keys retrieved for query token ``q``, with their postings."""
        q = q.lower()
        found = {}
        for r in rotations(q):
            for key, ids in self._match(r):
                found[key] = ids
        if self.verify:
            found = {k: v for k, v in found.items() if levenshtein(unrotate(k), q) <= 1}
        return found

    def lookup_token(self, q: str) -> Set[str]:
        docs: Set[str] = set()
        for ids in self.retrieve(q).values():
            docs.update(ids)
        return docs

    def candidates(self, citation: Union[ParsedCitation, Sequence[str]]) -> Dict[str, int]:
        """Documents sharing at least ``max(1, M - 1)`` author tokens with
        the citation, where ``M`` is the best document's count.

        Counts are over distinct (lowercased) citation tokens.
        """
        author_tokens = citation.author_tokens if isinstance(citation, ParsedCitation) else citation
        counts: Dict[str, int] = defaultdict(int)
        for tok in sorted({t.lower() for t in author_tokens if t}):
            if SENTINEL in tok:
                continue
            for doc_id in self.lookup_token(tok):
                counts[doc_id] += 1
        if not counts:
            return {}
        cutoff = max(1, max(counts.values()) - 1)
        return {d: c for d, c in sorted(counts.items()) if c >= cutoff}


def build(docs: Iterable[DocumentRecord], verify: bool = False) -> RotationIndex:
    entries = {}
    for tok, ids in token_postings(docs).items():
        for key in rotations(tok):
            entries[key] = ids
    return RotationIndex(MemoryStore(entries), verify=verify)


def lookup_token(idx: RotationIndex, q: str) -> Set[str]:
    return idx.lookup_token(q)


def candidates(idx: RotationIndex, citation: Union[ParsedCitation, Sequence[str]]) -> Dict[str, int]:
    return idx.candidates(citation)
