"""Document metadata and match-result records with their JSON forms."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Tuple, Union

from .parsing.citation import ParsedCitation
from .tokenizer import name_tokens


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


@dataclass(frozen=True)
class DocumentRecord:
    id: str
    authors: Tuple[str, ...] = ()
    title: str = ""
    journal: str = ""
    year: Optional[int] = None
    pages: FrozenSet[int] = frozenset()
    # raw strings, or already-parsed citations given as JSON objects
    references: Tuple[Union[str, dict], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValueError("document id must be a non-empty string")

    def author_tokens(self):
        """Lowercased letter/alphanumeric tokens of all author names."""
        out = []
        for name in self.authors:
            out.extend(t.lower() for t in name_tokens(name))
        return out

    def as_citation(self) -> ParsedCitation:
        """The record's fields in the shape of a parsed citation."""
        author_text = " ".join(self.authors)
        return ParsedCitation(
            raw=self.render(),
            author_text=author_text,
            title_text=self.title,
            source_text=self.journal,
            year_numbers=frozenset() if self.year is None else frozenset([self.year]),
            page_numbers=frozenset(self.pages),
            author_tokens=tuple(name_tokens(author_text)),
        )

    def render(self) -> str:
        parts = []
        if self.authors:
            parts.append(", ".join(self.authors) + ".")
        if self.title:
            parts.append(self.title + ".")
        tail = ", ".join(
            x for x in (self.journal, None if self.year is None else str(self.year)) if x
        )
        if self.pages:
            lo, hi = min(self.pages), max(self.pages)
            tail = f"{tail}, {lo}-{hi}" if tail else f"{lo}-{hi}"
        if tail:
            parts.append(tail + ".")
        return " ".join(parts)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "authors": list(self.authors),
            "title": self.title,
            "journal": self.journal,
            "year": self.year,
            "pages": sorted(self.pages),
            "references": list(self.references),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DocumentRecord":
        if not isinstance(obj, dict):
            raise ValueError("document must be a JSON object")
        authors = obj.get("authors") or []
        refs = obj.get("references") or []
        if not isinstance(authors, list) or not all(isinstance(a, str) for a in authors):
            raise ValueError("authors must be a list of strings")
        if not isinstance(refs, list) or not all(isinstance(r, (str, dict)) for r in refs):
            raise ValueError("references must be a list of strings or parsed-citation objects")
        year = obj.get("year")
        if year is not None and (isinstance(year, bool) or not isinstance(year, int)):
            raise ValueError("year must be an integer or null")
        pages = obj.get("pages") or []
        if not all(isinstance(p, int) and not isinstance(p, bool) for p in pages):
            raise ValueError("pages must be integers")
        return cls(
            id=obj.get("id", ""),
            authors=tuple(authors),
            title=obj.get("title") or "",
            journal=obj.get("journal") or "",
            year=year,
            pages=frozenset(pages),
            references=tuple(refs),
        )

    def encode(self) -> bytes:
        return canonical_json(self.to_json())

    @classmethod
    def decode(cls, data: bytes) -> "DocumentRecord":
        return cls.from_json(json.loads(data))


@dataclass(frozen=True)
class MatchResult:
    source_doc_id: str
    reference_index: int
    matched_doc_id: Optional[str]
    score: float

    def to_json(self) -> dict:
        return {
            "sourceDocId": self.source_doc_id,
            "referenceIndex": self.reference_index,
            "matchedDocId": self.matched_doc_id,
            "score": self.score,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MatchResult":
        return cls(obj["sourceDocId"], obj["referenceIndex"], obj["matchedDocId"], obj["score"])

    def encode(self) -> bytes:
        return canonical_json(self.to_json())

    @classmethod
    def decode(cls, data: bytes) -> "MatchResult":
        return cls.from_json(json.loads(data))
