from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Sequence, Tuple

from ..tokenizer import Token, TokenKind, tokenize
from .dictionaries import Dictionaries
from .tagger import LABELS, TaggerModel, TokenLabel, tag, viterbi

log = logging.getLogger(__name__)

# Numbers beyond a signed 32-bit range are not years or pages.
MAX_NUMBER = 2**31 - 1


@dataclass(frozen=True)
class ParsedCitation:
    raw: str = ""
    author_text: str = ""
    title_text: str = ""
    source_text: str = ""
    year_numbers: FrozenSet[int] = frozenset()
    page_numbers: FrozenSet[int] = frozenset()
    author_tokens: Tuple[str, ...] = field(default_factory=tuple)

    def to_json(self) -> dict:
        return {
            "raw": self.raw,
            "authorText": self.author_text,
            "titleText": self.title_text,
            "sourceText": self.source_text,
            "yearNumbers": sorted(self.year_numbers),
            "pageNumbers": sorted(self.page_numbers),
            "authorTokens": list(self.author_tokens),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ParsedCitation":
        author_text = obj.get("authorText", "")
        tokens = obj.get("authorTokens")
        if tokens is None:
            tokens = [t.text for t in tokenize(author_text) if t.is_word]
        return cls(
            raw=obj.get("raw", ""),
            author_text=author_text,
            title_text=obj.get("titleText", ""),
            source_text=obj.get("sourceText", ""),
            year_numbers=frozenset(int(y) for y in obj.get("yearNumbers", ())),
            page_numbers=frozenset(int(p) for p in obj.get("pageNumbers", ())),
            author_tokens=tuple(tokens),
        )


def _numbers(tokens: Sequence[Token], labels: Sequence[TokenLabel], wanted: TokenLabel) -> FrozenSet[int]:
    out = set()
    for tok, lab in zip(tokens, labels):
        if lab is wanted and tok.kind is TokenKind.DIGITS:
            value = int(tok.text)
            if value > MAX_NUMBER:
                log.warning("ignoring out-of-range %s number %r", wanted.value, tok.text)
                continue
            out.add(value)
    return frozenset(out)


def assemble(tokens: Sequence[Token], labels: Sequence[TokenLabel], raw: Optional[str] = None) -> ParsedCitation:
    if len(tokens) != len(labels):
        raise ValueError(f"{len(tokens)} tokens but {len(labels)} labels")
    fields = {lab: [] for lab in TokenLabel}
    for tok, lab in zip(tokens, labels):
        fields[lab].append(tok.text)
    if raw is None:
        raw = " ".join(t.text for t in tokens)
    return ParsedCitation(
        raw=raw,
        author_text=" ".join(fields[TokenLabel.AUTHOR]),
        title_text=" ".join(fields[TokenLabel.TITLE]),
        source_text=" ".join(fields[TokenLabel.SOURCE]),
        year_numbers=_numbers(tokens, labels, TokenLabel.YEAR),
        page_numbers=_numbers(tokens, labels, TokenLabel.PAGES),
        author_tokens=tuple(t.text for t, lab in zip(tokens, labels) if lab is TokenLabel.AUTHOR and t.is_word),
    )


class ReferenceParser:
    """Tokenize, tag and assemble raw reference strings."""

    def __init__(self, model: TaggerModel, dicts: Dictionaries):
        self.model = model
        self.dicts = dicts
        self._extractor = model.extractor(dicts)

    def labels(self, tokens: Sequence[Token]) -> List[TokenLabel]:
        if not tokens:
            return []
        active = self._extractor.active_features(tokens)
        return [LABELS[k] for k in viterbi(self.model.emissions(active), self.model.transition)]

    def parse(self, raw: str) -> ParsedCitation:
        tokens = tokenize(raw)
        return assemble(tokens, self.labels(tokens), raw)


def parse_reference(raw: str, model: TaggerModel, dicts: Dictionaries) -> ParsedCitation:
    tokens = tokenize(raw)
    return assemble(tokens, tag(tokens, model, dicts), raw)
