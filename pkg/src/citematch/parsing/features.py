"""Token features for the reference tagger.

Each token is described by a fixed inventory of binary base features,
grouped in five families:

* character class (6): ``all_digits``, ``all_lower``, ``all_upper``,
  ``capitalized``, ``roman``, ``mixed_alnum``
* specific character (8): ``is_dot``, ``is_comma``, ``is_dash``,
  ``is_open_bracket``, ``is_close_bracket``, ``is_quote``, ``is_colon``,
  ``is_semicolon``
* specific word (one per configured word, 12 by default)
* dictionary membership (one per named dictionary, 4 bundled)
* position (12): ``pos_0`` .. ``pos_9`` deciles, ``is_first``, ``is_last``

With the defaults that is 42 base features.  The vector of token ``i``
holds the base features of tokens ``i-2 .. i+2``, each name prefixed by
its offset (``-2:``, ``-1:``, ``0:``, ``+1:``, ``+2:``); a window slot
past either end of the sequence carries only ``<off>:OOB``.  A constant
``bias`` feature is always on.
"""

from __future__ import annotations

import re
from typing import Dict, List, Optional, Sequence

from ..tokenizer import Token, TokenKind
from .dictionaries import Dictionaries

CHAR_CLASS = ("all_digits", "all_lower", "all_upper", "capitalized", "roman", "mixed_alnum")

SPECIFIC_CHARS = {
    "is_dot": ".",
    "is_comma": ",",
    "is_dash": "-‐‑‒–—",
    "is_open_bracket": "([{",
    "is_close_bracket": ")]}",
    "is_quote": "\"'`‘’“”",
    "is_colon": ":",
    "is_semicolon": ";",
}

DEFAULT_WORDS = ("vol", "pp", "no", "and", "in", "ed", "eds", "et", "al", "proc", "pages", "volume")

POSITIONAL = tuple(f"pos_{d}" for d in range(10)) + ("is_first", "is_last")

OFFSETS = (-2, -1, 0, 1, 2)
BIAS = "bias"
OOB = "OOB"

_ROMAN = re.compile(r"^(?=[MDCLXVI])M{0,4}(CM|CD|D?C{0,3})(XC|XL|L?X{0,3})(IX|IV|V?I{0,3})$", re.IGNORECASE)


def _offset_tag(off: int) -> str:
    return "0" if off == 0 else f"{off:+d}"


class FeatureExtractor:
    def __init__(self, dicts: Dictionaries, words: Sequence[str] = DEFAULT_WORDS):
        self.dicts = dicts
        self.words = tuple(w.casefold() for w in words)
        self.base_names = (
            CHAR_CLASS
            + tuple(SPECIFIC_CHARS)
            + tuple(f"word_{w}" for w in self.words)
            + tuple(f"dict_{d}" for d in dicts.names)
            + POSITIONAL
        )
        self._word_feature = {w: f"word_{w}" for w in self.words}
        self._char_feature = {}
        for name, chars in SPECIFIC_CHARS.items():
            for ch in chars:
                self._char_feature[ch] = name
        self._prefixed = {
            off: {b: f"{_offset_tag(off)}:{b}" for b in self.base_names + (OOB,)} for off in OFFSETS
        }

    @property
    def per_position(self) -> int:
        return len(self.base_names)

    def feature_names(self) -> List[str]:
        names = [BIAS]
        for off in OFFSETS:
            names.extend(self._prefixed[off][b] for b in self.base_names)
            if off != 0:
                names.append(self._prefixed[off][OOB])
        return names

    def token_facts(self, tokens: Sequence[Token]) -> List[List[str]]:
        """Active base features of every token."""
        n = len(tokens)
        facts = []
        for i, tok in enumerate(tokens):
            text = tok.text
            active = []
            if tok.kind is TokenKind.DIGITS:
                active.append("all_digits")
            elif tok.kind is TokenKind.ALPHANUMERIC:
                active.append("mixed_alnum")
            elif tok.kind is TokenKind.LETTERS:
                if text.islower():
                    active.append("all_lower")
                if text.isupper():
                    active.append("all_upper")
                if text[0].isupper():
                    active.append("capitalized")
                if _ROMAN.match(text):
                    active.append("roman")
            if tok.kind is TokenKind.ALPHANUMERIC and text[0].isupper():
                active.append("capitalized")
            if tok.kind is TokenKind.OTHER:
                name = self._char_feature.get(text)
                if name:
                    active.append(name)
            else:
                folded = text.casefold()
                name = self._word_feature.get(folded)
                if name:
                    active.append(name)
                for d in self.dicts.memberships(folded):
                    active.append(f"dict_{d}")
            active.append(f"pos_{min(9, (10 * i) // n)}")
            if i == 0:
                active.append("is_first")
            if i == n - 1:
                active.append("is_last")
            facts.append(active)
        return facts

    def window(self, facts: List[List[str]], i: int) -> List[str]:
        n = len(facts)
        active = [BIAS]
        for off in OFFSETS:
            j = i + off
            names = self._prefixed[off]
            if 0 <= j < n:
                active.extend(names[b] for b in facts[j])
            else:
                active.append(names[OOB])
        return active

    def active_features(self, tokens: Sequence[Token]) -> List[List[str]]:
        """Names of the features that are on, for every token."""
        facts = self.token_facts(tokens)
        return [self.window(facts, i) for i in range(len(tokens))]

    def extract(self, tokens: Sequence[Token], i: int) -> Dict[str, int]:
        if not 0 <= i < len(tokens):
            raise IndexError(f"token index {i} out of range for {len(tokens)} tokens")
        facts = self.token_facts(tokens)
        on = set(self.window(facts, i))
        return {name: int(name in on) for name in self.feature_names()}


def extract_features(
    tokens: Sequence[Token], i: int, dicts: Dictionaries, words: Optional[Sequence[str]] = None
) -> Dict[str, int]:
    return FeatureExtractor(dicts, DEFAULT_WORDS if words is None else words).extract(tokens, i)
