"""Splitting of raw reference strings into typed tokens.

Every non-whitespace character ends up in exactly one token.  Runs of
letters and/or digits are kept whole; any other character is a token on
its own.  Offsets are ``str`` indices (code points), so
``s[tok.start:tok.end] == tok.text`` always holds.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import List


class TokenKind(enum.Enum):
    LETTERS = "Letters"
    DIGITS = "Digits"
    ALPHANUMERIC = "Alphanumeric"
    OTHER = "Other"


@dataclass(frozen=True)
class Token:
    text: str
    kind: TokenKind
    start: int
    end: int

    @property
    def is_word(self) -> bool:
        """True for tokens made of letters and/or digits."""
        return self.kind is not TokenKind.OTHER


def _is_letter(ch: str) -> bool:
    return ch.isalpha()


def _is_digit(ch: str) -> bool:
    return ch.isdecimal()


# Candidate runs: maximal runs of word characters other than "_", or any
# single non-space character.  Every letter (isalpha) and decimal digit
# (isdecimal) is a regex word character, so a run only needs checking when
# it mixes in other numeric characters such as superscripts.
_RUN = re.compile(r"[^\W_]+|\S")


def _split_run(s: str, start: int, end: int, tokens: List[Token]) -> None:
    i = start
    while i < end:
        ch = s[i]
        letter, digit = _is_letter(ch), _is_digit(ch)
        if not (letter or digit):
            tokens.append(Token(ch, TokenKind.OTHER, i, i + 1))
            i += 1
            continue
        j = i
        while j < end and (_is_letter(s[j]) or _is_digit(s[j])):
            letter = letter or _is_letter(s[j])
            digit = digit or _is_digit(s[j])
            j += 1
        if letter and digit:
            kind = TokenKind.ALPHANUMERIC
        elif letter:
            kind = TokenKind.LETTERS
        else:
            kind = TokenKind.DIGITS
        tokens.append(Token(s[i:j], kind, i, j))
        i = j


def tokenize(s: str) -> List[Token]:
    tokens: List[Token] = []
    for m in _RUN.finditer(s):
        text = m.group()
        if text.isalpha():
            tokens.append(Token(text, TokenKind.LETTERS, m.start(), m.end()))
        elif text.isdecimal():
            tokens.append(Token(text, TokenKind.DIGITS, m.start(), m.end()))
        else:
            _split_run(s, m.start(), m.end(), tokens)
    return tokens


def word_tokens(s: str) -> List[str]:
    """Texts of the letter/digit tokens of ``s``, punctuation dropped."""
    return [t.text for t in tokenize(s) if t.kind is not TokenKind.OTHER]


def name_tokens(s: str) -> List[str]:
    """Texts of the Letters and Alphanumeric tokens of ``s``."""
    return [t.text for t in tokenize(s) if t.kind in (TokenKind.LETTERS, TokenKind.ALPHANUMERIC)]
