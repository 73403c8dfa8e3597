"""Named word lists used as token features."""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Mapping, Optional

BUNDLED = ("city", "month", "journal_word", "surname_particle")

_FILES = {
    "city": "cities.txt",
    "month": "months.txt",
    "journal_word": "journal_words.txt",
    "surname_particle": "surname_particles.txt",
}


def _read_words(lines: Iterable[str]) -> FrozenSet[str]:
    words = set()
    for line in lines:
        w = line.strip()
        if w and not w.startswith("#"):
            words.add(w.casefold())
    return frozenset(words)


class Dictionaries:
    """Case-insensitive word sets, keyed by name.

    Iteration order of ``names`` is fixed at construction and determines
    the order of the dictionary-membership features.
    """

    def __init__(self, sets: Mapping[str, Iterable[str]]):
        self._sets: Dict[str, FrozenSet[str]] = {
            name: frozenset(w.casefold() for w in words) for name, words in sets.items()
        }
        self.names = tuple(self._sets)

    def contains(self, name: str, word: str) -> bool:
        return word.casefold() in self._sets[name]

    def memberships(self, word: str) -> list:
        w = word.casefold()
        return [name for name in self.names if w in self._sets[name]]

    def __getitem__(self, name: str) -> FrozenSet[str]:
        return self._sets[name]

    def __eq__(self, other) -> bool:
        return isinstance(other, Dictionaries) and self._sets == other._sets

    @classmethod
    def bundled(cls, overrides: Optional[Mapping[str, str]] = None) -> "Dictionaries":
        """Load the shipped word lists; ``overrides`` maps a name to a file path."""
        overrides = dict(overrides or {})
        sets = {}
        pkg = resources.files("citematch.parsing") / "data"
        for name in BUNDLED:
            if name in overrides:
                sets[name] = load_word_file(overrides.pop(name))
            else:
                sets[name] = _read_words((pkg / _FILES[name]).read_text("utf-8").splitlines())
        for name, path in overrides.items():
            sets[name] = load_word_file(path)
        return cls(sets)


def load_word_file(path) -> FrozenSet[str]:
    return _read_words(Path(path).read_text("utf-8").splitlines())
