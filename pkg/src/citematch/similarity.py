"""Field-level similarity measures between a citation and a candidate.

Trigram and token similarity are Dice coefficients over multisets,
``2 * |A & B| / (|A| + |B|)`` with multiset-min intersection, so identical
inputs score exactly 1.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, fields
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .parsing.citation import ParsedCitation
from .records import DocumentRecord
from .tokenizer import word_tokens


class Mode(enum.Enum):
    FULL = "Full"
    PIPELINE = "Pipeline"


FULL_FEATURES = (
    "authorComplex",
    "authorTokenSim",
    "authorTrigramSim",
    "sourceLcs",
    "titleTrigram",
    "yearEqual",
    "pagesJaccard",
    "wholeRaw",
    "wholeLetters",
    "wholeDigits",
)
PIPELINE_FEATURES = (
    "authorTokenSim",
    "authorTrigramSim",
    "sourceLcs",
    "titleTrigram",
    "yearEqual",
    "pagesJaccard",
)


def feature_names(mode: Mode) -> Tuple[str, ...]:
    return FULL_FEATURES if mode is Mode.FULL else PIPELINE_FEATURES


# -- multiset similarities ---------------------------------------------------


def trigram_multiset(s: str) -> Counter:
    return Counter([s[i : i + 3] for i in range(len(s) - 2)])


# candidate documents recur across citations, so their trigram counts are
# worth keeping; callers never mutate the cached counters
_trigrams = lru_cache(maxsize=1 << 16)(trigram_multiset)


def _dice(a: Counter, b: Counter) -> float:
    if len(a) > len(b):
        a, b = b, a
    common = 0
    for gram, n in a.items():
        m = b.get(gram)
        if m:
            common += n if n < m else m
    return 2.0 * common / (sum(a.values()) + sum(b.values()))


def sim_trigram(s: str, t: str) -> float:
    a, b = _trigrams(s), _trigrams(t)
    if not a and not b:
        return 1.0 if s == t else 0.0
    if not a or not b:
        return 0.0
    return _dice(a, b)


def sim_token(s: str, t: str) -> float:
    ta = [w.lower() for w in word_tokens(s)]
    tb = [w.lower() for w in word_tokens(t)]
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    return _dice(Counter(ta), Counter(tb))


# -- edit distance -----------------------------------------------------------


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def edit_distance_ex(a: str, b: str) -> int:
    """Levenshtein distance, except that a short prefix counts as distance 1.

    A token of length <= 2 that is a (case-insensitive) prefix of the other
    token is treated as its abbreviation: ``"J"`` vs ``"John"`` is 1.
    """
    if a == b:
        return 0
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    if len(short) <= 2 and long_.casefold().startswith(short.casefold()):
        return 1
    return levenshtein(a, b)


def token_pair_similarity(a: str, b: str) -> float:
    if not a or not b:
        raise ValueError("token similarity is undefined for empty tokens")
    sim = 1.0 - edit_distance_ex(a, b) / max(len(a), len(b))
    return min(1.0, max(0.0, sim))


# -- author matching ---------------------------------------------------------


def _rescale(initial: List[float], anchors: List[Tuple[float, float]]) -> List[float]:
    """Map each position piecewise-linearly between consecutive anchors.

    ``anchors`` are (initial, final) pairs sorted by initial position and
    include the virtual ends (0, 0) and (1, 1).
    """
    out = []
    k = 0
    for p in initial:
        while anchors[k + 1][0] < p:
            k += 1
        (l, l2), (r, r2) = anchors[k], anchors[k + 1]
        out.append(l2 + (p - l) * (r2 - l2) / (r - l))
    return out


def boundary_positions(
    tokens_a: Sequence[str], tokens_b: Sequence[str]
) -> Tuple[List[float], List[float]]:
    """Normalised positions of two token sequences after boundary alignment.

    Equal tokens (case-insensitive) are paired greedily left to right,
    never crossing an earlier pair, so the alignment is order-preserving.
    Each pair is moved to the mean of its two initial positions; all other
    tokens are rescaled between their neighbouring boundaries.

    The greedy scan runs over the smaller of the two sequences (casefolded,
    compared as lists), which keeps the result symmetric.
    """
    fa = [t.casefold() for t in tokens_a]
    fb = [t.casefold() for t in tokens_b]
    if fb < fa:
        out_b, out_a = boundary_positions(tokens_b, tokens_a)
        return out_a, out_b
    na, nb = len(tokens_a), len(tokens_b)
    pa = [(i + 0.5) / na for i in range(na)]
    pb = [(j + 0.5) / nb for j in range(nb)]
    pairs = []
    next_j = 0
    for i, tok in enumerate(fa):
        for j in range(next_j, nb):
            if fb[j] == tok:
                pairs.append((i, j))
                next_j = j + 1
                break
    anchors_a = [(0.0, 0.0)]
    anchors_b = [(0.0, 0.0)]
    for i, j in pairs:
        mid = (pa[i] + pb[j]) / 2.0
        anchors_a.append((pa[i], mid))
        anchors_b.append((pb[j], mid))
    anchors_a.append((1.0, 1.0))
    anchors_b.append((1.0, 1.0))
    out_a = _rescale(pa, anchors_a)
    out_b = _rescale(pb, anchors_b)
    # boundary tokens sit exactly on their averaged position
    for (i, j), (_, mid) in zip(pairs, anchors_a[1:-1]):
        out_a[i] = out_b[j] = mid
    return out_a, out_b


def author_weight_matrix(a: Sequence[str], b: Sequence[str]) -> np.ndarray:
    """Pair weights: token similarity damped by positional distance."""
    la = [t.lower() for t in a]
    lb = [t.lower() for t in b]
    pos_a, pos_b = boundary_positions(la, lb)
    w = np.empty((len(la), len(lb)))
    for i, ta in enumerate(la):
        for j, tb in enumerate(lb):
            w[i, j] = token_pair_similarity(ta, tb) * (1.0 - abs(pos_a[i] - pos_b[j]))
    return w


def sim_author_complex(a: Sequence[str], b: Sequence[str]) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    w = author_weight_matrix(a, b)
    rows, cols = linear_sum_assignment(w, maximize=True)
    return float(w[rows, cols].sum()) / max(len(a), len(b))


def sim_author_simple(a: str, b: str) -> Tuple[float, float]:
    return sim_token(a, b), sim_trigram(a.lower(), b.lower())


# -- other fields ------------------------------------------------------------


def lcs_length(a: str, b: str) -> int:
    """Length of the longest common subsequence (bit-parallel).

    Bit ``i`` of ``v`` is cleared once ``a[i]`` has been used by the LCS of
    the prefix of ``b`` scanned so far (Crochemore et al. bit-vector scheme).
    """
    if not a or not b:
        return 0
    masks = {}
    for i, ch in enumerate(a):
        masks[ch] = masks.get(ch, 0) | (1 << i)
    full = (1 << len(a)) - 1
    v = full
    for ch in b:
        m = masks.get(ch)
        if m:
            u = v & m
            v = ((v + u) | (v - u)) & full
    return len(a) - bin(v).count("1")


def _squash(s: str) -> str:
    return " ".join(s.lower().split())


def sim_source(a: str, b: str) -> float:
    a, b = _squash(a), _squash(b)
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return lcs_length(a, b) / min(len(a), len(b))


def sim_title(a: str, b: str) -> float:
    a, b = a.strip().lower(), b.strip().lower()
    if not a or not b:
        return 0.0
    return sim_trigram(a, b)


def _closest_to_2000(years) -> int:
    return min(years, key=lambda y: (abs(y - 2000), y))


def sim_year(a, b) -> int:
    if not a or not b:
        return 0
    return int(_closest_to_2000(a) == _closest_to_2000(b))


def sim_pages(a, b) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def whole_string_features(a: str, b: str) -> Tuple[float, float, float]:
    letters_a = "".join(ch for ch in a if ch.isalpha())
    letters_b = "".join(ch for ch in b if ch.isalpha())
    digits_a = "".join(ch for ch in a if ch.isdecimal())
    digits_b = "".join(ch for ch in b if ch.isdecimal())
    return sim_trigram(a, b), sim_trigram(letters_a, letters_b), sim_trigram(digits_a, digits_b)


# -- feature vector ----------------------------------------------------------


@dataclass(frozen=True)
class SimilarityFeatures:
    mode: Mode
    authorTokenSim: float
    authorTrigramSim: float
    sourceLcs: float
    titleTrigram: float
    yearEqual: float
    pagesJaccard: float
    authorComplex: Optional[float] = None
    wholeRaw: Optional[float] = None
    wholeLetters: Optional[float] = None
    wholeDigits: Optional[float] = None

    def __post_init__(self):
        extra = (self.authorComplex, self.wholeRaw, self.wholeLetters, self.wholeDigits)
        if self.mode is Mode.PIPELINE and any(x is not None for x in extra):
            raise ValueError("pipeline-mode features carry no whole-string or complex-author values")
        if self.mode is Mode.FULL and any(x is None for x in extra):
            raise ValueError("full-mode features need every component")
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name != "mode" and v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{f.name}={v} outside [0, 1]")

    @property
    def names(self) -> Tuple[str, ...]:
        return feature_names(self.mode)

    def values(self) -> Tuple[float, ...]:
        return tuple(float(getattr(self, n)) for n in self.names)

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.values()))

    @classmethod
    def from_values(cls, mode: Mode, values: Sequence[float]) -> "SimilarityFeatures":
        names = feature_names(mode)
        if len(values) != len(names):
            raise ValueError(f"{mode.value} mode expects {len(names)} values, got {len(values)}")
        return cls(mode=mode, **dict(zip(names, (float(v) for v in values))))


def feature_vector(
    a: ParsedCitation, b: Union[ParsedCitation, DocumentRecord], mode: Mode = Mode.FULL
) -> SimilarityFeatures:
    if isinstance(b, DocumentRecord):
        b = b.as_citation()
    tok, tri = sim_author_simple(a.author_text, b.author_text)
    common = dict(
        authorTokenSim=tok,
        authorTrigramSim=tri,
        sourceLcs=sim_source(a.source_text, b.source_text),
        titleTrigram=sim_title(a.title_text, b.title_text),
        yearEqual=float(sim_year(a.year_numbers, b.year_numbers)),
        pagesJaccard=sim_pages(a.page_numbers, b.page_numbers),
    )
    if mode is Mode.PIPELINE:
        return SimilarityFeatures(mode=mode, **common)
    raw, letters, digits = whole_string_features(a.raw, b.raw)
    return SimilarityFeatures(
        mode=mode,
        authorComplex=sim_author_complex(a.author_tokens, b.author_tokens),
        wholeRaw=raw,
        wholeLetters=letters,
        wholeDigits=digits,
        **common,
    )
