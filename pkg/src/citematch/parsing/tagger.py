"""Linear-chain token tagger trained with the averaged structured perceptron.

Scores are emission weights (feature x label) plus label-to-label
transition weights; decoding is exact Viterbi.  Ties are resolved in the
canonical label order Author < Title < Source < Year < Pages < Other, so
an all-zero model labels every token ``Author``.
"""

from __future__ import annotations

import enum
import logging
import random
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from ..tokenizer import Token
from .dictionaries import Dictionaries
from .features import DEFAULT_WORDS, FeatureExtractor

log = logging.getLogger(__name__)

FORMAT_HEADER = "citematch-tagger"
FORMAT_VERSION = 1


class TokenLabel(enum.Enum):
    AUTHOR = "Author"
    TITLE = "Title"
    SOURCE = "Source"
    YEAR = "Year"
    PAGES = "Pages"
    OTHER = "Other"


LABELS: Tuple[TokenLabel, ...] = tuple(TokenLabel)
_LABEL_INDEX = {lab: k for k, lab in enumerate(LABELS)}
_N = len(LABELS)


class TaggerModel:
    """Immutable emission/transition weights plus the feature configuration."""

    def __init__(
        self,
        emission: Dict[str, Sequence[float]],
        transition: Sequence[Sequence[float]],
        words: Sequence[str] = DEFAULT_WORDS,
        dict_names: Sequence[str] = (),
    ):
        self.words = tuple(words)
        self.dict_names = tuple(dict_names)
        self.feature_index = {f: k for k, f in enumerate(sorted(emission))}
        self.emission = np.zeros((len(self.feature_index), _N))
        for f, k in self.feature_index.items():
            self.emission[k] = emission[f]
        self.emission.setflags(write=False)
        self.transition = np.array(transition, dtype=float).reshape(_N, _N)
        self.transition.setflags(write=False)

    @classmethod
    def zero(cls, words: Sequence[str] = DEFAULT_WORDS, dict_names: Sequence[str] = ()) -> "TaggerModel":
        return cls({}, np.zeros((_N, _N)), words, dict_names)

    def weight(self, feature: str, label: TokenLabel) -> float:
        k = self.feature_index.get(feature)
        return 0.0 if k is None else float(self.emission[k, _LABEL_INDEX[label]])

    def emissions(self, active: List[List[str]]) -> np.ndarray:
        """Per-token label scores; features unknown to the model score 0."""
        scores = np.zeros((len(active), _N))
        index = self.feature_index
        for t, names in enumerate(active):
            rows = [index[f] for f in names if f in index]
            if rows:
                scores[t] = self.emission[rows].sum(axis=0)
        return scores

    def extractor(self, dicts: Dictionaries) -> FeatureExtractor:
        if self.dict_names and tuple(dicts.names) != self.dict_names:
            raise ValueError(
                f"model was trained with dictionaries {self.dict_names}, got {tuple(dicts.names)}"
            )
        return FeatureExtractor(dicts, self.words)

    def save(self, path) -> None:
        lines = [f"{FORMAT_HEADER}\t{FORMAT_VERSION}"]
        lines.append("words\t" + "\t".join(self.words))
        lines.append("dicts\t" + "\t".join(self.dict_names))
        for f, k in self.feature_index.items():
            for j, lab in enumerate(LABELS):
                w = self.emission[k, j]
                if w != 0.0:
                    lines.append(f"E\t{f}\t{lab.value}\t{float(w)!r}")
        for i, a in enumerate(LABELS):
            for j, b in enumerate(LABELS):
                lines.append(f"T\t{a.value}\t{b.value}\t{float(self.transition[i, j])!r}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TaggerModel":
        text = Path(path).read_text(encoding="utf-8").splitlines()
        if not text or text[0].split("\t") != [FORMAT_HEADER, str(FORMAT_VERSION)]:
            raise ValueError(f"{path}: not a version {FORMAT_VERSION} tagger model")
        words: Tuple[str, ...] = ()
        dict_names: Tuple[str, ...] = ()
        emission: Dict[str, List[float]] = {}
        transition = np.zeros((_N, _N))
        by_value = {lab.value: k for k, lab in enumerate(LABELS)}
        for lineno, line in enumerate(text[1:], start=2):
            if not line:
                continue
            parts = line.split("\t")
            try:
                if parts[0] == "words":
                    words = tuple(p for p in parts[1:] if p)
                elif parts[0] == "dicts":
                    dict_names = tuple(p for p in parts[1:] if p)
                elif parts[0] == "E":
                    row = emission.setdefault(parts[1], [0.0] * _N)
                    row[by_value[parts[2]]] = float(parts[3])
                elif parts[0] == "T":
                    transition[by_value[parts[1]], by_value[parts[2]]] = float(parts[3])
                else:
                    raise ValueError(parts[0])
            except (IndexError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed model line") from exc
        return cls(emission, transition, words, dict_names)


def viterbi(emission: np.ndarray, transition: np.ndarray) -> List[int]:
    n = emission.shape[0]
    if n == 0:
        return []
    delta = emission[0].copy()
    back = np.zeros((n, _N), dtype=np.intp)
    for t in range(1, n):
        cand = delta[:, None] + transition
        # argmax returns the first maximum, i.e. the canonical-order winner
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(_N)] + emission[t]
    path = [int(np.argmax(delta))]
    for t in range(n - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return path


def sequence_score(emission: np.ndarray, transition: np.ndarray, labels: Sequence[int]) -> float:
    if not len(labels):
        return 0.0
    s = float(emission[np.arange(len(labels)), labels].sum())
    for a, b in zip(labels, labels[1:]):
        s += float(transition[a, b])
    return s


def tag(tokens: Sequence[Token], model: TaggerModel, dicts: Dictionaries) -> List[TokenLabel]:
    if not tokens:
        return []
    active = model.extractor(dicts).active_features(tokens)
    path = viterbi(model.emissions(active), model.transition)
    return [LABELS[k] for k in path]


def train_tagger(
    corpus: Iterable[Tuple[Sequence[Token], Sequence[TokenLabel]]],
    epochs: int,
    dicts: Dictionaries,
    *,
    words: Sequence[str] = DEFAULT_WORDS,
    seed: int = 0,
    shuffle: bool = True,
) -> TaggerModel:
    """Averaged structured perceptron over Viterbi decoding.

    Uses the lazy averaging trick: alongside the running weights ``w`` an
    accumulator ``u`` collects ``c * update`` so the average over all
    ``c`` steps is ``w - u / c``.
    """
    if epochs < 1:
        raise ValueError("epochs must be positive")
    extractor = FeatureExtractor(dicts, words)
    feature_index: Dict[str, int] = {}
    data = []
    for tokens, labels in corpus:
        if not tokens:
            raise ValueError("training sequences must be non-empty")
        if len(tokens) != len(labels):
            raise ValueError("token and label counts differ")
        rows = []
        for names in extractor.active_features(tokens):
            rows.append(np.array([feature_index.setdefault(f, len(feature_index)) for f in names]))
        data.append((rows, [_LABEL_INDEX[TokenLabel(lab)] for lab in labels]))
    if not data:
        raise ValueError("empty training corpus")

    nf = len(feature_index)
    w = np.zeros((nf, _N))
    u = np.zeros((nf, _N))
    tw = np.zeros((_N, _N))
    tu = np.zeros((_N, _N))
    rng = random.Random(seed)
    order = list(range(len(data)))
    c = 1
    for epoch in range(epochs):
        if shuffle:
            rng.shuffle(order)
        mistakes = 0
        for k in order:
            rows, gold = data[k]
            emission = np.stack([w[r].sum(axis=0) for r in rows])
            pred = viterbi(emission, tw)
            if pred != gold:
                mistakes += 1
                for t, (g, p) in enumerate(zip(gold, pred)):
                    if g != p:
                        r = rows[t]
                        w[r, g] += 1.0
                        w[r, p] -= 1.0
                        u[r, g] += c
                        u[r, p] -= c
                for t in range(1, len(gold)):
                    gp, gc = gold[t - 1], gold[t]
                    pp, pc = pred[t - 1], pred[t]
                    if (gp, gc) != (pp, pc):
                        tw[gp, gc] += 1.0
                        tw[pp, pc] -= 1.0
                        tu[gp, gc] += c
                        tu[pp, pc] -= c
            c += 1
        log.debug("epoch %d: %d/%d sequences mistagged", epoch + 1, mistakes, len(data))

    avg = w - u / c
    avg_t = tw - tu / c
    names = sorted(feature_index, key=feature_index.get)
    emission_map = {f: avg[k] for f, k in zip(names, range(nf)) if np.any(avg[k])}
    return TaggerModel(emission_map, avg_t, words, dicts.names)
