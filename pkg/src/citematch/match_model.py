"""Linear max-margin match classifier with a logistic output.

Training is primal Pegasos (hinge loss, step ``1/(lambda*t)``, optional
ball projection) over the bias-augmented feature vectors, averaging the
iterates.  A two-parameter logistic (Platt) fit on the training margins
maps decision values into (0, 1) so that 0.5 is a meaningful threshold.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .similarity import Mode, SimilarityFeatures, feature_names

log = logging.getLogger(__name__)

FORMAT_HEADER = "citematch-linear"
FORMAT_VERSION = 1


class ModeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LinearModel:
    weights: Dict[str, float]
    bias: float
    mode: Mode
    scale: float = 1.0
    offset: float = 0.0
    loss_history: Tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if set(self.weights) != set(feature_names(self.mode)):
            raise ValueError(f"weights must cover exactly the {self.mode.value} feature names")

    def margin(self, f: SimilarityFeatures) -> float:
        if f.mode is not self.mode:
            raise ModeMismatch(f"model is {self.mode.value}, features are {f.mode.value}")
        return sum(self.weights[n] * v for n, v in zip(f.names, f.values())) + self.bias

    def save(self, path) -> None:
        lines = [
            f"{FORMAT_HEADER}\t{FORMAT_VERSION}",
            f"mode\t{self.mode.value}",
            f"bias\t{self.bias!r}",
            f"scale\t{self.scale!r}",
            f"offset\t{self.offset!r}",
        ]
        lines += [f"w\t{n}\t{self.weights[n]!r}" for n in feature_names(self.mode)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "LinearModel":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or lines[0].split("\t") != [FORMAT_HEADER, str(FORMAT_VERSION)]:
            raise ValueError(f"{path}: not a version {FORMAT_VERSION} linear model")
        attrs: Dict[str, str] = {}
        weights: Dict[str, float] = {}
        try:
            for line in lines[1:]:
                if not line:
                    continue
                parts = line.split("\t")
                if parts[0] == "w":
                    weights[parts[1]] = float(parts[2])
                else:
                    attrs[parts[0]] = parts[1]
            return cls(
                weights=weights,
                bias=float(attrs["bias"]),
                mode=Mode(attrs["mode"]),
                scale=float(attrs.get("scale", 1.0)),
                offset=float(attrs.get("offset", 0.0)),
            )
        except (IndexError, KeyError, ValueError) as exc:
            raise ValueError(f"{path}: malformed linear model") from exc


def _logistic(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def score(model: LinearModel, f: SimilarityFeatures) -> float:
    return _logistic(model.scale * model.margin(f) + model.offset)


def is_match(score_value: float, threshold: float = 0.5) -> bool:
    return score_value >= threshold


def objective(w: np.ndarray, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Regularised hinge loss; ``X`` already carries the bias column."""
    hinge = np.maximum(0.0, 1.0 - y * (X @ w))
    return 0.5 * lam * float(w @ w) + float(hinge.mean())


def fit_platt(margins: np.ndarray, y: np.ndarray, iters: int = 100) -> Tuple[float, float]:
    """Fit ``P(match) = sigmoid(a * margin + b)`` by Newton's method.

    Targets are Platt's smoothed labels, which keeps the fit finite on
    separable data.
    """
    pos = int((y > 0).sum())
    neg = len(y) - pos
    t = np.where(y > 0, (pos + 1.0) / (pos + 2.0), 1.0 / (neg + 2.0))
    a, b = 1.0, 0.0

    def nll(a, b):
        z = a * margins + b
        return float(np.sum(np.logaddexp(0.0, z) - t * z))

    cur = nll(a, b)
    for _ in range(iters):
        p = 1.0 / (1.0 + np.exp(-(a * margins + b)))
        g = np.array([np.sum((p - t) * margins), np.sum(p - t)])
        s = p * (1.0 - p) + 1e-12
        h = np.array(
            [[np.sum(s * margins * margins), np.sum(s * margins)], [np.sum(s * margins), np.sum(s)]]
        )
        h += 1e-9 * np.eye(2)
        step = np.linalg.solve(h, g)
        lr = 1.0
        while lr > 1e-10:
            na, nb = a - lr * step[0], b - lr * step[1]
            new = nll(na, nb)
            if new <= cur:
                break
            lr /= 2.0
        else:
            break
        if cur - new < 1e-12:
            a, b, cur = na, nb, new
            break
        a, b, cur = na, nb, new
    return float(a), float(b)


def _as_arrays(data: Sequence[Tuple[SimilarityFeatures, bool]]) -> Tuple[Mode, np.ndarray, np.ndarray]:
    if not data:
        raise ValueError("no training data")
    mode = data[0][0].mode
    examples = []
    for f, label in data:
        if f.mode is not mode:
            raise ModeMismatch("training features mix Full and Pipeline modes")
        examples.append((f.values() + (1.0,), 1.0 if label else -1.0))
    # canonical order, so the seeded shuffle alone decides the visiting order
    examples.sort()
    rows = [x for x, _ in examples]
    labels = [lab for _, lab in examples]
    y = np.array(labels)
    if (y > 0).all() or (y < 0).all():
        raise ValueError("training data needs both match and non-match examples")
    return mode, np.array(rows), y


def train(
    data: Sequence[Tuple[SimilarityFeatures, bool]],
    epochs: int = 50,
    lam: float = 1e-3,
    seed: int = 0,
    *,
    project: bool = True,
    calibrate: bool = True,
) -> LinearModel:
    mode, X, y = _as_arrays(data)
    if epochs < 1:
        raise ValueError("epochs must be positive")
    if lam <= 0:
        raise ValueError("regularisation must be positive")
    n, d = X.shape
    rng = np.random.default_rng(seed)
    w = np.zeros(d)
    total = np.zeros(d)
    radius = 1.0 / math.sqrt(lam)
    history: List[float] = []
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            xi, yi = X[i], y[i]
            violated = yi * float(w @ xi) < 1.0
            w *= 1.0 - eta * lam
            if violated:
                w += (eta * yi) * xi
            if project:
                norm = math.sqrt(float(w @ w))
                if norm > radius:
                    w *= radius / norm
            total += w
        history.append(objective(total / t, X, y, lam))
    avg = total / t
    weights = {name: float(v) for name, v in zip(feature_names(mode), avg[:-1])}
    bias = float(avg[-1])
    scale, offset = 1.0, 0.0
    if calibrate:
        scale, offset = fit_platt(X @ avg, y)
        if not scale > 0:
            log.warning("calibration slope %.3g is not positive; using identity calibration", scale)
            scale, offset = 1.0, 0.0
    return LinearModel(weights, bias, mode, scale, offset, tuple(history))


def training_accuracy(model: LinearModel, data: Iterable[Tuple[SimilarityFeatures, bool]], threshold=0.5) -> float:
    data = list(data)
    hits = sum(is_match(score(model, f), threshold) == label for f, label in data)
    return hits / len(data)


def load_training_file(path) -> List[Tuple[SimilarityFeatures, bool]]:
    """Read a CSV/TSV file with one column per feature name plus ``label``.

    The header decides the mode; labels are ``1``/``0``, ``match``/
    ``non-match`` or ``true``/``false``.
    """
    text = Path(path).read_text(encoding="utf-8")
    dialect = csv.Sniffer().sniff(text.splitlines()[0], delimiters=",\t;") if text else csv.excel
    reader = csv.DictReader(text.splitlines(), dialect=dialect)
    header = [h for h in (reader.fieldnames or []) if h != "label"]
    for mode in Mode:
        if set(header) == set(feature_names(mode)):
            break
    else:
        raise ValueError(f"{path}: header does not name the Full or Pipeline feature set")
    out = []
    for lineno, row in enumerate(reader, start=2):
        raw = (row.get("label") or "").strip().lower()
        if raw in ("1", "match", "true", "yes"):
            label = True
        elif raw in ("0", "-1", "non-match", "nonmatch", "false", "no"):
            label = False
        else:
            raise ValueError(f"{path}:{lineno}: bad label {raw!r}")
        try:
            values = [float(row[n]) for n in feature_names(mode)]
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: bad feature value") from exc
        out.append((SimilarityFeatures.from_values(mode, values), label))
    return out


def write_training_file(path, data: Sequence[Tuple[SimilarityFeatures, bool]]) -> None:
    if not data:
        raise ValueError("no rows to write")
    names = data[0][0].names
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + ["label"])
        for f, label in data:
            writer.writerow([repr(v) for v in f.values()] + [1 if label else 0])
