"""Labeled citation files.

One ``token<TAB>Label`` line per token, a blank line between citations.
A ``# cluster=ID`` line before a citation names the publication it cites;
other ``#`` lines are comments.  Each token must be a single token under
``tokenize``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional

from .parsing.tagger import TokenLabel
from .tokenizer import Token, tokenize


@dataclass
class ClusteredCitation:
    raw: str
    tokens: List[Token]
    labels: List[TokenLabel]
    cluster: Optional[str] = None


def _rebuild(texts: List[str], path, lineno: int) -> List[Token]:
    tokens = []
    pos = 0
    for text in texts:
        parts = tokenize(text)
        if len(parts) != 1 or parts[0].text != text:
            raise ValueError(f"{path}:{lineno}: {text!r} is not a single token")
        tokens.append(Token(text, parts[0].kind, pos, pos + len(text)))
        pos += len(text) + 1
    return tokens


def read_labeled(path) -> List[ClusteredCitation]:
    out: List[ClusteredCitation] = []
    texts: List[str] = []
    labels: List[TokenLabel] = []
    cluster: Optional[str] = None
    start = 0

    def flush(lineno):
        nonlocal texts, labels, cluster
        if texts:
            tokens = _rebuild(texts, path, start)
            out.append(ClusteredCitation(" ".join(texts), tokens, labels, cluster))
        elif cluster is not None:
            raise ValueError(f"{path}:{lineno}: cluster header without tokens")
        texts, labels, cluster = [], [], None

    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            flush(lineno)
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("cluster="):
                if texts:
                    flush(lineno)
                cluster = body[len("cluster="):].strip()
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected token<TAB>label")
        try:
            label = TokenLabel(parts[1].strip())
        except ValueError:
            raise ValueError(f"{path}:{lineno}: unknown label {parts[1]!r}") from None
        if not texts:
            start = lineno
        texts.append(parts[0])
        labels.append(label)
    flush(len(lines) + 1)
    return out


def write_labeled(path, citations: Iterable[ClusteredCitation]) -> int:
    blocks = []
    for c in citations:
        lines = [] if c.cluster is None else [f"# cluster={c.cluster}"]
        lines += [f"{t.text}\t{lab.value}" for t, lab in zip(c.tokens, c.labels)]
        blocks.append("\n".join(lines))
    Path(path).write_text("\n\n".join(blocks) + ("\n" if blocks else ""), encoding="utf-8")
    return len(blocks)
