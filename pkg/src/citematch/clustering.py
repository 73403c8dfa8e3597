"""Single-link clustering of thresholded match decisions, and its metrics.

A clustering is a ``dict`` from item id to cluster id; cluster ids are the
smallest member of each cluster.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from pathlib import Path
from typing import Dict, Hashable, Iterable, List, NamedTuple, Set, Tuple

Clustering = Dict[Hashable, Hashable]


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller root wins, so roots are canonical cluster ids
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def single_link(n: int, edges: Iterable[Tuple[int, int]]) -> Dict[int, int]:
    uf = UnionFind(n)
    for i, j in edges:
        if not (0 <= i < j < n):
            raise ValueError(f"edge ({i}, {j}) is not a pair 0 <= i < j < {n}")
        uf.union(i, j)
    return {i: uf.find(i) for i in range(n)}


def cluster_from_scores(items: List[Hashable], scored_pairs, threshold: float = 0.5) -> Clustering:
    """Single-link clusters of ``items`` from (a, b, score) triples.

    Pairs scoring at least ``threshold`` are linked; cluster ids are the
    smallest member id.
    """
    items = sorted(set(items))
    index = {x: k for k, x in enumerate(items)}
    edges = set()
    for a, b, s in scored_pairs:
        if s >= threshold and a != b:
            i, j = sorted((index[a], index[b]))
            edges.add((i, j))
    labels = single_link(len(items), edges)
    return {items[i]: items[c] for i, c in labels.items()}


def members(clustering: Clustering) -> List[Set[Hashable]]:
    groups = defaultdict(set)
    for item, c in clustering.items():
        groups[c].add(item)
    return list(groups.values())


def cluster_recall(gold: Clustering, pred: Clustering) -> float:
    gold_sets = members(gold)
    if not gold_sets:
        return 1.0
    pred_sets = {frozenset(s) for s in members(pred)}
    return sum(frozenset(s) in pred_sets for s in gold_sets) / len(gold_sets)


class PairwiseScores(NamedTuple):
    precision: float
    recall: float
    f1: float


def _links(sizes: Iterable[int]) -> int:
    return sum(s * (s - 1) // 2 for s in sizes)


def pairwise_metrics(gold: Clustering, pred: Clustering) -> PairwiseScores:
    """Precision/recall/F1 over co-membership links.

    A ratio with no links in its denominator is 1 (nothing claimed, nothing
    missed); F1 is 0 when precision and recall are both 0.
    """
    if set(gold) != set(pred):
        raise ValueError("gold and predicted clusterings cover different items")
    gold_links = _links(Counter(gold.values()).values())
    pred_links = _links(Counter(pred.values()).values())
    correct = _links(Counter((gold[x], pred[x]) for x in gold).values())
    precision = correct / pred_links if pred_links else 1.0
    recall = correct / gold_links if gold_links else 1.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return PairwiseScores(precision, recall, f1)


def read_clustering(path) -> Dict[str, str]:
    """Read ``item<TAB>cluster`` lines."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected item<TAB>cluster")
        item, cluster = parts[0].strip(), parts[1].strip()
        if item in out:
            raise ValueError(f"{path}:{lineno}: item {item!r} assigned twice")
        out[item] = cluster
    return out


def write_clustering(path, clustering: Clustering) -> None:
    lines = [f"{item}\t{clustering[item]}" for item in sorted(clustering)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def format_report(rows: Dict[str, Tuple[float, float, float, float]]) -> str:
    """Metrics table with one column per fold plus the average."""
    cols = list(rows)
    metrics = ("cluster recall", "pairwise precision", "pairwise recall", "pairwise F1")
    width = max(len(m) for m in metrics) + 2
    header = " " * width + "".join(f"{c:>10}" for c in cols)
    lines = [header]
    for k, name in enumerate(metrics):
        lines.append(f"{name:<{width}}" + "".join(f"{100 * rows[c][k]:>9.2f}%" for c in cols))
    return "\n".join(lines)
