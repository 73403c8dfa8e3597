"""Training and evaluation harnesses.

``end_to_end`` trains parser and matcher on the citations of half of a
synthetic corpus, runs the matching job over the whole corpus and scores
the citations of the other half.  ``cross_validate`` runs the three-slice
pairwise protocol: per fold one slice trains the parser, one the matcher
and one is clustered and scored.
"""

from __future__ import annotations

import logging
import random
import tempfile
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .clustering import PairwiseScores, cluster_from_scores, cluster_recall, pairwise_metrics
from .labeled import ClusteredCitation
from .match_model import LinearModel, score, train
from .parsing.citation import ParsedCitation, ReferenceParser, assemble
from .parsing.dictionaries import Dictionaries
from .parsing.tagger import TaggerModel, train_tagger
from .records import DocumentRecord, MatchResult
from .rotation_index import RotationIndex, build
from .similarity import Mode, SimilarityFeatures, feature_vector
from .synth import LabeledCitation, SyntheticCorpus

log = logging.getLogger(__name__)


@dataclass
class Metrics:
    cluster_recall: float
    precision: float
    recall: float
    f1: float

    def row(self) -> Tuple[float, float, float, float]:
        return (self.cluster_recall, self.precision, self.recall, self.f1)


def metrics_for(gold: Dict, pred: Dict) -> Metrics:
    p = pairwise_metrics(gold, pred)
    return Metrics(cluster_recall(gold, pred), p.precision, p.recall, p.f1)


def train_parser(citations: Sequence[LabeledCitation], dicts: Dictionaries, epochs: int = 15, seed: int = 0) -> TaggerModel:
    return train_tagger([(c.tokens, c.labels) for c in citations], epochs, dicts, seed=seed)


def matcher_pairs(
    citations: Sequence[Tuple[ParsedCitation, str]],
    index: RotationIndex,
    docs: Dict[str, DocumentRecord],
    mode: Mode = Mode.PIPELINE,
) -> List[Tuple[SimilarityFeatures, bool]]:
    """Citation/document pairs for the matcher: the cited document is the
    positive; candidates retrieved by the index are the negatives.
    """
    out = []
    for citation, target in citations:
        cands = set(index.candidates(citation)) | {target}
        for doc_id in sorted(cands):
            out.append((feature_vector(citation, docs[doc_id], mode), doc_id == target))
    return out


@dataclass
class EndToEndReport:
    metrics: Metrics
    token_accuracy: float
    test_citations: int
    matched: int
    parser: TaggerModel
    model: LinearModel
    results: List[MatchResult]


def split_targets(corpus: SyntheticCorpus, seed: int = 0) -> Tuple[set, set]:
    ids = sorted(d.id for d in corpus.documents)
    random.Random(seed).shuffle(ids)
    half = len(ids) // 2
    return set(ids[:half]), set(ids[half:])


def end_to_end(
    corpus: SyntheticCorpus,
    dicts: Optional[Dictionaries] = None,
    *,
    seed: int = 0,
    workers: int = 1,
    threshold: float = 0.5,
    parser_epochs: int = 15,
    workdir: Optional[str] = None,
) -> EndToEndReport:
    from .mapred.jobs import job_build_index, job_match, write_docs

    dicts = dicts or Dictionaries.bundled()
    train_ids, test_ids = split_targets(corpus, seed)
    train_cits = [c for c in corpus.citations if c.target in train_ids]
    test_cits = [c for c in corpus.citations if c.target in test_ids]
    tagger = train_parser(train_cits, dicts, parser_epochs, seed)
    parser = ReferenceParser(tagger, dicts)

    right = total = 0
    for c in test_cits:
        pred = parser.labels(c.tokens)
        right += sum(p is g for p, g in zip(pred, c.labels))
        total += len(pred)

    by_id = {d.id: d for d in corpus.documents}
    index = build(corpus.documents)
    pairs = matcher_pairs([(parser.parse(c.raw), c.target) for c in train_cits], index, by_id)
    model = train(pairs, seed=seed)

    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        tmp = Path(tmp)
        write_docs(tmp / "docs.seq", corpus.documents)
        job_build_index(tmp / "docs.seq", tmp / "index", workers=workers)
        job = job_match(tmp / "docs.seq", tmp / "index", model, tagger, tmp / "matches.seq",
                        dicts=dicts, threshold=threshold, workers=workers)

    gold, pred = {}, {}
    for r in job.results:
        target = corpus.links[(r.source_doc_id, r.reference_index)]
        if target not in test_ids:
            continue
        item = (r.source_doc_id, r.reference_index)
        gold[item] = target
        pred[item] = r.matched_doc_id if r.matched_doc_id is not None else ("unmatched", item)
    return EndToEndReport(
        metrics=metrics_for(gold, pred),
        token_accuracy=right / total if total else 1.0,
        test_citations=len(gold),
        matched=sum(1 for v in pred.values() if isinstance(v, str)),
        parser=tagger,
        model=model,
        results=job.results,
    )


# -- three-slice cross-validation ---------------------------------------------


def slice_clusters(items: Sequence[ClusteredCitation], seed: int = 0, n_slices: int = 3) -> List[List[int]]:
    if any(c.cluster is None for c in items):
        raise ValueError("every citation needs a cluster id")
    clusters = sorted({c.cluster for c in items})
    random.Random(seed).shuffle(clusters)
    which = {c: k % n_slices for k, c in enumerate(clusters)}
    slices: List[List[int]] = [[] for _ in range(n_slices)]
    for i, c in enumerate(items):
        slices[which[c.cluster]].append(i)
    return slices


def _pair_sample(n_items: int, same, rng: random.Random, max_pairs: int) -> List[Tuple[int, int]]:
    pairs = list(combinations(range(n_items), 2))
    pos = [p for p in pairs if same(*p)]
    neg = [p for p in pairs if not same(*p)]
    budget = max(0, max_pairs - len(pos))
    if len(neg) > budget:
        neg = rng.sample(neg, budget)
    return sorted(pos + neg)


def cross_validate(
    items: Sequence[ClusteredCitation],
    dicts: Optional[Dictionaries] = None,
    *,
    mode: Mode = Mode.FULL,
    seed: int = 0,
    threshold: float = 0.5,
    parser_epochs: int = 15,
    max_train_pairs: int = 20000,
) -> Dict[str, Metrics]:
    """Fold ``f`` trains the parser on slice ``f``, the matcher on slice
    ``f+1`` and clusters slice ``f+2`` (indices mod 3).
    """
    dicts = dicts or Dictionaries.bundled()
    slices = slice_clusters(items, seed)
    rng = random.Random(seed)
    out: Dict[str, Metrics] = {}
    for fold in range(3):
        parser_idx, matcher_idx, test_idx = slices[fold], slices[(fold + 1) % 3], slices[(fold + 2) % 3]
        if not parser_idx or not matcher_idx or not test_idx:
            raise ValueError("every slice needs at least one citation")
        tagger = train_tagger([(items[i].tokens, items[i].labels) for i in parser_idx], parser_epochs, dicts, seed=seed)
        parser = ReferenceParser(tagger, dicts)

        def parsed(idx):
            return [assemble(items[i].tokens, parser.labels(items[i].tokens), items[i].raw) for i in idx]

        train_parsed = parsed(matcher_idx)
        pairs = _pair_sample(
            len(matcher_idx),
            lambda a, b: items[matcher_idx[a]].cluster == items[matcher_idx[b]].cluster,
            rng,
            max_train_pairs,
        )
        data = [
            (feature_vector(train_parsed[a], train_parsed[b], mode), items[matcher_idx[a]].cluster == items[matcher_idx[b]].cluster)
            for a, b in pairs
        ]
        model = train(data, seed=seed)

        test_parsed = parsed(test_idx)
        scored = [
            (a, b, score(model, feature_vector(test_parsed[a], test_parsed[b], mode)))
            for a, b in combinations(range(len(test_idx)), 2)
        ]
        pred = cluster_from_scores(list(range(len(test_idx))), scored, threshold)
        gold = {k: items[i].cluster for k, i in enumerate(test_idx)}
        out[f"fold{fold}"] = metrics_for(gold, pred)
    avg = [sum(m.row()[k] for m in out.values()) / 3 for k in range(4)]
    out["avg."] = Metrics(*avg)
    return out


def as_pairwise(m: Metrics) -> PairwiseScores:
    return PairwiseScores(m.precision, m.recall, m.f1)
