import random

import pytest
from hypothesis import given, strategies as st

import oracles
from citematch.clustering import (
    UnionFind,
    cluster_from_scores,
    cluster_recall,
    format_report,
    members,
    pairwise_metrics,
    read_clustering,
    single_link,
    write_clustering,
)


def groups(clustering):
    return sorted(sorted(m) for m in members(clustering))


def test_single_link_examples():
    assert groups(single_link(3, {(0, 1)})) == [[0, 1], [2]]
    assert groups(single_link(4, {(0, 1), (1, 2)})) == [[0, 1, 2], [3]]
    assert single_link(0, []) == {}


def test_single_link_canonical_ids():
    c = single_link(5, [(3, 4), (1, 4)])
    assert c == {0: 0, 1: 1, 2: 2, 3: 1, 4: 1}


def test_single_link_rejects_bad_edges():
    for bad in [(1, 1), (2, 1), (-1, 2), (0, 3)]:
        with pytest.raises(ValueError):
            single_link(3, [bad])


def test_single_link_against_bfs():
    rng = random.Random(0)
    for _ in range(200):
        n = rng.randint(1, 12)
        edges = {tuple(sorted(rng.sample(range(n), 2))) for _ in range(rng.randint(0, 2 * n))} if n > 1 else set()
        assert single_link(n, edges) == oracles.components(n, edges)


@given(st.integers(2, 10).flatmap(lambda n: st.tuples(st.just(n), st.lists(
    st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] < e[1]), max_size=15))))
def test_single_link_edge_order_independent(case):
    n, edges = case
    assert single_link(n, edges) == single_link(n, list(reversed(edges)))


def test_union_find_smaller_root():
    uf = UnionFind(4)
    uf.union(3, 2)
    uf.union(2, 1)
    assert uf.find(3) == 1


def test_cluster_from_scores():
    pairs = [("a", "b", 0.9), ("b", "c", 0.4), ("c", "d", 0.5)]
    c = cluster_from_scores(["a", "b", "c", "d", "e"], pairs, 0.5)
    assert c == {"a": "a", "b": "a", "c": "c", "d": "c", "e": "e"}
    assert len(set(cluster_from_scores("abcde", pairs, 1.01).values())) == 5


def test_cluster_recall_examples():
    gold = {0: 0, 1: 0, 2: 2}
    assert cluster_recall(gold, gold) == 1.0
    assert cluster_recall(gold, {0: 0, 1: 1, 2: 2}) == 0.5
    assert cluster_recall({0: 0, 1: 1, 2: 2}, {0: 0, 1: 0, 2: 0}) == 0.0


def test_pairwise_examples():
    gold = {0: 0, 1: 0, 2: 0}
    assert pairwise_metrics(gold, gold) == (1.0, 1.0, 1.0)
    p, r, f = pairwise_metrics(gold, {0: 0, 1: 0, 2: 2})
    assert p == 1.0 and r == pytest.approx(1 / 3) and f == pytest.approx(0.5)
    p, r, f = pairwise_metrics(gold, {0: 0, 1: 1, 2: 2})
    assert p == 1.0 and r == 0.0 and f == 0.0
    singles = {0: 0, 1: 1}
    assert pairwise_metrics(singles, singles) == (1.0, 1.0, 1.0)


def test_pairwise_requires_same_items():
    with pytest.raises(ValueError):
        pairwise_metrics({0: 0}, {1: 1})


clusterings = st.integers(1, 9).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 3), min_size=n, max_size=n),
                        st.lists(st.integers(0, 3), min_size=n, max_size=n)))


@given(clusterings)
def test_pairwise_against_link_oracle_and_duality(case):
    g, p = case
    gold = dict(enumerate(g))
    pred = dict(enumerate(p))
    gl, pl = oracles.pair_links(gold), oracles.pair_links(pred)
    prec, rec, f1 = pairwise_metrics(gold, pred)
    assert prec == (len(gl & pl) / len(pl) if pl else 1.0)
    assert rec == (len(gl & pl) / len(gl) if gl else 1.0)
    rp, rr, _ = pairwise_metrics(pred, gold)
    assert prec == rr and rec == rp
    if prec > 0 and rec > 0:
        assert min(prec, rec) - 1e-12 <= f1 <= max(prec, rec) + 1e-12


def test_clustering_file_round_trip(tmp_path):
    c = {"x#1": "d2", "x#0": "d1", "y#0": "d1"}
    p = tmp_path / "c.tsv"
    write_clustering(p, c)
    assert read_clustering(p) == c
    p.write_text("a\tb\na\tc\n")
    with pytest.raises(ValueError):
        read_clustering(p)
    p.write_text("a b\n")
    with pytest.raises(ValueError):
        read_clustering(p)


def test_report_format():
    text = format_report({"fold0": (1.0, 0.5, 0.25, 1 / 3), "avg.": (1, 1, 1, 1)})
    lines = text.splitlines()
    assert "fold0" in lines[0] and "avg." in lines[0]
    assert lines[2].startswith("pairwise precision") and "50.00%" in lines[2]
    assert len(lines) == 5
