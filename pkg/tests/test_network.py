import numpy as np
import pytest

from oracles import best_modularity, modularity as modularity_oracle
from rutnet.data import SampleSet
from rutnet.exceptions import ValidationError
from rutnet.grey import SimilarityMatrix
from rutnet.network import (
    Partition,
    WeightedGraph,
    build_graph,
    equivalent_training_set,
    louvain,
    modularity,
)


def two_cliques(w_in=1.0, w_bridge=1.0, size=4):
    n = 2 * size
    A = np.zeros((n, n))
    A[:size, :size] = w_in
    A[size:, size:] = w_in
    np.fill_diagonal(A, 0)
    A[size - 1, size] = A[size, size - 1] = w_bridge
    return WeightedGraph([f"n{i}" for i in range(n)], A)


def test_modularity_two_nodes():
    g = WeightedGraph(["a", "b"], [[0, 1], [1, 0]])
    assert modularity(g, [0, 0]) == pytest.approx(0.0, abs=1e-15)
    assert modularity(g, [0, 1]) == pytest.approx(-0.5, abs=1e-15)


def test_modularity_oracle_random():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = rng.integers(2, 9)
        A = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.7), 1)
        A = A + A.T
        if A.sum() == 0:
            continue
        labels = rng.integers(0, 3, n)
        assert modularity(A, labels) == pytest.approx(modularity_oracle(A.tolist(), labels.tolist()), abs=1e-12)


def test_graph_construction():
    sim = SimilarityMatrix(["a", "b", "c"], np.array([[1, 0.8, 0.6], [0.8, 1, 0.7], [0.6, 0.7, 1.0]]))
    g = build_graph(sim)
    assert g.n_edges == 3
    assert g.adjacency[0, 1] == 0.8 and g.adjacency[1, 2] == 0.7
    assert np.all(np.diag(g.adjacency) == 0)
    empty = build_graph(sim, "threshold", 0.95)
    assert empty.n_edges == 0 and empty.total_weight == 0
    assert empty.warnings and "isolated" in empty.warnings[0]
    with pytest.raises(ValidationError):
        build_graph(sim, "threshold")
    with pytest.raises(ValidationError):
        build_graph(sim, "knn")


def test_graph_validation():
    with pytest.raises(ValidationError):
        WeightedGraph(["a", "b"], [[0, 1], [2, 0]])
    with pytest.raises(ValidationError):
        WeightedGraph(["a", "b"], [[0, -1], [-1, 0]])


def test_louvain_two_cliques_is_exhaustive_optimum():
    g = two_cliques()
    part = louvain(g, seed=0)
    assert part.assignment.tolist() == [0, 0, 0, 0, 1, 1, 1, 1]
    assert part.modularity == pytest.approx(best_modularity(g.adjacency), abs=1e-12)


def test_louvain_zero_edges():
    g = WeightedGraph(["a", "b", "c"], np.zeros((3, 3)))
    part = louvain(g)
    assert part.n_communities == 3 and part.modularity == 0.0


def test_louvain_trace_and_determinism():
    rng = np.random.default_rng(4)
    A = np.triu(rng.random((12, 12)), 1)
    g = WeightedGraph(list("abcdefghijkl"), A + A.T)
    p1, p2 = louvain(g, seed=7), louvain(g, seed=7)
    assert p1.assignment.tolist() == p2.assignment.tolist()
    assert p1.q_trace == p2.q_trace
    assert all(b >= a - 1e-12 for a, b in zip(p1.q_trace, p1.q_trace[1:]))
    assert p1.q_trace[-1] == pytest.approx(p1.modularity, abs=1e-12)


def test_partition_json_roundtrip(tmp_path):
    part = louvain(two_cliques())
    part.to_json(tmp_path / "p.json")
    back = Partition.from_json(tmp_path / "p.json")
    assert back.communities() == part.communities()
    assert back.modularity == part.modularity


def _sset(sid, n):
    return SampleSet(sid, np.ones((n, 2)), np.arange(n, dtype=float), ["a", "b"])


def test_equivalent_training_set():
    part = Partition(["s1", "s2", "s3"], np.array([0, 0, 1]), 0.1)
    eq = equivalent_training_set(part, [_sset("s1", 71), _sset("s2", 71), _sset("s3", 5)])
    assert len(eq[0]) == 142
    assert sorted(set(eq[0].sources)) == ["s1", "s2"]
    np.testing.assert_array_equal(eq[1].y, _sset("s3", 5).y)
    with pytest.raises(ValidationError):
        equivalent_training_set(part, [_sset("zz", 3)])
