"""Weighted similarity graphs, modularity and Louvain community detection."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import SampleSet
from .exceptions import ValidationError

log = logging.getLogger(__name__)

# a local move must beat staying put by more than this
_MOVE_TOL = 1e-13


@dataclass
class WeightedGraph:
    nodes: list
    adjacency: np.ndarray
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != len(self.nodes):
            raise ValidationError("adjacency must be square and match the node list")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12):
            raise ValidationError("adjacency must be symmetric")
        if np.any(A < 0):
            raise ValidationError("edge weights must be non-negative")
        self.adjacency = A

    @property
    def total_weight(self):
        return 0.5 * float(self.adjacency.sum())

    @property
    def n_edges(self):
        return int(np.count_nonzero(np.triu(self.adjacency, 1)))


@dataclass
class Partition:
    nodes: list
    assignment: np.ndarray
    modularity: float
    q_trace: list = field(default_factory=list)

    @property
    def n_communities(self):
        return len(np.unique(self.assignment))

    def communities(self):
        out = {}
        for node, c in zip(self.nodes, self.assignment):
            out.setdefault(int(c), []).append(node)
        return out

    def community_of(self, node):
        return int(self.assignment[self.nodes.index(node)])

    def to_json(self, path=None):
        doc = {
            "communities": {str(c): members for c, members in sorted(self.communities().items())},
            "modularity": self.modularity,
        }
        text = json.dumps(doc, indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, path):
        doc = json.loads(Path(path).read_text())
        nodes, assignment = [], []
        for c, members in doc["communities"].items():
            for m in members:
                nodes.append(m)
                assignment.append(int(c))
        return cls(nodes, np.array(assignment), float(doc["modularity"]))


def build_graph(sim, edge_rule="complete", threshold=None):
    """Graph whose edge weights are the off-diagonal similarity values.

    ``edge_rule`` is ``"complete"`` or ``"threshold"``; the latter drops
    edges whose weight is below ``threshold``. Isolated nodes are kept and
    reported in ``graph.warnings``.
    """
    A = np.array(sim.values, dtype=float)
    np.fill_diagonal(A, 0.0)
    if edge_rule == "threshold":
        if threshold is None:
            raise ValidationError("threshold edge rule needs a threshold value")
        A[A < threshold] = 0.0
    elif edge_rule != "complete":
        raise ValidationError(f"unknown edge rule {edge_rule!r}")
    graph = WeightedGraph(list(sim.labels), A)
    isolated = [graph.nodes[i] for i in np.flatnonzero(A.sum(axis=1) == 0)]
    if isolated and len(graph.nodes) > 1:
        msg = f"isolated node(s) after thresholding: {', '.join(isolated)}"
        graph.warnings.append(msg)
        log.warning(msg)
    return graph


def modularity(graph, assignment):
    A = graph.adjacency if isinstance(graph, WeightedGraph) else np.asarray(graph, dtype=float)
    return _modularity(A, np.asarray(assignment))


def _modularity(A, labels):
    two_m = A.sum()
    if two_m == 0:
        return 0.0
    k = A.sum(axis=1)
    q = 0.0
    for c in np.unique(labels):
        idx = labels == c
        q += A[np.ix_(idx, idx)].sum() - k[idx].sum() ** 2 / two_m
    return float(q / two_m)


def _local_moves(A, rng, trace, base_q):
    """Phase one on a (possibly aggregated) graph; returns labels and moved flag."""
    n = len(A)
    two_m = A.sum()
    k = A.sum(axis=1)
    labels = np.arange(n)
    tot = k.copy()
    moved_any = False
    q = base_q
    while True:
        moved = False
        for i in rng.permutation(n):
            own = labels[i]
            tot[own] -= k[i]
            # weight from i to each community, self-loop excluded
            w_to = np.bincount(labels, weights=A[i], minlength=n)
            w_to[own] -= A[i, i]
            cand = np.unique(np.concatenate([[own], labels[A[i] > 0]]))
            gains = w_to[cand] - tot[cand] * k[i] / two_m
            own_gain = w_to[own] - tot[own] * k[i] / two_m
            best = cand[np.argmax(gains)]  # argmax takes the lowest id on ties
            best_gain = gains.max()
            if best != own and best_gain - own_gain > _MOVE_TOL * max(1.0, k[i]):
                labels[i] = best
                tot[best] += k[i]
                q += 2.0 * (best_gain - own_gain) / two_m
                trace.append(q)
                moved = moved_any = True
            else:
                tot[own] += k[i]
        if not moved:
            return labels, moved_any, q


def _relabel(labels):
    # contiguous ids in order of first appearance
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    mapping = np.empty(labels.max() + 1, dtype=int)
    mapping[np.unique(labels)[order]] = np.arange(len(order))
    return mapping[labels]


def louvain(graph, seed=0):
    """Two-phase Louvain modularity maximisation.

    Local moves visit nodes in a seeded random order each sweep; a node joins
    the neighbouring community with the largest modularity gain (lowest id on
    ties) only if that strictly beats staying. Communities are then merged
    into super-nodes and the process repeats until no node moves.
    ``partition.q_trace`` records Q after every accepted move.
    """
    A = graph.adjacency
    n = len(A)
    if n == 0:
        raise ValidationError("graph has no nodes")
    flat = np.arange(n)
    if A.sum() == 0:
        return Partition(list(graph.nodes), flat, 0.0, [0.0])
    rng = np.random.default_rng(seed)
    q = _modularity(A, flat)
    trace = [q]
    level = A.copy()
    while True:
        labels, moved, q = _local_moves(level, rng, trace, q)
        if not moved:
            break
        labels = _relabel(labels)
        flat = labels[flat]
        C = np.zeros((len(level), labels.max() + 1))
        C[np.arange(len(level)), labels] = 1.0
        level = C.T @ level @ C
    flat = _relabel(flat)
    return Partition(list(graph.nodes), flat, _modularity(A, flat), trace)


def equivalent_training_set(partition, sample_sets):
    """Merge the sample sets of each community; keys are community ids."""
    members = {}
    known = set(partition.nodes)
    for s in sample_sets:
        if s.structure_id not in known:
            raise ValidationError(f"structure {s.structure_id!r} is not in the partition")
        members.setdefault(partition.community_of(s.structure_id), []).append(s)
    return {
        c: SampleSet.concat(f"community-{c}", parts) for c, parts in sorted(members.items())
    }
