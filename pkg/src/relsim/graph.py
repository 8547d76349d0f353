"""Attributed graph container: adjacency, features, partial labels, mutations.

The graph is undirected and simple (no self-loops, no parallel edges); each
edge carries an optional positive weight (default 1.0). Node ids are dense in
[0, n) for freshly built graphs. Deleting a node leaves a tombstone so that
ids held by callers (e.g. a UI session) stay valid; ``compact()`` produces a
dense re-indexed copy together with the old->new id map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from collections import deque

import numpy as np
import scipy.sparse as sp


class GraphError(Exception):
    """Base class for graph construction and mutation failures."""


class InvalidNodeError(GraphError, KeyError):
    """Referenced node id does not exist (or is deleted)."""


class MutationError(GraphError, ValueError):
    """Mutation would violate a graph invariant; the graph is unchanged."""


MUTATION_OPS = (
    "add_node",
    "delete_node",
    "add_edge",
    "delete_edge",
    "set_label",
    "clear_label",
    "set_feature",
)


@dataclass(frozen=True)
class ChangeRecord:
    """Outcome of a single mutation: which nodes a localized re-inference must revisit."""

    op: str
    touched: frozenset
    graph_version: int
    detail: dict = field(default_factory=dict)


class AttributedGraph:
    """Undirected attributed graph with per-node feature rows and partial labels.

    Parameters
    ----------
    node_count : int
        Number of nodes; ids are 0..node_count-1.
    edges : iterable of (u, v) or (u, v, weight), optional
    features : array of shape (node_count, d), optional
        d may be 0 (graph-only learning).
    labels : dict mapping node id -> class id in [0, class_count), optional
    class_count : int, optional
        Defaults to max(labels)+1 when labels are given, else 0.
    """

    def __init__(self, node_count, edges=None, features=None, labels=None,
                 class_count=None):
        if node_count < 0:
            raise GraphError("node_count must be nonnegative")
        self._adj = [dict() for _ in range(node_count)]
        self._alive = [True] * node_count
        self._n_alive = node_count
        self._m = 0
        if features is None:
            self._X = np.zeros((node_count, 0), dtype=float)
        else:
            self._X = np.array(features, dtype=float)
            if self._X.ndim != 2 or self._X.shape[0] != node_count:
                raise GraphError(
                    f"feature matrix must have {node_count} rows, got shape {self._X.shape}")
        self._labels = {}
        labels = dict(labels or {})
        if class_count is None:
            class_count = (max(labels.values()) + 1) if labels else 0
        self.class_count = int(class_count)
        self._version = 0
        self._csr_cache = None
        for u, v in labels.items():
            self._check_node(u)
            if not (0 <= v < self.class_count):
                raise GraphError(f"label {v} for node {u} outside [0, {self.class_count})")
            self._labels[u] = int(v)
        for e in edges or []:
            if len(e) == 3:
                u, v, w = e
            else:
                u, v = e
                w = 1.0
            self.add_edge(int(u), int(v), float(w))
        self._version = 0

    # ------------------------------------------------------------------ views

    @property
    def node_count(self):
        return self._n_alive

    @property
    def edge_count(self):
        return self._m

    @property
    def feature_dim(self):
        return self._X.shape[1]

    @property
    def version(self):
        """Monotonic counter bumped by every successful mutation."""
        return self._version

    @property
    def slot_count(self):
        """Size of the underlying id space, including tombstoned slots."""
        return len(self._adj)

    @property
    def features(self):
        """Feature rows indexed by node id (tombstoned rows are zero)."""
        return self._X

    @property
    def labels(self):
        return dict(self._labels)

    @property
    def is_compact(self):
        """True when node ids are dense in [0, node_count)."""
        return self._n_alive == len(self._adj)

    def is_active(self, v):
        return 0 <= v < len(self._adj) and self._alive[v]

    def nodes(self):
        """Sorted list of live node ids."""
        return [v for v in range(len(self._adj)) if self._alive[v]]

    def edges(self):
        """Iterate (u, v, weight) with u < v."""
        for u in range(len(self._adj)):
            for v, w in self._adj[u].items():
                if u < v:
                    yield u, v, w

    def neighbors(self, v):
        self._check_node(v)
        return sorted(self._adj[v])

    def degree(self, v):
        self._check_node(v)
        return len(self._adj[v])

    def has_edge(self, u, v):
        self._check_node(u)
        self._check_node(v)
        return v in self._adj[u]

    def edge_weight(self, u, v):
        if not self.has_edge(u, v):
            raise InvalidNodeError(f"no edge ({u}, {v})")
        return self._adj[u][v]

    def label(self, v):
        self._check_node(v)
        return self._labels.get(v)

    def neighborhood(self, v, h):
        """All nodes at shortest-path distance 1..h from v (the h-ball, v excluded)."""
        self._check_node(v)
        if h < 1:
            raise GraphError("h must be >= 1")
        seen = {v}
        frontier = [v]
        ball = set()
        for _ in range(h):
            nxt = []
            for u in frontier:
                for w in self._adj[u]:
                    if w not in seen:
                        seen.add(w)
                        ball.add(w)
                        nxt.append(w)
            if not nxt:
                break
            frontier = nxt
        return ball

    def ball(self, seeds, radius):
        """Union of ``seeds`` (live ones) and every node within ``radius`` hops of any seed."""
        out = {v for v in seeds if self.is_active(v)}
        frontier = deque(out)
        dist = {v: 0 for v in out}
        while frontier:
            u = frontier.popleft()
            if dist[u] == radius:
                continue
            for w in self._adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    out.add(w)
                    frontier.append(w)
        return out

    def adjacency_csr(self):
        """Weighted adjacency as scipy CSR over the slot id space (cached per version)."""
        if self._csr_cache is not None and self._csr_cache[0] == self._version:
            return self._csr_cache[1]
        n = len(self._adj)
        rows, cols, vals = [], [], []
        for u in range(n):
            for v, w in self._adj[u].items():
                rows.append(u)
                cols.append(v)
                vals.append(w)
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        self._csr_cache = (self._version, mat)
        return mat

    # -------------------------------------------------------------- mutations

    def mutate(self, op, **kwargs):
        """Apply one named mutation and return its ChangeRecord.

        Ops: add_node, delete_node, add_edge, delete_edge, set_label,
        clear_label, set_feature. Invalid mutations raise MutationError or
        InvalidNodeError and leave the graph unchanged.
        """
        if op not in MUTATION_OPS:
            raise MutationError(f"unknown mutation op {op!r}")
        return getattr(self, op)(**kwargs)

    def add_node(self, features=None, label=None, reuse_id=None):
        if reuse_id is not None:
            if not (0 <= reuse_id < len(self._adj)) or self._alive[reuse_id]:
                raise MutationError(f"cannot reuse id {reuse_id}: not a deleted slot")
            v = reuse_id
            self._alive[v] = True
        else:
            v = len(self._adj)
            self._adj.append(dict())
            self._alive.append(True)
            self._X = np.vstack([self._X, np.zeros((1, self._X.shape[1]))])
        self._n_alive += 1
        if features is not None:
            row = np.asarray(features, dtype=float)
            if row.shape != (self._X.shape[1],):
                self._alive[v] = False
                self._n_alive -= 1
                raise MutationError(
                    f"feature row must have length {self._X.shape[1]}, got {row.shape}")
            self._X[v] = row
        else:
            self._X[v] = 0.0
        if label is not None:
            if not (0 <= label < self.class_count):
                self._alive[v] = False
                self._n_alive -= 1
                raise MutationError(f"label {label} outside [0, {self.class_count})")
            self._labels[v] = int(label)
        self._bump()
        return ChangeRecord("add_node", frozenset([v]), self._version, {"node": v})

    def delete_node(self, v):
        self._check_node(v)
        touched = {v} | set(self._adj[v])
        for u in list(self._adj[v]):
            del self._adj[u][v]
            self._m -= 1
        self._adj[v] = dict()
        self._alive[v] = False
        self._n_alive -= 1
        self._labels.pop(v, None)
        self._X[v] = 0.0
        self._bump()
        return ChangeRecord("delete_node", frozenset(touched), self._version, {"node": v})

    def add_edge(self, u, v, weight=1.0):
        self._check_node(u)
        self._check_node(v)
        if u == v:
            raise MutationError(f"self-loop ({u}, {v}) not allowed")
        if v in self._adj[u]:
            raise MutationError(f"duplicate edge ({u}, {v})")
        if not (weight > 0):
            raise MutationError(f"edge weight must be positive, got {weight}")
        self._adj[u][v] = float(weight)
        self._adj[v][u] = float(weight)
        self._m += 1
        self._bump()
        return ChangeRecord("add_edge", frozenset([u, v]), self._version,
                            {"u": u, "v": v, "weight": float(weight)})

    def delete_edge(self, u, v):
        self._check_node(u)
        self._check_node(v)
        if v not in self._adj[u]:
            raise MutationError(f"no edge ({u}, {v}) to delete")
        w = self._adj[u].pop(v)
        del self._adj[v][u]
        self._m -= 1
        self._bump()
        return ChangeRecord("delete_edge", frozenset([u, v]), self._version,
                            {"u": u, "v": v, "weight": w})

    def set_label(self, v, label):
        self._check_node(v)
        if not (0 <= label < self.class_count):
            raise MutationError(f"label {label} outside [0, {self.class_count})")
        old = self._labels.get(v)
        self._labels[v] = int(label)
        self._bump()
        return ChangeRecord("set_label", frozenset([v]), self._version,
                            {"node": v, "label": int(label), "old": old})

    def clear_label(self, v):
        self._check_node(v)
        if v not in self._labels:
            raise MutationError(f"node {v} has no label to clear")
        old = self._labels.pop(v)
        self._bump()
        return ChangeRecord("clear_label", frozenset([v]), self._version,
                            {"node": v, "old": old})

    def set_feature(self, v, row):
        self._check_node(v)
        row = np.asarray(row, dtype=float)
        if row.shape != (self._X.shape[1],):
            raise MutationError(
                f"feature row must have length {self._X.shape[1]}, got {row.shape}")
        old = self._X[v].copy()
        self._X[v] = row
        self._bump()
        return ChangeRecord("set_feature", frozenset([v]), self._version,
                            {"node": v, "old": old})

    # ------------------------------------------------------------------ misc

    def copy(self):
        g = AttributedGraph(0)
        g._adj = [dict(d) for d in self._adj]
        g._alive = list(self._alive)
        g._n_alive = self._n_alive
        g._m = self._m
        g._X = self._X.copy()
        g._labels = dict(self._labels)
        g.class_count = self.class_count
        g._version = self._version
        return g

    def compact(self):
        """Return (dense-id copy, old->new id map). Lazy counterpart of node deletion."""
        live = self.nodes()
        remap = {old: new for new, old in enumerate(live)}
        g = AttributedGraph(
            len(live),
            features=self._X[live] if self.feature_dim else None,
            labels={remap[v]: c for v, c in self._labels.items()},
            class_count=self.class_count,
        )
        if not self.feature_dim:
            g._X = np.zeros((len(live), 0))
        for u, v, w in self.edges():
            g.add_edge(remap[u], remap[v], w)
        g._version = 0
        return g, remap

    def __eq__(self, other):
        if not isinstance(other, AttributedGraph):
            return NotImplemented
        if self.nodes() != other.nodes() or self.class_count != other.class_count:
            return False
        if self._labels != other._labels:
            return False
        live = self.nodes()
        if self.feature_dim != other.feature_dim:
            return False
        if live and self.feature_dim and not np.array_equal(self._X[live], other._X[live]):
            return False
        for v in live:
            if self._adj[v] != other._adj[v]:
                return False
        return True

    def __repr__(self):
        return (f"AttributedGraph(n={self.node_count}, m={self.edge_count}, "
                f"d={self.feature_dim}, k={self.class_count}, "
                f"labeled={len(self._labels)})")

    def _check_node(self, v):
        if not isinstance(v, (int, np.integer)) or not (0 <= v < len(self._adj)) \
                or not self._alive[v]:
            raise InvalidNodeError(f"node {v} does not exist")

    def _bump(self):
        self._version += 1
        self._csr_cache = None


def neighborhood(g, v, h):
    """Module-level alias for :meth:`AttributedGraph.neighborhood`."""
    return g.neighborhood(v, h)


@dataclass(frozen=True)
class NodePartition:
    """Split of the node set into labeled evidence and unlabeled targets.

    ``labels`` is the label map actually visible to a learner; evaluation
    harnesses build partitions with some known labels masked out, so this may
    deliberately be a subset of the graph's own labels.
    """

    labels: dict
    labeled: tuple
    unlabeled: tuple

    @classmethod
    def from_graph(cls, g, labels=None):
        labels = dict(g.labels if labels is None else labels)
        nodes = g.nodes()
        labeled = tuple(sorted(v for v in labels if g.is_active(v)))
        labels = {v: labels[v] for v in labeled}
        unlabeled = tuple(v for v in nodes if v not in labels)
        return cls(labels=labels, labeled=labeled, unlabeled=unlabeled)

    def validate(self, g):
        if set(self.labeled) & set(self.unlabeled):
            raise GraphError("labeled and unlabeled sets overlap")
        if set(self.labeled) | set(self.unlabeled) != set(g.nodes()):
            raise GraphError("partition does not cover the node set")
        for v, c in self.labels.items():
            if not (0 <= c < g.class_count):
                raise GraphError(f"label {c} for node {v} outside [0, {g.class_count})")

    def mask(self, hidden):
        """New partition with ``hidden`` nodes moved to the unlabeled side."""
        hidden = set(hidden)
        labels = {v: c for v, c in self.labels.items() if v not in hidden}
        labeled = tuple(v for v in self.labeled if v not in hidden)
        unlabeled = tuple(sorted(set(self.unlabeled) | (hidden & set(self.labeled))))
        return NodePartition(labels=labels, labeled=labeled, unlabeled=unlabeled)
