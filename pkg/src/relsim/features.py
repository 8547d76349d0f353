"""Per-node feature construction.

Topology features are small-motif counts plus classic centrality/coreness
measures; relational features aggregate class estimates and attributes over
the h-hop neighborhood; meta features expose the learner's own running state
(estimates, weight accumulators, certainty) as extra columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


FAMILIES = ("raw", "topology", "relational-class", "relational-attr", "meta")
NORM_SCHEMES = ("none", "minmax", "l1-row")

TOPOLOGY_COLUMNS = (
    "degree",
    "triangles",
    "clustering",
    "kcore",
    "pagerank",
    "star3",
    "clique4",
    "cycle4",
)


class FeatureError(ValueError):
    """Feature matrix shape or alignment problem."""


@dataclass(frozen=True)
class Column:
    name: str
    family: str

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise FeatureError(f"unknown column family {self.family!r}")


class FeatureMatrix:
    """A dense n x d matrix with column descriptors and a normalization state.

    Instances are immutable in practice: ``append`` and ``normalized`` return
    new matrices, re-applying the current normalization scheme so the stated
    column invariants keep holding after every append.
    """

    def __init__(self, values, columns, norm="none"):
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != 2:
            raise FeatureError(f"expected 2-d values, got shape {self.values.shape}")
        self.columns = tuple(columns)
        if len(self.columns) != self.values.shape[1]:
            raise FeatureError(
                f"{len(self.columns)} column descriptors for width {self.values.shape[1]}")
        if norm not in NORM_SCHEMES:
            raise FeatureError(f"unknown normalization scheme {norm!r}")
        self.norm = norm

    @property
    def row_count(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    def names(self):
        return [c.name for c in self.columns]

    def family_mask(self, family):
        return np.array([c.family == family for c in self.columns], dtype=bool)

    def normalized(self, scheme=None):
        """Apply a normalization scheme (idempotent); default re-applies the current one."""
        scheme = self.norm if scheme is None else scheme
        if scheme not in NORM_SCHEMES:
            raise FeatureError(f"unknown normalization scheme {scheme!r}")
        return FeatureMatrix(apply_norm(self.values, scheme), self.columns, scheme)

    def append(self, values, columns):
        """Concatenate extra columns, then re-apply this matrix's normalization."""
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != self.row_count:
            raise FeatureError(
                f"appended block must have {self.row_count} rows, got shape {values.shape}")
        if values.shape[1] != len(tuple(columns)):
            raise FeatureError("appended block width does not match its descriptors")
        merged = FeatureMatrix(
            np.hstack([self.values, values]),
            self.columns + tuple(columns),
            "none",
        )
        return merged.normalized(self.norm)


def apply_norm(values, scheme):
    if scheme == "none":
        return np.array(values, dtype=float)
    values = np.asarray(values, dtype=float)
    if scheme == "minmax":
        if values.shape[1] == 0:
            return values.copy()
        lo = values.min(axis=0)
        hi = values.max(axis=0)
        span = hi - lo
        out = np.zeros_like(values)
        nz = span > 0
        out[:, nz] = (values[:, nz] - lo[nz]) / span[nz]
        return out  # constant columns map to 0
    if scheme == "l1-row":
        sums = values.sum(axis=1)
        out = values.copy()
        nz = sums > 0
        out[nz] = values[nz] / sums[nz, None]
        return out
    raise FeatureError(f"unknown normalization scheme {scheme!r}")


# ------------------------------------------------------------------ topology


def topology_features(g):
    """Structural columns for every node: degree, triangle count, local
    clustering, k-core number, PageRank, and counts of 3-stars, 4-cliques and
    4-cycles through the node.

    The graph must have dense ids (``g.is_compact``); tombstoned graphs should
    be compacted first.
    """
    if not g.is_compact:
        raise FeatureError("topology features require a compact graph")
    n = g.node_count
    cols = [Column(name, "topology") for name in TOPOLOGY_COLUMNS]
    if n == 0:
        return FeatureMatrix(np.zeros((0, len(cols))), cols)
    adj = [set(g.neighbors(v)) for v in range(n)]
    deg = np.array([len(a) for a in adj], dtype=float)

    tri = _triangle_counts(adj)
    clust = np.zeros(n)
    can = deg * (deg - 1) / 2.0
    nz = can > 0
    clust[nz] = tri[nz] / can[nz]

    star3 = np.array([_comb3(len(a)) for a in adj], dtype=float)
    clique4, cycle4 = _four_node_counts(adj)

    vals = np.column_stack([
        deg, tri, clust,
        core_numbers(g).astype(float),
        pagerank(g),
        star3, clique4, cycle4,
    ])
    return FeatureMatrix(vals, cols)


def _comb3(d):
    return d * (d - 1) * (d - 2) // 6


def _triangle_counts(adj):
    n = len(adj)
    tri = np.zeros(n)
    for v in range(n):
        s = adj[v]
        # edges among v's neighbors, each counted twice below
        t = sum(len(s & adj[u]) for u in s)
        tri[v] = t // 2
    return tri


def _four_node_counts(adj):
    n = len(adj)
    clique4 = np.zeros(n)
    cycle4 = np.zeros(n)
    # 4-cliques: extend each triangle u<v<w by a common neighbor x>w
    for u in range(n):
        nu = sorted(v for v in adj[u] if v > u)
        for i, v in enumerate(nu):
            common_uv = adj[u] & adj[v]
            for w in nu[i + 1:]:
                if w not in adj[v]:
                    continue
                for x in common_uv & adj[w]:
                    if x > w:
                        clique4[u] += 1
                        clique4[v] += 1
                        clique4[w] += 1
                        clique4[x] += 1
    # 4-cycles through v: pairs a<b of v's neighbors with a common neighbor x != v
    for v in range(n):
        nb = sorted(adj[v])
        for i, a in enumerate(nb):
            for b in nb[i + 1:]:
                cycle4[v] += len((adj[a] & adj[b]) - {v})
    return clique4, cycle4


def core_numbers(g):
    """k-core number per node via peeling."""
    n = g.node_count
    deg = {v: g.degree(v) for v in range(n)}
    core = np.zeros(n, dtype=int)
    remaining = set(range(n))
    adj = [set(g.neighbors(v)) for v in range(n)]
    k = 0
    while remaining:
        k_min = min(deg[v] for v in remaining)
        k = max(k, k_min)
        queue = [v for v in remaining if deg[v] <= k]
        while queue:
            v = queue.pop()
            if v not in remaining:
                continue
            core[v] = k
            remaining.discard(v)
            for u in adj[v]:
                if u in remaining:
                    deg[u] -= 1
                    if deg[u] <= k:
                        queue.append(u)
    return core


def pagerank(g, damping=0.85, tol=1e-9, max_iter=1000):
    """Power-iteration PageRank; the returned vector is L1-normalized."""
    n = g.node_count
    if n == 0:
        return np.zeros(0)
    A = g.adjacency_csr()
    # column-stochastic transition: follow edges with probability prop. to weight
    out = np.asarray(A.sum(axis=1)).ravel()
    dangling = out == 0
    inv_out = np.zeros(n)
    inv_out[~dangling] = 1.0 / out[~dangling]
    p = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        spread = A.T @ (p * inv_out)
        spread += p[dangling].sum() / n
        new = (1.0 - damping) / n + damping * spread
        if np.abs(new - p).sum() < tol:
            p = new
            break
        p = new
    return p / p.sum()


# ---------------------------------------------------------------- relational


def relational_class_features(g, P, h, labels=None, aggregation="mean"):
    """Class-estimate aggregates over each node's h-ball.

    For every node: the aggregate over neighbors of their class row (one-hot
    truth for labeled neighbors, current estimate row otherwise), plus raw
    per-class counts of labeled neighbors. Nodes with empty neighborhoods get
    zero rows.
    """
    P = np.asarray(P, dtype=float)
    n = g.node_count
    if P.shape[0] != n:
        raise FeatureError(f"estimate matrix has {P.shape[0]} rows for {n} nodes")
    k = P.shape[1]
    labels = g.labels if labels is None else labels
    rows = np.array(P, dtype=float)
    for v, c in labels.items():
        rows[v] = 0.0
        rows[v, c] = 1.0
    mean_block = np.zeros((n, k))
    count_block = np.zeros((n, k))
    for v in range(n):
        nb = sorted(g.neighborhood(v, h))
        if nb:
            mean_block[v] = _aggregate(rows[nb], aggregation)
            for u in nb:
                c = labels.get(u)
                if c is not None:
                    count_block[v, c] += 1
    cols = [Column(f"nbr_class_{aggregation}_{c}", "relational-class") for c in range(k)]
    cols += [Column(f"nbr_label_count_{c}", "relational-class") for c in range(k)]
    return np.hstack([mean_block, count_block]), tuple(cols)


def relational_attr_features(g, h, base=None, names=None, aggregation="mean"):
    """Attribute aggregates over each node's h-ball.

    ``base`` defaults to the graph's own feature rows; the learner passes its
    current raw+topology block instead so graph-only runs still get
    informative columns.
    """
    base = g.features if base is None else np.asarray(base, dtype=float)
    n = g.node_count
    if base.shape[0] != n:
        raise FeatureError(f"attribute block has {base.shape[0]} rows for {n} nodes")
    out = np.zeros_like(base, dtype=float)
    for v in range(n):
        nb = sorted(g.neighborhood(v, h))
        if nb:
            out[v] = _aggregate(base[nb], aggregation)
    if names is None:
        names = [f"f{j}" for j in range(base.shape[1])]
    cols = tuple(Column(f"nbr_attr_{aggregation}_{name}", "relational-attr") for name in names)
    return out, cols


def _aggregate(rows, how):
    if how == "mean":
        return rows.mean(axis=0)
    if how == "sum":
        return rows.sum(axis=0)
    if how == "max":
        return rows.max(axis=0)
    raise FeatureError(f"unknown aggregation {how!r}")


META_BLOCKS = ("estimates", "neighbor_weights", "nonneighbor_weights", "certainty")


def append_meta_features(F, which, estimates=None, neighbor_weights=None,
                         nonneighbor_weights=None, certainty=None):
    """Append the learner's own state as extra columns; no-op for empty ``which``.

    Each selected block must be row-aligned with F.
    """
    which = tuple(which)
    blocks = {
        "estimates": estimates,
        "neighbor_weights": neighbor_weights,
        "nonneighbor_weights": nonneighbor_weights,
        "certainty": certainty,
    }
    unknown = [w for w in which if w not in blocks]
    if unknown:
        raise FeatureError(f"unknown meta blocks {unknown}")
    out = F
    for name in which:
        block = blocks[name]
        if block is None:
            raise FeatureError(f"meta block {name!r} requested but not supplied")
        block = np.asarray(block, dtype=float)
        if block.ndim == 1:
            block = block[:, None]
        if block.shape[0] != F.row_count:
            raise FeatureError(
                f"meta block {name!r} has {block.shape[0]} rows, expected {F.row_count}")
        cols = [Column(f"meta_{name}_{j}", "meta") for j in range(block.shape[1])]
        out = out.append(block, cols)
    return out
