"""Structure-only baseline: relaxation labeling by weighted neighbor votes.

Ignores attributes entirely. Each unlabeled node repeatedly takes the
edge-weighted average of its direct neighbors' class rows; labeled rows are
clamped one-hot. Useful as the floor any attribute-aware method must beat,
and as the second opinion surfaced in the interactive UI.
"""

from __future__ import annotations

import numpy as np

from .engine import DegenerateTaskError, PredictionSet, certainty, normalize_weights
from .graph import NodePartition


def weighted_vote(g, partition=None, damping=0.0, tol=1e-4, max_iter=100):
    """Propagate labels through direct neighborhoods until rows stop moving.

    damping blends in the previous row (0 = pure neighbor average). Isolated
    unlabeled nodes keep the global label histogram. Returns a PredictionSet.
    """
    if not 0.0 <= damping < 1.0:
        raise ValueError(f"damping must lie in [0, 1), got {damping}")
    partition = NodePartition.from_graph(g) if partition is None else partition
    partition.validate(g)
    k = g.class_count
    if k is None or k < 2:
        raise DegenerateTaskError("need at least two classes")

    if not g.is_compact:
        dense, remap = g.compact()
        inverse = {n: o for o, n in remap.items()}
        part = NodePartition(
            labels={remap[v]: c for v, c in partition.labels.items()},
            labeled=tuple(sorted(remap[v] for v in partition.labeled)),
            unlabeled=tuple(sorted(remap[v] for v in partition.unlabeled)),
        )
        res = weighted_vote(dense, part, damping, tol, max_iter)
        est = np.zeros((g.slot_count, k))
        est[sorted(remap)] = res.estimates
        return PredictionSet(
            {inverse[v]: c for v, c in res.assignments.items()}, est,
            {inverse[v]: c for v, c in res.certainty.items()},
            res.iterations, k)

    n = g.node_count
    labels = partition.labels
    counts = np.zeros(k)
    for c in labels.values():
        counts[c] += 1.0
    prior = counts / counts.sum() if counts.sum() > 0 else np.full(k, 1.0 / k)

    P = np.tile(prior, (n, 1))
    for v, c in labels.items():
        P[v] = 0.0
        P[v, c] = 1.0
    unlabeled = [v for v in range(n) if v not in labels]
    if not unlabeled:
        return PredictionSet({}, P, {}, 0, k)

    A = g.adjacency_csr()
    free = np.array(unlabeled, dtype=int)
    has_nbrs = np.asarray(A.sum(axis=1)).ravel()[free] > 0
    iters = 0
    for _ in range(max_iter):
        iters += 1
        votes = A[free] @ P
        nxt = P.copy()
        upd = normalize_weights(votes[has_nbrs])
        rows = free[has_nbrs]
        nxt[rows] = damping * P[rows] + (1.0 - damping) * upd
        diff = float(np.abs(nxt[free] - P[free]).sum(axis=1).max()) if len(free) else 0.0
        P = nxt
        if diff < tol:
            break

    assignments = {int(v): int(P[v].argmax()) for v in unlabeled}
    cert = {int(v): float(certainty(P[v])[0]) for v in unlabeled}
    return PredictionSet(assignments, P, cert, iters, k)
