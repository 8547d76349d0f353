"""Synthetic graph generators with known ground truth.

Both generators return a fully labeled graph; experiments decide which labels
to reveal through NodePartition masks.
"""

from __future__ import annotations

import numpy as np

from .graph import AttributedGraph


def planted_blocks(n=100, k=2, ratio=5.0, mean_degree=8.0, feature_sep=1.0,
                   feature_sigma=0.5, d=2, seed=0):
    """Equal-size blocks where in-block edges are ``ratio`` times likelier
    than cross-block ones, the expected degree is held fixed, and each block
    has a Gaussian attribute cloud.

    ratio == 1 is pure noise structurally; large ratios give near-perfect
    homophily. Block c's feature center sits at ``feature_sep`` times unit
    direction c (axis c mod d), so attributes carry signal on their own.
    """
    if n % k:
        raise ValueError(f"n={n} must divide into {k} equal blocks")
    rng = np.random.default_rng(seed)
    size = n // k
    block = np.repeat(np.arange(k), size)

    # solve p_out from the degree budget: deg = p_in (size-1) + p_out (n-size)
    p_out = mean_degree / (ratio * (size - 1) + (n - size))
    p_in = min(1.0, ratio * p_out)
    p_out = min(1.0, p_out)

    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            p = p_in if block[i] == block[j] else p_out
            if rng.random() < p:
                edges.append((i, j))

    centers = np.zeros((k, d))
    for c in range(k):
        centers[c, c % d] = feature_sep * (1.0 if (c // d) % 2 == 0 else -1.0)
    X = centers[block] + rng.normal(0.0, feature_sigma, size=(n, d))

    labels = {int(v): int(block[v]) for v in range(n)}
    return AttributedGraph(n, edges=edges, features=X, labels=labels, class_count=k)


def citation_like(n=60, k=3, attach=2, feature_dim=6, flip=0.1, mix=1.0,
                  seed=0):
    """Preferential-attachment graph with class-correlated sparse attributes.

    Each newcomer copies the class of a degree-weighted anchor with
    probability 1 - flip, then cites ``attach`` earlier nodes (the anchor
    plus more degree-weighted picks). Two knobs make the structure itself
    class-informative, the way citation habits differ between fields:
    ``attach`` may be a per-class sequence (citation volume), and extra
    picks are drawn from the newcomer's own class with probability
    1 - ``mix`` (field-internal citations), so degree, motif, and density
    profiles separate the classes. Defaults keep both effects off.
    Attributes are noisy indicator bundles: class c lights up coordinates
    {c, c+k, ...}.
    """
    per_class = list(attach) if hasattr(attach, "__len__") else [attach] * k
    if len(per_class) != k or min(per_class) < 1:
        raise ValueError(f"attach needs a positive count per class, got {attach!r}")
    if not 0.0 < mix <= 1.0:
        raise ValueError(f"mix must lie in (0, 1], got {mix}")
    rng = np.random.default_rng(seed)
    m0 = max(per_class) + 1
    classes = [int(rng.integers(k)) for _ in range(m0)]
    edges = []
    targets = list(range(m0))  # degree-weighted sampling pool
    by_class = [[v for v in range(m0) if classes[v] == c] for c in range(k)]
    for i in range(m0):
        for j in range(i + 1, m0):
            edges.append((i, j))
            targets += [i, j]
            by_class[classes[i]].append(i)
            by_class[classes[j]].append(j)

    for v in range(m0, n):
        anchor = targets[rng.integers(len(targets))]
        c = classes[anchor] if rng.random() > flip else int(rng.integers(k))
        classes.append(c)
        picked = {anchor}
        while len(picked) < per_class[c]:
            pool = targets
            if mix < 1.0 and by_class[c] and rng.random() >= mix:
                pool = by_class[c]
            picked.add(pool[rng.integers(len(pool))])
        for u in sorted(picked):
            edges.append((u, v))
            targets += [u, v]
            by_class[classes[u]].append(u)
            by_class[c].append(v)
        targets.append(v)

    X = rng.normal(0.0, 0.35, size=(n, feature_dim))
    for v, c in enumerate(classes):
        X[v, c % feature_dim] += 1.0
        if feature_dim > k:
            X[v, (c + k) % feature_dim] += 0.5

    labels = {v: c for v, c in enumerate(classes)}
    return AttributedGraph(n, edges=edges, features=X, labels=labels, class_count=k)
