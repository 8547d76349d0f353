"""Collective inference over attributed graphs via similarity voting.

The learner keeps one probability row per node. Labeled rows are one-hot and
never move. Unlabeled rows start from estimated class priors and are refined
in passes: each pass accumulates similarity-weighted votes from inside the
node's h-hop neighborhood and, separately, from the rest of the graph, blends
the two with the node's previous row, and re-projects onto the simplex. After
every pass the most certain unassigned rows are frozen to hard labels; the
loop stops when the largest row change falls below a threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .features import (
    Column,
    FeatureMatrix,
    META_BLOCKS,
    NORM_SCHEMES,
    append_meta_features,
    apply_norm,
    relational_attr_features,
    relational_class_features,
    topology_features,
)
from .graph import NodePartition
from .kernels import KernelSpec, MissingClassError, class_centroids, pairwise


AGGREGATIONS = ("mean", "sum", "max")


class DegenerateTaskError(ValueError):
    """The task has fewer than two classes, so there is nothing to infer."""


@dataclass(frozen=True)
class Hyperparams:
    """Knobs for one inference run.

    alpha weighs neighborhood votes against rest-of-graph votes, omega is the
    inertia on the previous estimate, hop is the neighborhood radius. The
    remaining fields control the pass budget, the similarity kernel, whether
    unlabeled nodes vote, per-pass assignment volume, the convergence
    threshold, prior smoothing, and feature construction.
    """

    alpha: float = 0.7
    omega: float = 0.5
    hop: int = 1
    tau_max: int = 10
    kernel: KernelSpec = field(default_factory=KernelSpec)
    ssl_enabled: bool = True
    topk_fraction: float = 0.1
    epsilon: float = 1e-4
    prior_iters: int = 5
    mesh: float = 0.5
    meta_features: tuple = ()
    use_edge_weights: bool = False
    normalization: str = "minmax"
    aggregation: str = "mean"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.omega < 0.0:
            raise ValueError(f"omega must be nonnegative, got {self.omega}")
        if int(self.hop) != self.hop or self.hop < 1:
            raise ValueError(f"hop must be a positive integer, got {self.hop}")
        # tau_max = 0 is allowed: no passes run, predictions come from priors
        if int(self.tau_max) != self.tau_max or self.tau_max < 0:
            raise ValueError(f"tau_max must be a nonnegative integer, got {self.tau_max}")
        if not 0.0 < self.topk_fraction <= 1.0:
            raise ValueError(f"topk_fraction must lie in (0, 1], got {self.topk_fraction}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if int(self.prior_iters) != self.prior_iters or self.prior_iters < 0:
            raise ValueError(f"prior_iters must be a nonnegative integer, got {self.prior_iters}")
        if not 0.0 <= self.mesh <= 1.0:
            raise ValueError(f"mesh must lie in [0, 1], got {self.mesh}")
        if self.normalization not in NORM_SCHEMES:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        bad = [m for m in self.meta_features if m not in META_BLOCKS]
        if bad:
            raise ValueError(f"unknown meta features {bad}")

    def replace(self, **kwargs):
        from dataclasses import replace as _replace
        return _replace(self, **kwargs)


@dataclass
class PredictionSet:
    """Outcome of one inference run.

    ``estimates`` has one row per graph slot (dead slots are zero rows);
    ``assignments`` and ``certainty`` cover the unlabeled nodes only.
    ``frozen`` holds the nodes hard-assigned by per-pass confident selection.
    """

    assignments: dict
    estimates: np.ndarray
    certainty: dict
    iterations: int
    classes: int
    frozen: frozenset = frozenset()

    def accuracy(self, truth):
        """Fraction of assignments matching ``truth`` (a node -> class map)."""
        hits = [v for v, c in self.assignments.items() if truth.get(v) == c]
        return len(hits) / len(self.assignments) if self.assignments else float("nan")


# ----------------------------------------------------------- small utilities


def one_hot(labels, class_count, node_ids=None, n=None):
    """Rows of one-hot class indicators; unlabeled rows stay zero."""
    n = (max(labels) + 1 if labels else 0) if n is None else n
    out = np.zeros((n, class_count))
    items = labels.items() if node_ids is None else ((v, labels[v]) for v in node_ids)
    for v, c in items:
        out[v, c] = 1.0
    return out


def normalize_weights(W):
    """Clip negatives, then scale each row to sum one; empty rows go uniform."""
    W = np.clip(np.atleast_2d(np.asarray(W, dtype=float)), 0.0, None)
    k = W.shape[-1]
    sums = W.sum(axis=-1)
    out = np.full_like(W, 1.0 / k)
    pos = sums > 0
    out[pos] = W[pos] / sums[pos, None]
    return out


def update_estimate(w_nbr, w_rest, prev, alpha, omega):
    """Blend the two vote vectors with the previous row and re-project.

    new = alpha * w_nbr + (1 - alpha) * w_rest + omega * prev, clipped at
    zero and rescaled to the simplex (uniform if everything cancels).
    """
    w_nbr = np.atleast_2d(np.asarray(w_nbr, dtype=float))
    w_rest = np.atleast_2d(np.asarray(w_rest, dtype=float))
    prev = np.atleast_2d(np.asarray(prev, dtype=float))
    mixed = alpha * w_nbr + (1.0 - alpha) * w_rest + omega * prev
    return normalize_weights(mixed)


def certainty(P):
    """1 - normalized entropy per row: 1 for one-hot rows, 0 for uniform."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    k = P.shape[-1]
    if k < 2:
        return np.ones(P.shape[0])
    Q = np.clip(P, 0.0, None)
    logs = np.zeros_like(Q)
    pos = Q > 0
    logs[pos] = np.log(Q[pos])
    H = -(Q * logs).sum(axis=-1)
    return 1.0 - H / math.log(k)


def assign_topk(P, candidates, fraction):
    """Pick the rows to freeze this pass: the ceil(fraction * |candidates|)
    most certain, ties broken toward the lower node id."""
    candidates = list(candidates)
    if not candidates:
        return ()
    count = math.ceil(fraction * len(candidates))
    cert = certainty(P[candidates])
    order = sorted(range(len(candidates)), key=lambda i: (-cert[i], candidates[i]))
    return tuple(candidates[i] for i in order[:count])


def accumulate_supervised(w, p_row, sim, cls):
    """One labeled vote: add the node's own belief in ``cls`` times the similarity."""
    w[cls] += p_row[cls] * sim


def accumulate_ssl(w, p_row, other_row, sim):
    """One unlabeled vote: elementwise product of both belief rows times the similarity."""
    w += p_row * other_row * sim


# ------------------------------------------------------------ iid classifier


def classify_iid(spec, X, y, Z, class_count, mode="full"):
    """Similarity voting that ignores graph structure.

    ``full`` accumulates similarity to every labeled example per class;
    ``centroid`` compares against per-class mean vectors instead. Returns
    (predictions, raw weight matrix); argmax ties go to the lower class index.
    """
    X = np.asarray(X, dtype=float)
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    y = np.asarray(y, dtype=int)
    if mode == "full":
        hot = np.zeros((len(y), class_count))
        hot[np.arange(len(y)), y] = 1.0
        W = pairwise(spec, Z, X) @ hot
    elif mode == "centroid":
        W = pairwise(spec, Z, class_centroids(X, y, class_count))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return W.argmax(axis=1), W


# ------------------------------------------------------------------- priors


def estimate_priors(g, partition, hp):
    """Initial class-probability rows for every node.

    Three stages: global label frequencies for all unlabeled rows, an iid
    similarity vote over the raw attributes where it produces positive
    weight, then ``prior_iters`` rounds of neighborhood smoothing with blend
    factor ``mesh``. Labeled rows are exact one-hot throughout.
    """
    k = g.class_count
    n = g.node_count
    labels = partition.labels
    counts = np.zeros(k)
    for c in labels.values():
        counts[c] += 1.0
    base = counts / counts.sum() if counts.sum() > 0 else np.full(k, 1.0 / k)

    P = np.tile(base, (n, 1))
    for v, c in labels.items():
        P[v] = 0.0
        P[v, c] = 1.0

    unlabeled = list(partition.unlabeled)
    if g.feature_dim > 0 and labels and unlabeled:
        X = apply_norm(g.features, hp.normalization)
        labeled = list(partition.labeled)
        y = np.array([labels[v] for v in labeled], dtype=int)
        _, W = classify_iid(hp.kernel, X[labeled], y, X[unlabeled], k)
        W = np.clip(W, 0.0, None)
        sums = W.sum(axis=1)
        for i, v in enumerate(unlabeled):
            if sums[i] > 0:
                P[v] = W[i] / sums[i]

    lam = hp.mesh
    for _ in range(hp.prior_iters):
        nxt = P.copy()
        for v in unlabeled:
            nb = sorted(g.neighborhood(v, hp.hop))
            if not nb:
                continue
            row = (1.0 - lam) * P[v] + lam * P[nb].mean(axis=0)
            nxt[v] = normalize_weights(row)[0]
        P = nxt
    return P


# ---------------------------------------------------------------- main loop


def run(g, partition=None, hp=None, *, workers=1, seed_P=None, active=None,
        history=None):
    """Infer class rows for every unlabeled node of ``g``.

    partition: which labels are visible (defaults to all of the graph's).
    seed_P: slot-aligned starting rows; skips prior estimation when given.
    active: restrict inference to these unlabeled nodes, pinning the rest
        at their seed rows as fixed evidence (used for localized updates).
    history: a list to receive one record per pass, if provided.
    """
    hp = Hyperparams() if hp is None else hp
    partition = NodePartition.from_graph(g) if partition is None else partition
    partition.validate(g)
    k = g.class_count
    if k is None or k < 2:
        raise DegenerateTaskError("need at least two classes")

    if not g.is_compact:
        return _run_compacted(g, partition, hp, workers, seed_P, active, history)

    n = g.node_count
    labels = dict(partition.labels)
    unlabeled = sorted(partition.unlabeled)
    est = np.zeros((g.slot_count, k))
    for v, c in labels.items():
        est[v, c] = 1.0
    if not unlabeled:
        return PredictionSet({}, est, {}, 0, k)

    present = {c for c in labels.values()}
    missing = [c for c in range(k) if c not in present]
    if missing:
        raise MissingClassError(f"no labeled example for classes {missing}")

    if seed_P is None:
        P = estimate_priors(g, partition, hp)
    else:
        P = _check_seed(seed_P, g.slot_count, k)
        for v, c in labels.items():
            P[v] = 0.0
            P[v, c] = 1.0

    if active is None:
        active_ids = unlabeled
    else:
        active_ids = sorted(set(active))
        stray = [v for v in active_ids if v not in set(unlabeled)]
        if stray:
            raise ValueError(f"active nodes must be unlabeled, got {stray}")

    tau_used, frozen = _infer_rows(g, P, labels, active_ids, hp, workers, history)

    assignments = {}
    cert_map = {}
    for v in unlabeled:
        assignments[v] = int(P[v].argmax())
        cert_map[v] = float(certainty(P[v])[0])
    est = P
    return PredictionSet(assignments, est, cert_map, tau_used, k, frozen)


def _infer_rows(g, P, labels, active_ids, hp, workers, history):
    """Iterate the vote-blend-freeze loop in place on ``P``.

    Returns (pass count, set of nodes hard-assigned along the way).
    """
    if not active_ids or hp.tau_max == 0:
        return 0, frozenset()
    n = g.node_count
    k = P.shape[1]

    base = _static_features(g, hp)
    rela, rela_cols = relational_attr_features(
        g, hp.hop, base.values, base.names(), hp.aggregation)

    # h-hop membership per active row; 1-hop entries optionally carry edge weight
    pos = {v: i for i, v in enumerate(active_ids)}
    M = np.zeros((len(active_ids), n))
    for v in active_ids:
        for u in g.neighborhood(v, hp.hop):
            M[pos[v], u] = 1.0
        if hp.use_edge_weights:
            for u in g.neighbors(v):
                M[pos[v], u] = g.edge_weight(v, u)

    hot = one_hot(labels, k, n=n)
    labeled_mask = np.zeros(n, dtype=bool)
    for v in labels:
        labeled_mask[v] = True

    WR = np.zeros((n, k))
    WI = np.zeros((n, k))
    unassigned = list(active_ids)
    tau_used = 0
    all_frozen = set()

    for tau in range(1, hp.tau_max + 1):
        tau_used = tau
        Z = _design_matrix(g, base, rela, rela_cols, P, labels, hp, WR, WI)

        # contribution rows: one-hot for labeled, current estimate for
        # unlabeled when unlabeled nodes may vote, zero otherwise
        C = hot.copy()
        if hp.ssl_enabled:
            C[~labeled_mask] = P[~labeled_mask]

        rows = np.array(unassigned, dtype=int)
        mask_rows = M[[pos[v] for v in unassigned]]
        new_rows = np.zeros((len(rows), k))
        wr_rows = np.zeros((len(rows), k))
        wi_rows = np.zeros((len(rows), k))

        def score(chunk):
            lo, hi = chunk
            idx = rows[lo:hi]
            wr, wi, updated = _score_chunk(
                Z, C, P, idx, mask_rows[lo:hi], hp)
            wr_rows[lo:hi] = wr
            wi_rows[lo:hi] = wi
            new_rows[lo:hi] = updated

        chunks = _chunk_bounds(len(rows), workers)
        if len(chunks) == 1:
            score(chunks[0])
        else:
            with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
                list(pool.map(score, chunks))

        delta = float(np.abs(new_rows - P[rows]).sum(axis=1).max())
        P[rows] = new_rows
        WR[rows] = wr_rows
        WI[rows] = wi_rows

        frozen = assign_topk(P, unassigned, hp.topk_fraction)
        frozen_set = set(frozen)
        all_frozen |= frozen_set
        for v in frozen:
            c = int(P[v].argmax())
            P[v] = 0.0
            P[v, c] = 1.0
        unassigned = [v for v in unassigned if v not in frozen_set]

        if history is not None:
            history.append({
                "tau": tau,
                "delta": delta,
                "assigned": tuple(frozen),
                "remaining": len(unassigned),
                "estimates": P.copy(),
            })
        if delta < hp.epsilon or not unassigned:
            break
    return tau_used, frozenset(all_frozen)


def _score_chunk(Z, C, P, idx, mask, hp):
    """Vote accumulation for one block of test rows.

    Neighborhood votes use the (possibly weighted) membership mask; the rest
    of the graph contributes everything else except the node itself.
    """
    S = pairwise(hp.kernel, Z[idx], Z)
    nbr = (S * mask) @ C
    # complement mask instead of total-minus-neighbors: subtraction leaves
    # fp dust where the exact sum is zero, which normalization would amplify
    inv = (mask == 0).astype(float)
    inv[np.arange(len(idx)), idx] = 0.0
    rest = (S * inv) @ C

    w_nbr = normalize_weights(P[idx] * nbr)
    w_rest = normalize_weights(P[idx] * rest)
    return w_nbr, w_rest, update_estimate(w_nbr, w_rest, P[idx], hp.alpha, hp.omega)


def _chunk_bounds(total, workers):
    if total <= 0:
        return [(0, 0)]
    workers = max(1, min(int(workers), total))
    step = math.ceil(total / workers)
    return [(lo, min(lo + step, total)) for lo in range(0, total, step)]


def _static_features(g, hp):
    """Raw attributes plus structural columns, normalized once per run."""
    raw_cols = tuple(Column(f"raw_{j}", "raw") for j in range(g.feature_dim))
    raw = FeatureMatrix(g.features.reshape(g.node_count, -1), raw_cols)
    topo = topology_features(g)
    merged = FeatureMatrix(
        np.hstack([raw.values, topo.values]),
        raw.columns + topo.columns,
    )
    return merged.normalized(hp.normalization)


def _design_matrix(g, base, rela, rela_cols, P, labels, hp, WR, WI):
    """Assemble and normalize the per-pass feature matrix."""
    relc, relc_cols = relational_class_features(g, P, hp.hop, labels, hp.aggregation)
    F = FeatureMatrix(
        np.hstack([base.values, relc, rela]),
        base.columns + relc_cols + rela_cols,
    )
    if hp.meta_features:
        F = append_meta_features(
            F, hp.meta_features,
            estimates=P,
            neighbor_weights=WR,
            nonneighbor_weights=WI,
            certainty=certainty(P),
        )
    return F.normalized(hp.normalization).values


def _check_seed(seed_P, slots, k):
    P = np.array(seed_P, dtype=float)
    if P.shape != (slots, k):
        raise ValueError(f"seed rows must have shape {(slots, k)}, got {P.shape}")
    if not np.isfinite(P).all() or (P < -1e-9).any():
        raise ValueError("seed rows must be finite and nonnegative")
    # localized runs pin non-active rows at their seed values, and those
    # must come through bit for bit; rescale only rows that need it
    off = (P < 0.0).any(axis=1) | (np.abs(P.sum(axis=1) - 1.0) > 1e-12)
    if off.any():
        P[off] = normalize_weights(P[off])
    return P


def _run_compacted(g, partition, hp, workers, seed_P, active, history):
    """Tombstoned graphs are compacted, solved densely, and mapped back."""
    dense, remap = g.compact()
    inverse = {new: old for old, new in remap.items()}
    part = NodePartition(
        labels={remap[v]: c for v, c in partition.labels.items()},
        labeled=tuple(sorted(remap[v] for v in partition.labeled)),
        unlabeled=tuple(sorted(remap[v] for v in partition.unlabeled)),
    )
    live = sorted(remap)
    seed = None if seed_P is None else np.asarray(seed_P, dtype=float)[live]
    act = None if active is None else [remap[v] for v in active]
    inner_history = None if history is None else []
    result = run(dense, part, hp, workers=workers, seed_P=seed,
                 active=act, history=inner_history)
    if history is not None:
        for rec in inner_history:
            rec = dict(rec)
            rec["assigned"] = tuple(inverse[v] for v in rec["assigned"])
            snap = np.zeros((g.slot_count, result.classes))
            snap[live] = rec["estimates"]
            rec["estimates"] = snap
            history.append(rec)
    est = np.zeros((g.slot_count, result.classes))
    est[live] = result.estimates
    return PredictionSet(
        {inverse[v]: c for v, c in result.assignments.items()},
        est,
        {inverse[v]: c for v, c in result.certainty.items()},
        result.iterations,
        result.classes,
        frozenset(inverse[v] for v in result.frozen),
    )
