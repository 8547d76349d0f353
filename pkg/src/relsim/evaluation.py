"""Evaluation drivers: stratified within-network cross-validation, nested
hyperparameter search, and label-sparsity experiments.

Evaluation never mutates the graph. Hiding labels is done through
NodePartition masks, so the learner physically cannot see a held-out label.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass, field, replace

from .baselines import weighted_vote
from .engine import Hyperparams, run
from .graph import NodePartition
from .kernels import KernelSpec

METHODS = ("similarity", "neighbor-vote")


@dataclass(frozen=True)
class EvalConfig:
    folds: int = 5
    trials: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if self.trials < 1:
            raise ValueError("need at least 1 trial")


@dataclass
class CVReport:
    method: str
    accuracies: list = field(default_factory=list)  # [trial][fold]
    hyperparams: object = None

    def mean(self):
        flat = [a for trial in self.accuracies for a in trial]
        return sum(flat) / len(flat) if flat else float("nan")

    def std(self):
        flat = [a for trial in self.accuracies for a in trial]
        if len(flat) < 2:
            return 0.0
        m = sum(flat) / len(flat)
        return math.sqrt(sum((a - m) ** 2 for a in flat) / (len(flat) - 1))

    def trial_means(self):
        return [sum(t) / len(t) for t in self.accuracies if t]

    def summary(self):
        return (f"{self.method}: accuracy {100 * self.mean():.2f}% "
                f"(+/- {100 * self.std():.2f}, {len(self.accuracies)} trials)")

    def to_json(self):
        return json.dumps({
            "method": self.method,
            "mean_accuracy": self.mean(),
            "std_accuracy": self.std(),
            "trials": self.accuracies,
        }, indent=2)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["trial", "fold", "accuracy"])
        for t, folds in enumerate(self.accuracies):
            for f, a in enumerate(folds):
                w.writerow([t, f, f"{a:.6f}"])
        return buf.getvalue()


def stratified_folds(labels, folds, rng):
    """Deal nodes into folds class by class, continuing the round-robin
    across classes so fold sizes differ by at most one overall."""
    out = [[] for _ in range(folds)]
    cursor = 0
    for c in sorted(set(labels.values())):
        group = sorted(v for v, y in labels.items() if y == c)
        rng.shuffle(group)
        for v in group:
            out[cursor % folds].append(v)
            cursor += 1
    return [sorted(f) for f in out]


def predict_masked(g, partition, hidden, method="similarity", hp=None, workers=1):
    """Predictions for ``hidden`` nodes with their labels masked out.

    The single choke point through which every evaluation path hides labels;
    returns {node: predicted class}.
    """
    masked = partition.mask(hidden)
    if method == "similarity":
        res = run(g, masked, hp or Hyperparams(), workers=workers)
    elif method == "neighbor-vote":
        res = weighted_vote(g, masked)
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return {v: res.assignments[v] for v in hidden}


def cross_validate(g, method="similarity", hp=None, config=None, grid=None,
                   workers=1, partition=None):
    """Repeated stratified k-fold evaluation over the graph's known labels.

    With ``grid``, hyperparameters are re-chosen inside every fold via an
    inner split of the training labels only (nested search, no peeking).
    """
    config = config or EvalConfig()
    partition = partition or NodePartition.from_graph(g)
    if not partition.labels:
        raise ValueError("cross-validation needs labeled nodes")
    report = CVReport(method=method, hyperparams=hp)
    for trial in range(config.trials):
        rng = random.Random(config.seed * 100_003 + trial)
        folds = stratified_folds(partition.labels, config.folds, rng)
        row = []
        for fold in folds:
            if not fold:
                continue
            fold_hp = hp
            if grid is not None and method == "similarity":
                train_part = partition.mask(fold)
                visible = NodePartition.from_graph(g, labels=train_part.labels)
                fold_hp, _ = grid_search(g, visible, grid, rng=rng, workers=workers)
            preds = predict_masked(g, partition, fold, method, fold_hp, workers)
            hits = sum(preds[v] == partition.labels[v] for v in fold)
            row.append(hits / len(fold))
        report.accuracies.append(row)
    return report


def grid_search(g, partition, grid, inner_folds=3, rng=None, workers=1):
    """Pick the candidate with the best mean accuracy on an inner split of
    the visible labels. Ties keep the earliest candidate. Returns
    (best_hyperparams, [(hp, score), ...])."""
    rng = rng or random.Random(0)
    candidates = list(grid)
    if not candidates:
        raise ValueError("empty hyperparameter grid")
    labels = partition.labels
    folds = stratified_folds(labels, min(inner_folds, max(2, len(labels) // 2)), rng)
    folds = [f for f in folds if f]
    scores = []
    for hp in candidates:
        accs = []
        for fold in folds:
            # skip folds that would strip a class from the training side
            remaining = {labels[v] for v in labels if v not in set(fold)}
            if len(remaining) < len(set(labels.values())):
                continue
            preds = predict_masked(g, partition, fold, "similarity", hp, workers)
            accs.append(sum(preds[v] == labels[v] for v in fold) / len(fold))
        scores.append((hp, sum(accs) / len(accs) if accs else 0.0))
    best = max(scores, key=lambda t: t[1])
    for hp, s in scores:  # earliest wins ties
        if s == best[1]:
            return hp, scores
    return best[0], scores


def make_grid(alphas=(0.3, 0.5, 0.7, 0.9), omegas=(0.0, 0.5), sigmas=(0.3,),
              base=None):
    """Cartesian product of the knobs people actually tune."""
    base = base or Hyperparams()
    out = []
    for a in alphas:
        for w in omegas:
            for s in sigmas:
                out.append(replace(base, alpha=a, omega=w,
                                   kernel=KernelSpec(kind=base.kernel.kind, sigma=s,
                                                     degree=base.kernel.degree,
                                                     offset=base.kernel.offset)))
    return out


def sample_visible(labels, fraction, rng):
    """Stratified sample of nodes to keep labeled: at least one per class."""
    visible = []
    for c in sorted(set(labels.values())):
        group = sorted(v for v, y in labels.items() if y == c)
        rng.shuffle(group)
        take = max(1, round(fraction * len(group)))
        visible += group[:take]
    return sorted(visible)


def sparse_label_experiment(g, fractions, methods=METHODS, hp=None, config=None,
                            workers=1):
    """Accuracy as the labeled fraction shrinks.

    For every fraction and trial, reveal a stratified sample of labels and
    score each method on everything hidden. Returns
    {fraction: {method: [trial accuracies]}}.
    """
    config = config or EvalConfig()
    full = NodePartition.from_graph(g)
    results = {f: {m: [] for m in methods} for f in fractions}
    for frac in fractions:
        for trial in range(config.trials):
            rng = random.Random(config.seed * 7919 + trial)
            visible = set(sample_visible(full.labels, frac, rng))
            hidden = [v for v in full.labels if v not in visible]
            if not hidden:
                continue
            for m in methods:
                preds = predict_masked(g, full, hidden, m, hp, workers)
                acc = sum(preds[v] == full.labels[v] for v in hidden) / len(hidden)
                results[frac][m].append(acc)
    return results
