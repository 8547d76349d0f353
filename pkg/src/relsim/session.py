"""Long-lived inference state over a mutable graph.

An InferenceSession owns a graph, the current hyperparameters, and the last
completed estimate rows. Mutations trigger a localized warm re-run instead
of a cold solve: the retained rows seed the engine, the rows of nodes within
``hop * max(1, last pass count)`` of the touched nodes are re-inferred, and
everything else is pinned as fixed evidence.

Seed adjustment rules (mutated rows only, everything else keeps its value):

- add_node: the new row starts at the global label-frequency prior, or
  one-hot when the node arrives labeled.
- delete_node: the dead slot's row is zeroed.
- set_label: the row becomes one-hot at the new label.
- clear_label: the row falls back to the label-frequency prior.
- add_edge / delete_edge / set_feature: rows are left as they are; the
  localized re-run is what reacts to the change.

A full warm re-run seeded the same way must agree with the localized path:
assignments match exactly outside the recomputed set, probability rows match
within 1e-6 inside it.
"""

from __future__ import annotations

import numpy as np

from .engine import DegenerateTaskError, Hyperparams, PredictionSet, run
from .evaluation import EvalConfig, cross_validate
from .graph import AttributedGraph, NodePartition
from .kernels import MissingClassError


class StalenessError(RuntimeError):
    """The graph moved ahead of the session (a mutation was never absorbed)."""


class SessionDelta:
    """What one session step changed, keyed to the graph version it reflects.

    ``changed`` maps node id to {"assignment", "certainty", "estimate"} for
    every row whose prediction state differs after the step, including rows
    whose lock flipped while the estimate stayed put; ``removed`` lists
    nodes that no longer carry predictions (deleted or newly labeled).
    """

    def __init__(self, version, op, recomputed, changed, removed, error=None):
        self.version = version
        self.op = op
        self.recomputed = tuple(sorted(recomputed))
        self.changed = changed
        self.removed = tuple(sorted(removed))
        self.error = error

    @property
    def ok(self):
        return self.error is None

    def to_payload(self):
        return {
            "version": self.version,
            "op": self.op,
            "recomputed": list(self.recomputed),
            "changed": {
                str(v): {
                    "assignment": int(info["assignment"]),
                    "certainty": float(info["certainty"]),
                    "estimate": [float(x) for x in info["estimate"]],
                } for v, info in self.changed.items()
            },
            "removed": list(self.removed),
            "error": self.error,
        }


def label_frequency_row(g, k):
    """Global label histogram as a probability row; uniform when unlabeled."""
    row = np.zeros(k)
    for c in g.labels.values():
        row[c] += 1.0
    total = row.sum()
    return row / total if total > 0 else np.full(k, 1.0 / k)


class InferenceSession:
    def __init__(self, graph: AttributedGraph, hp=None, workers=1):
        self.graph = graph
        self.hp = hp or Hyperparams()
        self.workers = workers
        self.estimates = np.zeros((graph.slot_count, graph.class_count))
        self.predictions = {}
        self.certainty = {}
        self.frozen = frozenset()
        self.tau_used = 1
        self.synced_version = graph.version
        self.stale = True  # nothing inferred yet

    # ------------------------------------------------------------- full runs

    def run_full(self):
        """Cold full inference; resets the retained state."""
        part = NodePartition.from_graph(self.graph)
        before = dict(self.predictions)
        try:
            res = run(self.graph, part, self.hp, workers=self.workers)
        except (MissingClassError, DegenerateTaskError) as exc:
            self.stale = True
            self.synced_version = self.graph.version
            return SessionDelta(self.graph.version, None, (), {}, (),
                                error=str(exc))
        self._adopt(res)
        removed = [v for v in before if v not in res.assignments]
        return SessionDelta(self.graph.version, None, sorted(res.assignments),
                            self._changed_info(res.assignments), removed)

    def retrain(self, hp=None):
        """Full re-run, optionally with new hyperparameters."""
        if hp is not None:
            self.hp = hp
        return self.run_full()

    # ------------------------------------------------------------- mutations

    def mutate(self, op, **kwargs):
        """Apply one graph mutation and absorb it incrementally."""
        record = self.graph.mutate(op, **kwargs)
        return self.apply(record)

    def apply(self, record):
        """Absorb a mutation already applied to this session's graph.

        The record must be the graph's latest and exactly one step ahead of
        the session, otherwise the session state no longer describes any
        consistent snapshot and a StalenessError is raised.
        """
        if record.graph_version != self.synced_version + 1:
            raise StalenessError(
                f"session synced at version {self.synced_version}, got record "
                f"for version {record.graph_version}")
        if self.graph.version != record.graph_version:
            raise StalenessError(
                f"graph is at version {self.graph.version}, record describes "
                f"{record.graph_version}")
        self.synced_version = record.graph_version
        if self.stale:
            # no trustworthy rows to warm-start from; fall back to a full run
            return self.run_full()
        return self._absorb(record)

    # -------------------------------------------------------------- internals

    def _adopt(self, res: PredictionSet):
        self.estimates = res.estimates
        self.predictions = dict(res.assignments)
        self.certainty = dict(res.certainty)
        self.frozen = res.frozen
        if res.iterations > 0:  # no-op steps keep the old influence radius
            self.tau_used = res.iterations
        self.synced_version = self.graph.version
        self.stale = False

    def _changed_info(self, nodes):
        return {
            v: {
                "assignment": self.predictions[v],
                "certainty": self.certainty[v],
                "estimate": self.estimates[v].copy(),
            } for v in nodes
        }

    def adjusted_seed(self, record):
        """Retained rows with the documented per-op adjustment applied."""
        g = self.graph
        k = g.class_count
        seed = self.estimates
        if seed.shape[0] < g.slot_count:  # add_node grew the slot space
            seed = np.vstack([seed, np.zeros((g.slot_count - seed.shape[0], k))])
        else:
            seed = seed.copy()
        op, detail = record.op, record.detail
        if op == "add_node":
            v = detail["node"]
            c = g.label(v)
            seed[v] = 0.0
            if c is None:
                seed[v] = label_frequency_row(g, k)
            else:
                seed[v, c] = 1.0
        elif op == "delete_node":
            seed[detail["node"]] = 0.0
        elif op == "set_label":
            v = detail["node"]
            seed[v] = 0.0
            seed[v, detail["label"]] = 1.0
        elif op == "clear_label":
            seed[detail["node"]] = label_frequency_row(g, k)
        return seed

    def recompute_set(self, record):
        """Unlabeled nodes within hop * max(1, last pass count) of the touch."""
        g = self.graph
        seeds = [v for v in record.touched if g.is_active(v)]
        radius = self.hp.hop * max(1, self.tau_used)
        ball = g.ball(seeds, radius)
        labeled = set(g.labels)
        return sorted(v for v in ball if v not in labeled)

    def _absorb(self, record):
        g = self.graph
        seed = self.adjusted_seed(record)
        active = self.recompute_set(record)
        part = NodePartition.from_graph(g)
        before_pred = dict(self.predictions)
        before_est = self.estimates
        before_frozen = self.frozen

        try:
            res = run(g, part, self.hp, workers=self.workers,
                      seed_P=seed, active=active)
        except (MissingClassError, DegenerateTaskError) as exc:
            self.stale = True
            return SessionDelta(record.graph_version, record.op, active, {},
                                (), error=str(exc))

        self._adopt(res)
        # rows outside the recompute set were never rerun, so locked ones
        # stay locked; the run only rules on the rows it actually touched
        rerun = set(active)
        kept = {v for v in before_frozen
                if g.is_active(v) and g.label(v) is None and v not in rerun}
        self.frozen = frozenset(kept) | res.frozen
        # scan every prediction, not just the recomputed cone: a recovery
        # run can surface rows the cone never touched, and a lock can flip
        # while the estimate stays put
        changed = []
        for v in res.assignments:
            old = before_est[v] if v < before_est.shape[0] else None
            if (v not in before_pred or old is None
                    or not np.array_equal(old, res.estimates[v])
                    or (v in before_frozen) != (v in self.frozen)):
                changed.append(v)
        removed = [v for v in before_pred if v not in res.assignments]
        return SessionDelta(record.graph_version, record.op, active,
                            self._changed_info(changed), removed)

    # ------------------------------------------------------------ local view

    def local_model(self, nodes, hp=None, folds=3, trials=3):
        """Fit the pipeline on the induced subgraph alone and report on it.

        Classes are remapped to those labeled inside the selection; the main
        session state is untouched. Raises DegenerateTaskError when fewer
        than two classes are labeled in the selection.
        """
        g = self.graph
        nodes = sorted(set(nodes))
        for v in nodes:
            if not g.is_active(v):
                raise DegenerateTaskError(f"node {v} is not in the graph")
        sub, classes = induced_subgraph(g, nodes)
        if len(classes) < 2:
            raise DegenerateTaskError(
                "selection needs labeled nodes of at least two classes")
        hp = hp or self.hp
        res = run(sub, hp=hp, workers=self.workers)
        report = {
            "nodes": nodes,
            "classes": list(classes),
            "predictions": {nodes[i]: classes[c]
                            for i, c in res.assignments.items()},
            "certainty": {nodes[i]: c for i, c in res.certainty.items()},
            "iterations": res.iterations,
            "accuracy": None,
            "accuracy_std": None,
        }
        counts = {}
        for c in sub.labels.values():
            counts[c] = counts.get(c, 0) + 1
        if min(counts.values()) >= 2:
            cv_folds = min(folds, min(counts.values()))
            rep = cross_validate(sub, hp=hp, workers=self.workers,
                                 config=EvalConfig(folds=cv_folds, trials=trials))
            report["accuracy"] = rep.mean()
            report["accuracy_std"] = rep.std()
        return report


def induced_subgraph(g, nodes):
    """Subgraph on ``nodes`` with ids remapped to 0..len-1 and classes
    remapped to those labeled inside; returns (graph, kept global class ids)."""
    index = {v: i for i, v in enumerate(nodes)}
    classes = sorted({g.label(v) for v in nodes if g.label(v) is not None})
    cmap = {c: i for i, c in enumerate(classes)}
    edges = [(index[u], index[v], w) for u, v, w in g.edges()
             if u in index and v in index]
    feats = g.features[nodes] if g.feature_dim else None
    labels = {index[v]: cmap[g.label(v)] for v in nodes
              if g.label(v) is not None}
    sub = AttributedGraph(len(nodes), edges=edges, features=feats,
                          labels=labels, class_count=max(len(classes), 1))
    return sub, classes


__all__ = ["InferenceSession", "SessionDelta", "StalenessError",
           "induced_subgraph", "label_frequency_row"]
