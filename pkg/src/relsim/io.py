"""Dataset bundles on disk.

A dataset is a directory holding ``edges.txt`` (whitespace ``u v [weight]``,
``#`` comments), optional ``labels.txt`` (``node label``), and optional
``features.csv`` (``node,f1,f2,...`` with an optional header row). Node and
class identifiers may be arbitrary tokens; loading remaps both onto dense
ints deterministically (numeric tokens sort numerically, everything else
lexically after them) and reports the mapping back.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .graph import AttributedGraph

EDGE_FILE = "edges.txt"
LABEL_FILE = "labels.txt"
FEATURE_FILE = "features.csv"

DATA_DIR_ENV = "RELSIM_DATA_DIR"


class DatasetError(ValueError):
    """Malformed dataset bundle."""


@dataclass
class LoadedDataset:
    graph: AttributedGraph
    node_names: list
    class_names: list
    stats: dict = field(default_factory=dict)

    def node_id(self, name):
        return self.node_names.index(name)


def _sort_key(token):
    try:
        return (0, float(token), token)
    except ValueError:
        return (1, 0.0, token)


def _data_lines(path):
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if body:
                yield ln, body


def load_dataset(path):
    """Read a dataset directory into a LoadedDataset."""
    edge_path = os.path.join(path, EDGE_FILE)
    if not os.path.isfile(edge_path):
        raise DatasetError(f"missing {EDGE_FILE} under {path!r}")

    raw_edges = []
    self_loops = 0
    for ln, body in _data_lines(edge_path):
        parts = body.split()
        if len(parts) not in (2, 3):
            raise DatasetError(f"{edge_path}:{ln}: expected 'u v [weight]', got {body!r}")
        u, v = parts[0], parts[1]
        try:
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise DatasetError(f"{edge_path}:{ln}: bad weight {parts[2]!r}") from None
        if w <= 0:
            raise DatasetError(f"{edge_path}:{ln}: weight must be positive")
        if u == v:
            self_loops += 1
            continue
        raw_edges.append((u, v, w))

    raw_labels = {}
    label_path = os.path.join(path, LABEL_FILE)
    if os.path.isfile(label_path):
        for ln, body in _data_lines(label_path):
            parts = body.split()
            if len(parts) != 2:
                raise DatasetError(f"{label_path}:{ln}: expected 'node label'")
            if parts[0] in raw_labels and raw_labels[parts[0]] != parts[1]:
                raise DatasetError(f"{label_path}:{ln}: conflicting label for {parts[0]!r}")
            raw_labels[parts[0]] = parts[1]

    raw_features = {}
    width = None
    feat_path = os.path.join(path, FEATURE_FILE)
    if os.path.isfile(feat_path):
        with open(feat_path, newline="") as fh:
            for ln, row in enumerate(csv.reader(fh), 1):
                row = [c.strip() for c in row if c.strip() != ""]
                if not row:
                    continue
                if ln == 1 and len(row) > 1:
                    try:
                        float(row[1])
                    except ValueError:
                        continue  # header row
                try:
                    vals = [float(c) for c in row[1:]]
                except ValueError:
                    raise DatasetError(f"{feat_path}:{ln}: non-numeric feature") from None
                if width is None:
                    width = len(vals)
                elif len(vals) != width:
                    raise DatasetError(
                        f"{feat_path}:{ln}: expected {width} features, got {len(vals)}")
                raw_features[row[0]] = vals

    names = sorted(
        {t for u, v, _ in raw_edges for t in (u, v)} | set(raw_features),
        key=_sort_key)
    index = {name: i for i, name in enumerate(names)}
    unknown = sorted(set(raw_labels) - set(index), key=_sort_key)
    if unknown:
        raise DatasetError(
            f"labels reference nodes absent from {EDGE_FILE}/{FEATURE_FILE}: "
            + ", ".join(map(str, unknown[:5])))
    class_names = sorted(set(raw_labels.values()), key=_sort_key)
    class_index = {name: i for i, name in enumerate(class_names)}

    merged = {}
    duplicates = 0
    for u, v, w in raw_edges:
        key = (min(index[u], index[v]), max(index[u], index[v]))
        if key in merged:
            duplicates += 1
            merged[key] += w
        else:
            merged[key] = w

    feats = None
    if width:
        feats = np.zeros((len(names), width))
        for name, vals in raw_features.items():
            feats[index[name]] = vals

    g = AttributedGraph(
        len(names),
        edges=[(u, v, w) for (u, v), w in sorted(merged.items())],
        features=feats,
        labels={index[n]: class_index[c] for n, c in raw_labels.items()},
        class_count=len(class_names) or None,
    )
    return LoadedDataset(
        graph=g, node_names=names, class_names=class_names,
        stats={"self_loops_dropped": self_loops, "duplicate_edges_merged": duplicates})


def save_dataset(ds, path):
    """Write a LoadedDataset back out; inverse of load_dataset up to
    formatting (merged duplicates stay merged)."""
    os.makedirs(path, exist_ok=True)
    g = ds.graph
    with open(os.path.join(path, EDGE_FILE), "w") as fh:
        fh.write("# source target weight\n")
        for u, v, w in g.edges():
            fh.write(f"{ds.node_names[u]} {ds.node_names[v]} {w:g}\n")
    if g.labels:
        with open(os.path.join(path, LABEL_FILE), "w") as fh:
            fh.write("# node label\n")
            for v in sorted(g.labels):
                fh.write(f"{ds.node_names[v]} {ds.class_names[g.labels[v]]}\n")
    if g.feature_dim:
        with open(os.path.join(path, FEATURE_FILE), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node"] + [f"f{j}" for j in range(g.feature_dim)])
            for v in g.nodes():
                w.writerow([ds.node_names[v]] + [repr(float(x)) for x in g.features[v]])


def wrap_graph(g, node_names=None, class_names=None):
    """LoadedDataset view over an in-memory graph (identity naming)."""
    return LoadedDataset(
        graph=g,
        node_names=node_names or [str(v) for v in range(g.slot_count)],
        class_names=class_names or [str(c) for c in range(g.class_count)],
    )


def resolve_dataset(name):
    """Find a dataset directory: a literal path, then $RELSIM_DATA_DIR/name,
    then ./data/name."""
    tried = []
    for cand in (name,
                 os.path.join(os.environ.get(DATA_DIR_ENV, ""), name)
                 if os.environ.get(DATA_DIR_ENV) else None,
                 os.path.join("data", name)):
        if cand:
            tried.append(cand)
            if os.path.isdir(cand):
                return cand
    raise DatasetError(f"dataset {name!r} not found (tried {', '.join(tried)})")


def load_config(path):
    """key=value file with # comments; values coerced to int/float/bool when
    they parse as one."""
    out = {}
    for ln, body in _data_lines(path):
        if "=" not in body:
            raise DatasetError(f"{path}:{ln}: expected key=value")
        key, val = body.split("=", 1)
        out[key.strip()] = _coerce(val.strip())
    return out


def _coerce(text):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text
