"""Pre-flight margins for the experiment-style acceptance tests.

Runs the homophily sweep, the sparse-label direction experiment, the
per-test-node timing contract, and the incremental-vs-full comparison at
their acceptance settings, and prints the observed margins. The acceptance
suite freezes its thresholds only after this script shows them holding with
room to spare; rerun it when touching the engine, the generators, or the
evaluation drivers.

Usage: python3 scripts/derive_thresholds.py [sweep|direction|timing|incremental]
(no argument runs everything).
"""

import random
import statistics
import sys
import time

import numpy as np

from relsim.datasets import citation_like, planted_blocks
from relsim.engine import Hyperparams, run
from relsim.evaluation import grid_search, make_grid, predict_masked, sample_visible
from relsim.graph import AttributedGraph, NodePartition
from relsim.kernels import KernelSpec
from relsim.session import InferenceSession


# ------------------------------------------------------- homophily sweep

ALPHA_GRID = make_grid(alphas=(0.0, 0.25, 0.5, 0.75, 1.0), omegas=(0.5,),
                       sigmas=(0.3,))


def sweep_trial(ratio, trial):
    g = planted_blocks(n=100, k=2, ratio=ratio, seed=trial)
    full = NodePartition.from_graph(g)
    rng = random.Random(1000 + trial)
    visible = set(sample_visible(full.labels, 0.2, rng))
    hidden = sorted(v for v in full.labels if v not in visible)
    train = NodePartition.from_graph(
        g, labels={v: full.labels[v] for v in visible})
    hp, _ = grid_search(g, train, ALPHA_GRID, rng=rng)
    out = {}
    for method, m_hp in (("similarity", hp), ("neighbor-vote", None)):
        preds = predict_masked(g, full, hidden, method, m_hp)
        out[method] = sum(preds[v] == full.labels[v] for v in hidden) / len(hidden)
    out["alpha"] = hp.alpha
    return out


def homophily_sweep(trials=20):
    for ratio in (15.0, 1.5):
        rows = [sweep_trial(ratio, t) for t in range(trials)]
        sim = statistics.mean(r["similarity"] for r in rows)
        nbr = statistics.mean(r["neighbor-vote"] for r in rows)
        alphas = sorted(r["alpha"] for r in rows)
        print(f"ratio {ratio:>4}: similarity {sim:.4f}  neighbor-vote {nbr:.4f}"
              f"  gap {sim - nbr:+.4f}  chosen alphas {alphas}")


# --------------------------------------------------- sparse-label direction

def strip_attributes(g):
    return AttributedGraph(g.node_count, edges=list(g.edges()),
                           labels=dict(g.labels), class_count=g.class_count)


# citation volumes and field-internal bias give structure its class signal;
# freezing is off because top-k commitment locks in early mistakes when only
# 10% of labels are visible
CITATION = dict(n=250, k=3, attach=(1, 3, 6), mix=0.4, flip=0.1)
DIRECTION_HP = Hyperparams(alpha=0.3, omega=0.5, ssl_enabled=False,
                           kernel=KernelSpec(sigma=0.3))


def citation_seeds(trials, min_class=12):
    """First seeds whose graphs keep every class populated."""
    out, s = [], 0
    while len(out) < trials and s < 50 * trials:
        g = citation_like(seed=s, **CITATION)
        counts = [0] * CITATION["k"]
        for c in g.labels.values():
            counts[c] += 1
        if min(counts) >= min_class:
            out.append(s)
        s += 1
    return out


def direction_experiment(trials=20):
    accs = {"similarity": [], "neighbor-vote": []}
    for trial in citation_seeds(trials):
        g = strip_attributes(citation_like(seed=trial, **CITATION))
        full = NodePartition.from_graph(g)
        rng = random.Random(500 + trial)
        visible = set(sample_visible(full.labels, 0.1, rng))
        hidden = sorted(v for v in full.labels if v not in visible)
        for method in accs:
            hp = DIRECTION_HP if method == "similarity" else None
            preds = predict_masked(g, full, hidden, method, hp)
            accs[method].append(
                sum(preds[v] == full.labels[v] for v in hidden) / len(hidden))
    sim = statistics.mean(accs["similarity"])
    nbr = statistics.mean(accs["neighbor-vote"])
    gaps = [a - b for a, b in zip(accs["similarity"], accs["neighbor-vote"])]
    print(f"citation-like: similarity {sim:.4f}  neighbor-vote {nbr:.4f}"
          f"  gap {sim - nbr:+.4f}  trial gaps min {min(gaps):+.4f}")


# ----------------------------------------------------------- timing contract

def timing_graph(n_labeled, n_test=50, d=8, seed=0):
    rng = np.random.default_rng(seed)
    n = n_labeled + n_test
    X = rng.normal(size=(n, d))
    X[: n // 2, 0] += 1.5
    m = 3 * n
    pairs = {tuple(sorted(p)) for p in rng.integers(0, n, size=(m, 2)) if p[0] != p[1]}
    labels = {v: (0 if v < n // 2 else 1) for v in range(n_labeled)}
    return AttributedGraph(n, edges=sorted(pairs), features=X, labels=labels,
                           class_count=2)


TIMING_HP = Hyperparams(tau_max=1, ssl_enabled=False, prior_iters=0,
                        kernel=KernelSpec(sigma=0.3))


def time_once(g, n_test):
    seed = np.full((g.node_count, 2), 0.5)
    t0 = time.perf_counter()
    run(g, hp=TIMING_HP, seed_P=seed)
    return (time.perf_counter() - t0) / n_test


def timing_contract(reps=5):
    sizes = (1000, 2000, 4000, 8000)
    medians = []
    for n_labeled in sizes:
        g = timing_graph(n_labeled)
        times = [time_once(g, 50) for _ in range(reps)]
        medians.append(statistics.median(times))
        print(f"labeled {n_labeled:>5}: per-test-node {medians[-1] * 1e3:.3f} ms"
              f"  (spread {min(times) * 1e3:.3f}..{max(times) * 1e3:.3f})")
    for a, b in zip(medians, medians[1:]):
        print(f"  ratio {b / a:.3f}  (band 1.4..2.6)")


# ------------------------------------------------------ incremental regime

def incremental_regime(n=200, steps=100):
    # mirrors the session suite's comparator at acceptance scale
    import os
    sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))
    from test_session import random_mutation, reconstruct_seed

    full = planted_blocks(n=n, k=2, ratio=6.0, seed=11)
    labeled = {v: full.labels[v] for v in range(0, n, 5)}
    g = AttributedGraph(n, edges=list(full.edges()), features=full.features,
                        labels=labeled, class_count=2)
    hp = Hyperparams(topk_fraction=1.0)
    sess = InferenceSession(g, hp=hp)
    sess.run_full()
    rng = random.Random(2024)
    worst_in, bit_out, checked_out = 0.0, True, 0
    for step in range(steps):
        prev = sess.estimates.copy()
        record = random_mutation(rng, g)
        delta = sess.apply(record)
        if not delta.ok:
            print(f"step {step}: degraded ({delta.error})")
            continue
        full = run(g, hp=hp, seed_P=reconstruct_seed(prev, g, record))
        inside = set(delta.recomputed)
        for v in sess.predictions:
            diff = np.abs(sess.estimates[v] - full.estimates[v]).max()
            if v in inside:
                worst_in = max(worst_in, diff)
            else:
                checked_out += 1
                bit_out &= bool(np.array_equal(sess.estimates[v], full.estimates[v]))
    print(f"{steps} mutations on n={n}: worst inside diff {worst_in:.2e}"
          f"  outside bit-identical {bit_out} ({checked_out} rows checked)")


EXPERIMENTS = {
    "sweep": homophily_sweep,
    "direction": direction_experiment,
    "timing": timing_contract,
    "incremental": incremental_regime,
}


if __name__ == "__main__":
    picked = sys.argv[1:] or list(EXPERIMENTS)
    for name in picked:
        print(f"== {name}")
        t0 = time.perf_counter()
        EXPERIMENTS[name]()
        print(f"   ({time.perf_counter() - t0:.1f} s)")
