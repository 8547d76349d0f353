"""Classification with no attributes at all, from 10% labels.

Citation-style graphs where fields differ in how much and how internally
they cite: those habits leave fingerprints in degree and motif counts.
We delete every attribute column, keep one label in ten, and let the
engine work from graph topology features alone, against a neighbor-vote
baseline that sees the same labels.
"""

import random

from relsim import AttributedGraph, Hyperparams, KernelSpec, NodePartition
from relsim.datasets import citation_like
from relsim.evaluation import predict_masked, sample_visible

HP = Hyperparams(alpha=0.3, omega=0.5, ssl_enabled=False,
                 kernel=KernelSpec(sigma=0.3))


def bare(g):
    # same nodes and edges, zero feature columns
    return AttributedGraph(g.node_count, edges=list(g.edges()),
                           labels=dict(g.labels), class_count=g.class_count)


def main():
    sims, nbrs = [], []
    print(f"{'seed':>4}  {'similarity':>10}  {'nbr-vote':>8}")
    trial = 0
    seed = 0
    while trial < 10:
        g = citation_like(n=250, k=3, attach=(1, 3, 6), mix=0.4, flip=0.1,
                          seed=seed)
        seed += 1
        counts = [sum(1 for c in g.labels.values() if c == j) for j in range(3)]
        if min(counts) < 12:  # drifted generation, class too thin to score
            continue
        g = bare(g)
        rng = random.Random(500 + trial)
        visible = sample_visible(g.labels, 0.1, rng)
        hidden = sorted(set(g.labels) - set(visible))
        part = NodePartition.from_graph(g, labels={v: g.labels[v] for v in visible})
        row = {}
        for method in ("similarity", "neighbor-vote"):
            preds = predict_masked(g, part, hidden, method, HP)
            row[method] = sum(preds[v] == g.labels[v] for v in hidden) / len(hidden)
        sims.append(row["similarity"])
        nbrs.append(row["neighbor-vote"])
        print(f"{seed - 1:>4}  {row['similarity']:>10.4f}  {row['neighbor-vote']:>8.4f}")
        trial += 1

    print(f"\nmean  {sum(sims) / len(sims):>10.4f}  {sum(nbrs) / len(nbrs):>8.4f}")
    print("\nTopology features summarize who a node is, not just who its labeled")
    print("neighbors are, which is what carries a 10% labeling this far.")


if __name__ == "__main__":
    main()
