"""Batch command line front end.

Subcommands: ``features`` dumps per-node structural columns, ``train-eval``
runs repeated cross-validation, ``predict`` writes estimates for the
currently unlabeled nodes, ``sweep`` reports a hyperparameter grid, and
``serve`` starts the interactive service. Every flag can also be supplied
through ``--config`` as a ``key=value`` file; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

from .engine import Hyperparams, run
from .evaluation import METHODS, CVReport, EvalConfig, cross_validate, make_grid
from .features import META_BLOCKS, NORM_SCHEMES, topology_features
from .graph import NodePartition
from .io import DatasetError, load_config, load_dataset, resolve_dataset
from .kernels import KERNEL_KINDS, KernelSpec

_HP_KEYS = ("alpha", "omega", "hop", "tau_max", "ssl", "topk_fraction",
            "epsilon", "prior_iters", "mesh", "normalization", "aggregation",
            "edge_weights", "meta", "kernel", "sigma", "degree", "offset")


def _add_hp_flags(p):
    hp = p.add_argument_group("hyperparameters")
    hp.add_argument("--alpha", type=float, help="neighbor vs rest-of-graph mix")
    hp.add_argument("--omega", type=float, help="previous-estimate carry weight")
    hp.add_argument("--hop", type=int, help="neighborhood radius")
    hp.add_argument("--tau-max", type=int, help="iteration cap")
    hp.add_argument("--kernel", choices=KERNEL_KINDS)
    hp.add_argument("--sigma", type=float, help="rbf bandwidth")
    hp.add_argument("--degree", type=int, help="polynomial degree")
    hp.add_argument("--offset", type=float, help="polynomial offset")
    hp.add_argument("--ssl", action=argparse.BooleanOptionalAction, default=None,
                    help="let unlabeled estimates vote")
    hp.add_argument("--topk-fraction", type=float, help="fraction frozen per pass")
    hp.add_argument("--epsilon", type=float, help="convergence threshold")
    hp.add_argument("--prior-iters", type=int, help="prior smoothing rounds")
    hp.add_argument("--mesh", type=float, help="prior smoothing mix")
    hp.add_argument("--normalization", choices=NORM_SCHEMES)
    hp.add_argument("--aggregation", choices=("mean", "sum", "max"))
    hp.add_argument("--edge-weights", action=argparse.BooleanOptionalAction,
                    default=None, help="scale similarities by edge weight")
    hp.add_argument("--meta", help="comma list of meta feature blocks "
                    f"({', '.join(META_BLOCKS)})")


def _build_hp(args):
    base = Hyperparams()
    kw = {}
    for src, dst in (("alpha", "alpha"), ("omega", "omega"), ("hop", "hop"),
                     ("tau_max", "tau_max"), ("ssl", "ssl_enabled"),
                     ("topk_fraction", "topk_fraction"), ("epsilon", "epsilon"),
                     ("prior_iters", "prior_iters"), ("mesh", "mesh"),
                     ("normalization", "normalization"),
                     ("aggregation", "aggregation"),
                     ("edge_weights", "use_edge_weights")):
        val = getattr(args, src, None)
        if val is not None:
            kw[dst] = val
    meta = getattr(args, "meta", None)
    if meta is not None:
        kw["meta_features"] = tuple(m.strip() for m in str(meta).split(",") if m.strip())
    ks = KernelSpec()
    kkw = {}
    for fld in ("sigma", "degree", "offset"):
        val = getattr(args, fld, None)
        if val is not None:
            kkw[fld] = val
    kind = getattr(args, "kernel", None)
    if kind is not None:
        kkw["kind"] = kind
    if kkw:
        kw["kernel"] = KernelSpec(
            kind=kkw.get("kind", ks.kind), sigma=kkw.get("sigma", ks.sigma),
            degree=kkw.get("degree", ks.degree), offset=kkw.get("offset", ks.offset))
    return base.replace(**kw) if kw else base


def _apply_config(args):
    if not getattr(args, "config", None):
        return
    for key, val in load_config(args.config).items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, val)


def _out_stream(path):
    return open(path, "w", newline="") if path and path != "-" else sys.stdout


def _close(fh):
    if fh is not sys.stdout:
        fh.close()


# ------------------------------------------------------------------ handlers


def _cmd_features(args):
    ds = load_dataset(resolve_dataset(args.dataset))
    fm = topology_features(ds.graph)
    if args.normalization and args.normalization != "none":
        fm = fm.normalized(args.normalization)
    fh = _out_stream(args.out)
    w = csv.writer(fh)
    w.writerow(["node"] + [c.name for c in fm.columns])
    for v in ds.graph.nodes():
        w.writerow([ds.node_names[v]] + [f"{x:.10g}" for x in fm.values[v]])
    _close(fh)
    return 0


def _cmd_train_eval(args):
    ds = load_dataset(resolve_dataset(args.dataset))
    hp = _build_hp(args)
    config = EvalConfig(folds=args.folds or 5, trials=args.trials or 20,
                        seed=args.seed or 0)
    grid = make_grid() if args.grid else None
    methods = METHODS if args.method == "both" else (args.method,)
    reports = []
    for method in methods:
        rep = cross_validate(ds.graph, method=method, hp=hp, config=config,
                             grid=grid, workers=args.workers or 1)
        reports.append(rep)
        print(rep.summary())
    if args.json:
        with open(args.json, "w") as fh:
            fh.write("[" + ",\n".join(r.to_json() for r in reports) + "]\n")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("method,trial,fold,accuracy\n")
            for r in reports:
                for line in r.to_csv().splitlines()[1:]:
                    fh.write(f"{r.method},{line}\n")
    return 0


def _cmd_predict(args):
    ds = load_dataset(resolve_dataset(args.dataset))
    g = ds.graph
    part = NodePartition.from_graph(g)
    fh = _out_stream(args.out)
    w = csv.writer(fh)
    w.writerow(["node", "class", "certainty"]
               + [f"p_{c}" for c in ds.class_names])
    if part.unlabeled:
        res = run(g, part, _build_hp(args), workers=args.workers or 1)
        for v in part.unlabeled:
            w.writerow([ds.node_names[v], ds.class_names[res.assignments[v]],
                        f"{res.certainty[v]:.6f}"]
                       + [f"{p:.6f}" for p in res.estimates[v]])
    _close(fh)
    return 0


def _parse_floats(text, fallback):
    if text is None:
        return fallback
    return tuple(float(t) for t in str(text).split(",") if t.strip())


def _cmd_sweep(args):
    ds = load_dataset(resolve_dataset(args.dataset))
    hp = _build_hp(args)
    alphas = _parse_floats(args.alphas, (0.3, 0.5, 0.7, 0.9))
    omegas = _parse_floats(args.omegas, (0.0, 0.5))
    sigmas = _parse_floats(args.sigmas, (hp.kernel.sigma,))
    config = EvalConfig(folds=args.folds or 5, trials=args.trials or 5,
                        seed=args.seed or 0)
    fh = _out_stream(args.out)
    w = csv.writer(fh)
    w.writerow(["alpha", "omega", "sigma", "mean_accuracy", "std_accuracy"])
    for cand in make_grid(alphas=alphas, omegas=omegas, sigmas=sigmas, base=hp):
        rep = cross_validate(ds.graph, hp=cand, config=config,
                             workers=args.workers or 1)
        w.writerow([cand.alpha, cand.omega, cand.kernel.sigma,
                    f"{rep.mean():.6f}", f"{rep.std():.6f}"])
    _close(fh)
    return 0


def _cmd_serve(args):
    from . import service  # deferred: pulls in the web stack

    ui_dir = args.ui if args.ui is not None else os.path.join("frontend", "dist")
    app = service.build_app(ui_dir=ui_dir)
    if args.dataset:
        ds = load_dataset(resolve_dataset(args.dataset))
        service.preload(app, ds, _build_hp(args), workers=args.workers or 1)
    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# --------------------------------------------------------------- entry point


def build_parser():
    p = argparse.ArgumentParser(
        prog="relsim",
        description="Relational similarity learning over attributed graphs.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, dataset=True):
        if dataset:
            sp.add_argument("dataset", help="dataset directory or registered name")
        sp.add_argument("--config", help="key=value defaults file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)

    sp = sub.add_parser("features", help="emit structural feature columns")
    common(sp)
    sp.add_argument("--normalization", choices=NORM_SCHEMES, default=None)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=_cmd_features)

    sp = sub.add_parser("train-eval", help="repeated stratified cross-validation")
    common(sp)
    sp.add_argument("--method", choices=METHODS + ("both",), default="similarity")
    sp.add_argument("--folds", type=int, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--grid", action="store_true",
                    help="nested search over a default grid")
    sp.add_argument("--json", help="write full report as JSON")
    sp.add_argument("--csv", help="write per-fold accuracies as CSV")
    _add_hp_flags(sp)
    sp.set_defaults(func=_cmd_train_eval)

    sp = sub.add_parser("predict", help="estimates for unlabeled nodes as CSV")
    common(sp)
    sp.add_argument("--out", default="-")
    _add_hp_flags(sp)
    sp.set_defaults(func=_cmd_predict)

    sp = sub.add_parser("sweep", help="grid report over alpha/omega/sigma")
    common(sp)
    sp.add_argument("--alphas", help="comma list")
    sp.add_argument("--omegas", help="comma list")
    sp.add_argument("--sigmas", help="comma list")
    sp.add_argument("--folds", type=int, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--out", default="-")
    _add_hp_flags(sp)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("serve", help="start the interactive service")
    sp.add_argument("dataset", nargs="?", help="optional dataset to preload")
    sp.add_argument("--config", help="key=value defaults file")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.add_argument("--ui", default=None,
                    help="directory with the built browser UI "
                         "(default: ./frontend/dist when present)")
    _add_hp_flags(sp)
    sp.set_defaults(func=_cmd_serve)

    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        _apply_config(args)
        return args.func(args)
    except (DatasetError, OSError, ValueError) as exc:
        print(f"relsim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
