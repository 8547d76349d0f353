"""HTTP facade over InferenceSession for the interactive UI.

One process hosts many independent sessions. Every session serializes its
mutations behind a lock, keeps a monotonic model version (bumped by each
accepted mutation, retrain, or hyperparameter change), and records every
resulting delta in a replay buffer so clients can catch up after a dropped
push connection. Wire schema: docs/service-protocol.md.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import os
import threading

import numpy as np
from fastapi import Body, FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles

from .engine import DegenerateTaskError, Hyperparams
from .features import TOPOLOGY_COLUMNS, topology_features
from .graph import (AttributedGraph, GraphError, InvalidNodeError,
                    MutationError)
from .io import load_dataset, resolve_dataset
from .kernels import KernelSpec, MissingClassError
from .session import InferenceSession, StalenessError

REPLAY_CAP = 512
PUSH_POLL_SECONDS = 0.05


def hp_to_dict(hp):
    return {
        "alpha": hp.alpha, "omega": hp.omega, "hop": hp.hop,
        "tau_max": hp.tau_max, "ssl_enabled": hp.ssl_enabled,
        "topk_fraction": hp.topk_fraction, "epsilon": hp.epsilon,
        "prior_iters": hp.prior_iters, "mesh": hp.mesh,
        "meta_features": list(hp.meta_features),
        "use_edge_weights": hp.use_edge_weights,
        "normalization": hp.normalization, "aggregation": hp.aggregation,
        "kernel": {"kind": hp.kernel.kind, "sigma": hp.kernel.sigma,
                   "degree": hp.kernel.degree, "offset": hp.kernel.offset},
    }


def hp_from_dict(base, data):
    """Overlay a partial wire dict onto existing hyperparameters."""
    data = dict(data or {})
    kernel = data.pop("kernel", None)
    if kernel is not None:
        spec = {"kind": base.kernel.kind, "sigma": base.kernel.sigma,
                "degree": base.kernel.degree, "offset": base.kernel.offset}
        spec.update(kernel)
        data["kernel"] = KernelSpec(**spec)
    if "meta_features" in data:
        data["meta_features"] = tuple(data["meta_features"])
    return base.replace(**data)


def topology_rows(g):
    """Per-slot topology rows; dead slots are zero. Tombstone-safe."""
    out = np.zeros((g.slot_count, len(TOPOLOGY_COLUMNS)))
    if g.node_count == 0:
        return out
    if g.is_compact:
        out[:] = topology_features(g).values
        return out
    dense, remap = g.compact()
    vals = topology_features(dense).values
    for old, new in remap.items():
        out[old] = vals[new]
    return out


class SessionBox:
    """One session plus its lock, version counter, and delta replay ring."""

    def __init__(self, sid, session, node_names=None, class_names=None):
        self.sid = sid
        self.session = session
        self.lock = threading.Lock()
        self.model_version = 0
        self.deltas = []  # replay ring of delta payloads
        self.node_names = node_names
        self.class_names = class_names
        self.topology = topology_rows(session.graph)

    # ------------------------------------------------------------ node views

    def node_view(self, v):
        s = self.session
        g = s.graph
        label = g.label(v)
        assignment = s.predictions.get(v)
        return {
            "id": v,
            "label": label,
            "assignment": None if label is not None else assignment,
            "certainty": s.certainty.get(v),
            "estimate": [float(x) for x in s.estimates[v]]
            if v < s.estimates.shape[0] else [],
            "frozen": v in s.frozen,
            "topology": [float(x) for x in self.topology[v]],
        }

    def graph_view(self):
        g = self.session.graph
        view = {
            "version": self.model_version,
            "graph_version": g.version,
            "class_count": g.class_count,
            "stale": self.session.stale,
            "hyperparams": hp_to_dict(self.session.hp),
            "topology_columns": list(TOPOLOGY_COLUMNS),
            "nodes": [self.node_view(v) for v in g.nodes()],
            "edges": [[u, v, w] for u, v, w in g.edges()],
        }
        if self.node_names is not None:
            view["node_names"] = list(self.node_names)
        if self.class_names is not None:
            view["class_names"] = list(self.class_names)
        return view

    # --------------------------------------------------------------- deltas

    def record_full(self, delta, op=None, detail=None):
        """Delta payload for a full re-run: refreshed views for all nodes."""
        g = self.session.graph
        self.topology = topology_rows(g)
        return self._push({
            "op": op,
            "detail": detail or {},
            "recomputed": list(delta.recomputed),
            "nodes": [self.node_view(v) for v in g.nodes()],
            "removed_nodes": [],
            "removed_predictions": list(delta.removed),
            "features": {},
            "edges_added": [],
            "edges_removed": [],
            "error": delta.error,
        })

    def record_mutation(self, record, delta, topo_before):
        g = self.session.graph
        self.topology = topology_rows(g)
        # dropped predictions leave a live node whose view still changed
        # (assignment and certainty go null), so those refresh as well
        refreshed = set(delta.changed) | {
            v for v in list(record.touched) + list(delta.removed)
            if g.is_active(v)}
        feature_updates = {}
        for v in g.nodes():
            if v in refreshed:
                continue
            old = topo_before[v] if v < topo_before.shape[0] else None
            if old is None or not np.array_equal(old, self.topology[v]):
                feature_updates[str(v)] = [float(x) for x in self.topology[v]]
        payload = {
            "op": record.op,
            "detail": _jsonable(record.detail),
            "recomputed": list(delta.recomputed),
            "nodes": [self.node_view(v) for v in sorted(refreshed)],
            "removed_nodes": [record.detail["node"]]
            if record.op == "delete_node" else [],
            "removed_predictions": list(delta.removed),
            "features": feature_updates,
            "edges_added": [], "edges_removed": [],
            "error": delta.error,
        }
        d = record.detail
        if record.op == "add_edge":
            payload["edges_added"] = [[d["u"], d["v"], d["weight"]]]
        elif record.op == "delete_edge":
            payload["edges_removed"] = [[d["u"], d["v"]]]
        elif record.op == "delete_node":
            # touched = the node plus its former neighbors
            payload["edges_removed"] = [
                sorted([d["node"], u]) for u in record.touched if u != d["node"]]
        return self._push(payload)

    def _push(self, payload):
        self.model_version += 1
        payload["version"] = self.model_version
        payload["graph_version"] = self.session.graph.version
        self.deltas.append(payload)
        if len(self.deltas) > REPLAY_CAP:
            del self.deltas[: len(self.deltas) - REPLAY_CAP]
        return payload

    def deltas_since(self, since):
        pending = [d for d in self.deltas if d["version"] > since]
        expected = self.model_version - since
        if expected > len(pending):  # ring already dropped part of the gap
            return None
        return pending


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [float(x) for x in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _graph_from_payload(data):
    edges = [tuple(e) for e in data.get("edges", [])]
    features = data.get("features")
    labels = {int(k): int(v) for k, v in (data.get("labels") or {}).items()}
    return AttributedGraph(
        int(data["node_count"]),
        edges=edges,
        features=np.asarray(features, dtype=float) if features else None,
        labels=labels,
        class_count=data.get("class_count"),
    )


def build_app(ui_dir=None):
    app = FastAPI(title="relsim service")
    # the UI is not always served from this process (dev servers, ?base=),
    # so cross-origin reads are allowed
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.boxes = {}
    app.state.ids = itertools.count(1)

    def box_of(sid) -> SessionBox:
        box = app.state.boxes.get(sid)
        if box is None:
            raise HTTPException(404, f"no session {sid!r}")
        return box

    # ------------------------------------------------------------- lifecycle

    @app.post("/api/session")
    def create_session(payload: dict = Body(...)):
        try:
            hp = hp_from_dict(Hyperparams(), payload.get("hyperparams"))
        except (TypeError, ValueError) as exc:
            raise HTTPException(400, f"bad hyperparameters: {exc}") from exc
        node_names = class_names = None
        try:
            if "dataset" in payload:
                ds = load_dataset(resolve_dataset(payload["dataset"]))
                g, node_names, class_names = ds.graph, ds.node_names, ds.class_names
            else:
                g = _graph_from_payload(payload)
            workers = int(payload.get("workers", 1))
        except (KeyError, ValueError, GraphError, OSError) as exc:
            raise HTTPException(400, f"bad graph payload: {exc}") from exc
        sid = str(next(app.state.ids))
        box = SessionBox(sid, InferenceSession(g, hp=hp, workers=workers),
                         node_names, class_names)
        with box.lock:
            delta = box.session.run_full()
            box.record_full(delta)
        app.state.boxes[sid] = box
        return {"session": sid, "version": box.model_version,
                "graph_version": g.version, "error": delta.error}

    @app.delete("/api/session/{sid}")
    def destroy_session(sid: str):
        box_of(sid)
        del app.state.boxes[sid]
        return {"session": sid, "deleted": True}

    # ----------------------------------------------------------------- views

    @app.get("/api/session/{sid}/graph")
    def get_graph(sid: str,
                  certainty_le: float = Query(None),
                  certainty_lt: float = Query(None),
                  certainty_ge: float = Query(None),
                  certainty_gt: float = Query(None),
                  classes: str = Query(None),
                  nodes: str = Query(None)):
        box = box_of(sid)
        with box.lock:
            view = box.graph_view()
        keep_class = None
        if classes is not None:
            keep_class = {int(c) for c in classes.split(",") if c.strip() != ""}
        keep_nodes = None
        if nodes is not None:
            keep_nodes = {int(v) for v in nodes.split(",") if v.strip() != ""}

        def visible(node):
            # labeled nodes count as fully certain for threshold filters
            c = node["certainty"] if node["certainty"] is not None else 1.0
            if certainty_le is not None and not c <= certainty_le:
                return False
            if certainty_lt is not None and not c < certainty_lt:
                return False
            if certainty_ge is not None and not c >= certainty_ge:
                return False
            if certainty_gt is not None and not c > certainty_gt:
                return False
            cls = node["label"] if node["label"] is not None else node["assignment"]
            if keep_class is not None and cls not in keep_class:
                return False
            if keep_nodes is not None and node["id"] not in keep_nodes:
                return False
            return True

        view["nodes"] = [nd for nd in view["nodes"] if visible(nd)]
        ids = {nd["id"] for nd in view["nodes"]}
        view["edges"] = [e for e in view["edges"] if e[0] in ids and e[1] in ids]
        return view

    @app.get("/api/session/{sid}/node/{v}")
    def node_details(sid: str, v: int):
        box = box_of(sid)
        with box.lock:
            g = box.session.graph
            if not g.is_active(v):
                raise HTTPException(404, f"no node {v}")
            nd = box.node_view(v)
            nd["features"] = [float(x) for x in g.features[v]] \
                if g.feature_dim else []
            nd["neighbors"] = [
                {"id": u, "weight": g.edge_weight(v, u),
                 "label": g.label(u),
                 "assignment": box.session.predictions.get(u)}
                for u in sorted(g.neighbors(v))]
            nd["version"] = box.model_version
            return nd

    # ------------------------------------------------------------- mutations

    def _mutate_locked(box, op, kwargs):
        with box.lock:
            g = box.session.graph
            topo_before = box.topology.copy()
            try:
                record = g.mutate(op, **kwargs)
            except (MutationError, InvalidNodeError) as exc:
                raise HTTPException(400, str(exc)) from exc
            except TypeError as exc:  # wrong argument names in the payload
                raise HTTPException(400, f"bad mutation payload: {exc}") from exc
            try:
                delta = box.session.apply(record)
            except StalenessError as exc:  # session cannot describe this graph
                raise HTTPException(409, str(exc)) from exc
            return box.record_mutation(record, delta, topo_before)

    @app.post("/api/session/{sid}/mutate")
    def mutate(sid: str, payload: dict = Body(...)):
        box = box_of(sid)
        op = payload.get("op")
        kwargs = {k: v for k, v in payload.items() if k != "op"}
        for key in ("features", "row"):
            if kwargs.get(key) is not None:
                try:
                    kwargs[key] = np.asarray(kwargs[key], dtype=float)
                except (TypeError, ValueError) as exc:
                    raise HTTPException(400, f"bad {key}: {exc}") from exc
        return _mutate_locked(box, op, kwargs)

    @app.post("/api/session/{sid}/label")
    def set_label(sid: str, payload: dict = Body(...)):
        box = box_of(sid)
        try:
            v = int(payload["node"])
            label = payload.get("label")
            label = None if label is None else int(label)
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(400, f"bad label payload: {exc}") from exc
        if label is None:
            return _mutate_locked(box, "clear_label", {"v": v})
        return _mutate_locked(box, "set_label", {"v": v, "label": label})

    # ---------------------------------------------------------- model knobs

    @app.get("/api/session/{sid}/hyperparams")
    def get_hyperparams(sid: str):
        box = box_of(sid)
        return {"version": box.model_version,
                "hyperparams": hp_to_dict(box.session.hp)}

    @app.put("/api/session/{sid}/hyperparams")
    def put_hyperparams(sid: str, payload: dict = Body(...)):
        box = box_of(sid)
        with box.lock:
            try:
                hp = hp_from_dict(box.session.hp, payload)
            except (TypeError, ValueError) as exc:
                raise HTTPException(400, f"bad hyperparameters: {exc}") from exc
            delta = box.session.retrain(hp)
            payload_out = box.record_full(delta, op="retrain",
                                          detail={"hyperparams": hp_to_dict(hp)})
        return payload_out

    @app.post("/api/session/{sid}/retrain")
    def retrain(sid: str):
        box = box_of(sid)
        with box.lock:
            delta = box.session.retrain()
            return box.record_full(delta, op="retrain")

    @app.post("/api/session/{sid}/local-model")
    def local_model(sid: str, payload: dict = Body(...)):
        box = box_of(sid)
        nodes = payload.get("nodes")
        if not nodes:
            raise HTTPException(400, "payload needs a nonempty 'nodes' list")
        with box.lock:
            try:
                hp = hp_from_dict(box.session.hp, payload.get("hyperparams"))
                report = box.session.local_model([int(v) for v in nodes], hp=hp)
            except DegenerateTaskError as exc:
                return {"error": str(exc), "version": box.model_version}
            except (TypeError, ValueError) as exc:
                raise HTTPException(400, str(exc)) from exc
        report["version"] = box.model_version
        report["error"] = None
        report["predictions"] = {str(k): int(v)
                                 for k, v in report["predictions"].items()}
        report["certainty"] = {str(k): float(v)
                               for k, v in report["certainty"].items()}
        return report

    # ------------------------------------------------------------------ push

    @app.get("/api/session/{sid}/deltas")
    def get_deltas(sid: str, since: int = Query(0)):
        box = box_of(sid)
        with box.lock:
            pending = box.deltas_since(since)
            if pending is None:
                return {"reset": True, "version": box.model_version,
                        "deltas": []}
            return {"reset": False, "version": box.model_version,
                    "deltas": pending}

    @app.get("/api/session/{sid}/events")
    async def events(sid: str, request: Request, since: int = Query(None)):
        box = box_of(sid)

        async def stream():
            cursor = box.model_version if since is None else since
            yield ("event: hello\ndata: "
                   + json.dumps({"version": box.model_version}) + "\n\n")
            idle = 0.0
            while True:
                if await request.is_disconnected():
                    return
                pending = box.deltas_since(cursor)
                if pending is None:
                    yield ("event: reset\ndata: "
                           + json.dumps({"version": box.model_version}) + "\n\n")
                    cursor = box.model_version
                    continue
                for d in pending:
                    yield "event: delta\ndata: " + json.dumps(d) + "\n\n"
                    cursor = d["version"]
                    idle = 0.0
                if not pending:
                    idle += PUSH_POLL_SECONDS
                    if idle >= 15.0:
                        yield ": keep-alive\n\n"
                        idle = 0.0
                    await asyncio.sleep(PUSH_POLL_SECONDS)

        return StreamingResponse(stream(), media_type="text/event-stream",
                                 headers={"Cache-Control": "no-cache"})

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def preload(app, ds, hp=None, workers=1):
    """Install a dataset as session id "default" (used by the CLI)."""
    sid = "default"
    box = SessionBox(sid, InferenceSession(ds.graph, hp=hp or Hyperparams(),
                                           workers=workers),
                     ds.node_names, ds.class_names)
    with box.lock:
        delta = box.session.run_full()
        box.record_full(delta)
    app.state.boxes[sid] = box
    return sid
