"""Experiment configuration and orchestration.

A configuration expands into cells keyed by (topology, T, k). Each cell
runs one decentralized solve on the shared instance, rounds every node's
final point, and is compared with centralized greedy. Results go to
``runrecord.json`` (deterministic given the config), ``rounds.csv`` per
cell, ``timing.json`` and optional SVG plots.
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import centralized_greedy
from .data import generate_synthetic, load_ratings
from .engine import RunParameters, run_continuous_dcg, run_discrete_dcg
from .metrics import check_lemma_bounds, theory_constants
from .multilinear import StackedFacility, facility_closed_form, facility_value_oracle, facility_values
from .plots import line_chart
from .polytope import body_from_dict
from .rounding import pipage_round, randomized_round
from .setfn import node_objectives, partition_users
from .topology import build_graph, load_edge_list, metropolis_weights, validate_weights

log = logging.getLogger(__name__)

CSV_HEADER = ["t", "dist_to_avg", "mean_obj", "lemma1_slack", "lemma2_slack"]


def _default_data():
    return {"kind": "synthetic", "M": 500, "p": 100, "density": 0.1,
            "rating_range": [1, 5], "seed": 0}


@dataclass
class ExperimentConfig:
    data: dict = field(default_factory=_default_data)
    n: int = 20
    topologies: list = field(default_factory=lambda: [{"kind": "erdos_renyi", "avg_degree": 5}])
    mode: str = "discrete"
    gradient_mode: str = "exact-facility"
    batch: int = 1
    body: dict = field(default_factory=lambda: {"kind": "uniform", "k": 5})
    k_values: list | None = None
    T_values: list = field(default_factory=lambda: [50])
    alpha: float | None = None
    phi: float | None = None
    seed: int = 0
    stride: int | None = None
    rounding: str = "pipage"
    plots: bool = True
    workers: int = 1
    out_dir: str = "runs/latest"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.T_values or any(int(T) < 1 for T in self.T_values):
            raise ValueError("T values must be >= 1")
        if self.mode not in ("continuous", "discrete"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.gradient_mode not in ("sampled", "exact-facility"):
            raise ValueError(f"unknown gradient mode {self.gradient_mode!r}")
        if self.rounding not in ("pipage", "randomized", "none"):
            raise ValueError(f"unknown rounding {self.rounding!r}")
        if isinstance(self.topologies, (dict, str)):
            self.topologies = [self.topologies]
        self.topologies = [{"kind": t} if isinstance(t, str) else dict(t)
                           for t in self.topologies]
        for t in self.topologies:
            if t.get("kind") == "er":
                t["kind"] = "erdos_renyi"
            if t.get("kind") == "erdos_renyi" and "edge_prob" not in t:
                t.setdefault("avg_degree", 5)
        if not self.topologies:
            raise ValueError("need at least one topology")
        if self.data.get("kind") == "synthetic" and self.n > int(self.data.get("M", 0)):
            raise ValueError("more nodes than users")
        p = self.data.get("p")
        if p is not None:
            for k in self.k_values or [self.body.get("k")]:
                if k is not None and int(k) > int(p):
                    raise ValueError(f"k={k} exceeds ground set size {p}")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        raw = copy.deepcopy(raw)
        if "data" in raw:
            merged = _default_data()
            if raw["data"].get("kind", "synthetic") != "synthetic":
                merged = {}
            merged.update(raw["data"])
            raw["data"] = merged
        return cls(**raw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self):
        return asdict(self)


def topology_name(spec: dict) -> str:
    kind = spec.get("kind", "line")
    if kind in ("erdos_renyi", "er"):
        return "er"
    if kind == "custom":
        return "custom:" + Path(spec.get("path", "edges")).stem
    return kind


PRESETS = {
    "figure1": {
        "topologies": ["line", {"kind": "erdos_renyi", "avg_degree": 5}, "complete"],
        "T_values": [10, 50, 200, 1000],
        "body": {"kind": "uniform", "k": 5},
    },
    "figure2": {
        "topologies": ["line", {"kind": "erdos_renyi", "avg_degree": 5}, "complete"],
        "T_values": [50, 1000],
        "k_values": [1, 2, 3, 4, 5, 6, 7, 8],
    },
}


@dataclass
class Instance:
    ratings: object
    partition: object
    local: list
    global_f: object
    stacked: StackedFacility

    @property
    def p(self):
        return self.global_f.p


def build_instance(cfg: ExperimentConfig) -> Instance:
    data = cfg.data
    if data.get("kind", "synthetic") == "synthetic":
        ratings = generate_synthetic(int(data["M"]), int(data["p"]), float(data["density"]),
                                     tuple(data["rating_range"]), int(data["seed"]))
    elif data["kind"] == "file":
        ratings = load_ratings(data["path"])
    else:
        raise ValueError(f"unknown data kind {data['kind']!r}")
    partition = partition_users(ratings.n_users, cfg.n, seed=cfg.seed)
    local, glob = node_objectives(ratings, partition)
    return Instance(ratings, partition, local, glob, StackedFacility(local))


def build_topology(spec: dict, n: int, seed: int):
    spec = dict(spec)
    kind = spec.pop("kind", "line")
    if kind == "custom":
        g = load_edge_list(spec["path"])
        if g.n != n:
            raise ValueError(f"edge list has {g.n} nodes, config has n={n}")
        return g
    return build_graph(kind, n, seed=spec.pop("seed", seed), **spec)


def _cells(cfg):
    ks = cfg.k_values if cfg.k_values else [None]
    for topo in cfg.topologies:
        for T in cfg.T_values:
            for k in ks:
                yield topo, int(T), k


def _cell_key(topo, T, k):
    key = f"{topology_name(topo)}_T{T}"
    return key if k is None else f"{key}_k{k}"


def _round_node(cfg, inst, body, x, node):
    value = facility_value_oracle(inst.global_f)
    if cfg.rounding == "pipage":
        res = pipage_round(x, body, value, set_function=inst.global_f)
    else:
        res = randomized_round(x, body, inst.global_f, trials=64,
                               rng=[cfg.seed, node], value_oracle=value)
    return res


def run_cell(cfg: ExperimentConfig, inst: Instance, topo: dict, T: int, k):
    started = time.perf_counter()
    graph = build_topology(topo, cfg.n, cfg.seed)
    w = metropolis_weights(graph)
    report = validate_weights(w, graph)
    body_spec = dict(cfg.body)
    if k is not None:
        body_spec = {"kind": "uniform", "k": int(k)}
    body = body_from_dict(body_spec, p=inst.p)
    params = RunParameters(T=T, alpha=cfg.alpha, phi=cfg.phi, batch=cfg.batch,
                           seed=cfg.seed, stride=cfg.stride)
    if cfg.mode == "continuous":
        traj = run_continuous_dcg(inst.stacked, body, w, params, graph=graph)
    else:
        traj = run_discrete_dcg(inst.local, body, w, params, gradient_mode=cfg.gradient_mode,
                                graph=graph)
    bounds = theory_constants(inst.local, body, report.beta)

    def global_grad(x):
        return facility_closed_form(inst.global_f, x)[1]
    lemmas = check_lemma_bounds(traj, bounds, global_grad if cfg.mode == "continuous" else None)

    rows = []
    for snap in traj.snapshots:
        vals = facility_values(inst.global_f, snap.x)
        rows.append([snap.t, float(traj.stats.dist_to_avg[snap.t]), float(np.mean(vals)),
                     lemmas.ratio_at("lemma1", snap.t), lemmas.ratio_at("lemma2", snap.t)])
    final_x = traj.final.x
    fractional = [float(v) for v in facility_values(inst.global_f, final_x)]
    rounded_sets, rounded_vals = [], []
    if cfg.rounding != "none" and body.kind in ("uniform", "partition"):
        for i, x in enumerate(final_x):
            res = _round_node(cfg, inst, body, x, i)
            rounded_sets.append(list(res.selected))
            rounded_vals.append(res.value)
    greedy = (centralized_greedy(inst.global_f, body)
              if body.kind in ("uniform", "partition") else None)
    cell = {
        "key": _cell_key(topo, T, k),
        "topology": topology_name(topo),
        "T": T,
        "k": k if k is not None else body_spec.get("k"),
        "body": body.to_dict() if body.kind != "uniform" else {"kind": "uniform", "k": body.k},
        "params": params.to_dict(),
        "graph": {"edges": len(graph.edges), "attempts": graph.attempts,
                  "beta": report.beta, "lambda_min": report.lambda_min},
        "theory": bounds.to_dict(),
        "final_distance": float(traj.stats.dist_to_avg[T]),
        "fractional_values": fractional,
        "mean_fractional": float(np.mean(fractional)),
        "rounded_sets": rounded_sets,
        "rounded_values": rounded_vals,
        "mean_rounded": float(np.mean(rounded_vals)) if rounded_vals else None,
        "greedy_value": greedy.value if greedy else None,
        "greedy_set": list(greedy.selected) if greedy else None,
        "lemmas": lemmas.to_dict(),
        "rows": rows,
    }
    return cell, time.perf_counter() - started


def _finite(obj):
    if isinstance(obj, float):
        return np.isfinite(obj) or np.isnan(obj)
    return True


def write_rows_csv(path, rows):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(CSV_HEADER)
        for r in rows:
            out.writerow([r[0]] + [repr(float(v)) for v in r[1:]])


def _plots(cfg, cells, out):
    written = []
    topo_names = list(dict.fromkeys(c["topology"] for c in cells))
    Ts = sorted({c["T"] for c in cells})
    ks = sorted({c["k"] for c in cells if c["k"] is not None})
    if len(Ts) > 1:
        for k in ks or [None]:
            series = []
            for name in topo_names:
                sel = sorted((c for c in cells if c["topology"] == name and c["k"] == k),
                             key=lambda c: c["T"])
                series.append((name, [c["T"] for c in sel], [c["final_distance"] for c in sel]))
            fname = "distance_vs_T.svg" if len(ks) <= 1 else f"distance_vs_T_k{k}.svg"
            (out / fname).write_text(line_chart(
                series, "Distance to average at the final round", "T",
                "distance to average (log10 axis)", logx=True, logy=True))
            written.append(fname)
    if len(ks) > 1:
        greedy_sel = sorted((c for c in cells if c["topology"] == topo_names[0]
                             and c["T"] == Ts[0]), key=lambda c: c["k"])
        greedy = ("greedy", [c["k"] for c in greedy_sel], [c["greedy_value"] for c in greedy_sel])
        for fname, field, title in (
                ("objective_vs_k.svg", "mean_rounded", "Average objective of the rounded sets"),
                ("objective_vs_k_fractional.svg", "mean_fractional",
                 "Average fractional objective")):
            series = []
            for name in topo_names:
                for T in Ts:
                    sel = sorted((c for c in cells if c["topology"] == name and c["T"] == T),
                                 key=lambda c: c["k"])
                    ys = [c[field] if c[field] is not None else float("nan") for c in sel]
                    series.append((f"{name} T={T}", [c["k"] for c in sel], ys))
            series.append(greedy)
            (out / fname).write_text(line_chart(series, title, "k", "objective"))
            written.append(fname)
    return written


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Run every cell, write the output files, and return the run record."""
    out = Path(out_dir or cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    started = time.perf_counter()
    inst = build_instance(cfg)
    cells_spec = list(_cells(cfg))
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(lambda c: run_cell(cfg, inst, *c), cells_spec))
    else:
        results = [run_cell(cfg, inst, *c) for c in cells_spec]
    cells = [c for c, _ in results]
    record = {
        "config": cfg.to_dict(),
        "instance": {"users": inst.ratings.n_users, "movies": inst.p, "nodes": cfg.n,
                     "users_per_node": [len(c) for c in inst.partition.chunks]},
        "notes": {
            "distance_to_average": "raw (1/n) sum_i ||x_i - x_bar||; plots use log10",
            "objective": "global F = (1/n) sum_i F_i; rounded values are f of each node's "
                         "pipage-rounded set, fractional values are F(x_i^T)",
        },
        "cells": sorted(cells, key=lambda c: c["key"]),
    }
    for c in cells:
        if not all(_finite(v) for v in c["fractional_values"] + c["rounded_values"]):
            raise FloatingPointError(f"non-finite objective in cell {c['key']}")
    (out / "runrecord.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    for c in cells:
        cell_dir = out / c["key"]
        cell_dir.mkdir(exist_ok=True)
        write_rows_csv(cell_dir / "rounds.csv", c["rows"])
    if len(cells) == 1:
        write_rows_csv(out / "rounds.csv", cells[0]["rows"])
    plots = _plots(cfg, cells, out) if cfg.plots else []
    timing = {"total_seconds": time.perf_counter() - started,
              "cells": {c["key"]: dt for c, dt in results}, "plots": plots}
    (out / "timing.json").write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n")
    return record


def summarize_bounds(record: dict) -> dict:
    """Collapse the stored per-cell lemma summaries into one report."""
    out = {"ok": True, "cells": {}}
    for c in record["cells"]:
        lem = c["lemmas"]
        out["cells"][c["key"]] = lem["lemmas"]
        out["ok"] = out["ok"] and all(v["violations"] == 0 for v in lem["lemmas"].values())
    return out


__all__ = ["ExperimentConfig", "PRESETS", "run_experiment", "run_cell", "build_instance",
           "summarize_bounds", "write_rows_csv", "CSV_HEADER"]
