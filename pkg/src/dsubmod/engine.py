"""Synchronous-round simulator for decentralized continuous greedy.

Every round reads only the previous round's committed node states, so the
whole network update is written as array operations over an ``(n, p)``
state matrix. Neighbor averaging is done with an explicit, fixed-order sum
over each node's weight slots instead of a BLAS product, which keeps
results bitwise reproducible.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .multilinear import StackedFacility, stochastic_gradient
from .polytope import MEMBERSHIP_TOL, FeasibleBody
from .topology import CommGraph, validate_weights

log = logging.getLogger(__name__)

MAX_SNAPSHOTS = 200


@dataclass
class RunParameters:
    """Round count and averaging coefficients.

    ``alpha`` defaults to T^(-1/2) and ``phi`` to T^(-2/3); ``stride`` to
    max(1, T // 200).
    """

    T: int
    alpha: float | None = None
    phi: float | None = None
    batch: int = 1
    seed: int = 0
    stride: int | None = None
    check_feasibility: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.alpha is None:
            self.alpha = self.T ** -0.5
        if self.phi is None:
            self.phi = self.T ** (-2.0 / 3.0)
        if self.stride is None:
            self.stride = max(1, self.T // MAX_SNAPSHOTS)
        for name in ("alpha", "phi"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    @property
    def step(self) -> float:
        return 1.0 / self.T

    def to_dict(self):
        return {"T": self.T, "alpha": self.alpha, "phi": self.phi, "batch": self.batch,
                "seed": self.seed, "stride": self.stride}


@dataclass
class Snapshot:
    """Committed states after round ``t``: x is x_i^{t+1} in the listing's
    indexing (t ascent steps taken), d and g are d_i^t, g_i^t, and v the
    round's LMO vertices."""

    t: int
    x: np.ndarray
    d: np.ndarray
    v: np.ndarray
    g: np.ndarray | None = None


@dataclass
class RoundStats:
    """Per-round consensus summaries, index 0 holding the initial state.

    ``x_bar[t]`` is the network average after t ascent steps, which is also
    the average of the points where round t+1 queries gradients.
    """

    x_bar: np.ndarray
    d_bar: np.ndarray
    x_dev: np.ndarray         # sqrt(sum_i ||x_i - x_bar||^2)
    dist_to_avg: np.ndarray   # (1/n) sum_i ||x_i - x_bar||
    d_dev: np.ndarray         # sqrt(sum_i ||d_i - d_bar||^2)
    d_mean_dev: np.ndarray    # (1/n) sum_i ||d_i - d_bar||

    @classmethod
    def allocate(cls, T, p):
        return cls(np.zeros((T + 1, p)), np.zeros((T + 1, p)), np.zeros(T + 1),
                   np.zeros(T + 1), np.zeros(T + 1), np.zeros(T + 1))

    def record(self, t, X, D):
        xb = X.mean(axis=0)
        db = D.mean(axis=0)
        xn = np.linalg.norm(X - xb, axis=1)
        dn = np.linalg.norm(D - db, axis=1)
        self.x_bar[t], self.d_bar[t] = xb, db
        self.x_dev[t] = np.sqrt(np.sum(xn ** 2))
        self.dist_to_avg[t] = xn.mean()
        self.d_dev[t] = np.sqrt(np.sum(dn ** 2))
        self.d_mean_dev[t] = dn.mean()


@dataclass
class Trajectory:
    mode: str
    params: RunParameters
    n: int
    p: int
    beta: float
    snapshots: list[Snapshot]
    stats: RoundStats
    body: FeasibleBody = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    @property
    def T(self) -> int:
        return self.params.T

    def snapshot_rounds(self) -> list[int]:
        return [s.t for s in self.snapshots]


class Mixer:
    """Applies x_i <- sum_j w_ij x_j with a deterministic summation order."""

    def __init__(self, w):
        w = np.asarray(w, dtype=float)
        n = w.shape[0]
        slots = [np.flatnonzero(w[i]) for i in range(n)]
        width = max(len(s) for s in slots)
        self.index = np.zeros((n, width), dtype=int)
        self.weight = np.zeros((n, width))
        for i, s in enumerate(slots):
            self.index[i, :len(s)] = s
            self.index[i, len(s):] = i
            self.weight[i, :len(s)] = w[i, s]

    def __call__(self, X):
        out = np.zeros_like(X)
        for s in range(self.index.shape[1]):
            out += self.weight[:, s, None] * X[self.index[:, s]]
        return out


def _graph_of(w):
    n = w.shape[0]
    iu, ju = np.nonzero(np.triu(w, k=1))
    return CommGraph.from_edges(n, zip(iu.tolist(), ju.tolist()))


def _check_weights(w, graph):
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"weight matrix must be square, got {w.shape}")
    report = validate_weights(w, graph if graph is not None else _graph_of(w))
    if not report.assumption1_holds:
        raise ValueError("weight matrix violates the mixing assumptions: "
                         + "; ".join(report.issues or ["graph not connected"]))
    return w, report


def _stack(oracles, n, workers):
    """Turn per-node gradient callables into one (n, p) -> (n, p) callable."""
    if callable(oracles) and not isinstance(oracles, Sequence):
        return oracles
    oracles = list(oracles)
    if len(oracles) != n:
        raise ValueError(f"need one gradient oracle per node ({n}), got {len(oracles)}")

    if workers > 1:
        pool = ThreadPoolExecutor(max_workers=workers)

        def stacked(X):
            rows = pool.map(lambda i: oracles[i](X[i].copy()), range(n))
            return np.array([np.asarray(r, dtype=float) for r in rows])
        stacked.pool = pool
        return stacked

    def stacked(X):
        return np.array([np.asarray(oracles[i](X[i].copy()), dtype=float) for i in range(n)])
    return stacked


def feasible_rows(body: FeasibleBody, X, tol=MEMBERSHIP_TOL) -> bool:
    return body.contains_rows(X, tol)


def _run(mode, gradient_step, body, w, params, graph):
    w, report = _check_weights(w, graph)
    n, p = w.shape[0], body.p
    mix = Mixer(w)
    alpha, phi, step = params.alpha, params.phi, params.step
    X = np.zeros((n, p))
    D = np.zeros((n, p))
    G = np.zeros((n, p)) if mode == "discrete" else None
    stats = RoundStats.allocate(params.T, p)
    snapshots = []
    for t in range(1, params.T + 1):
        grad = np.asarray(gradient_step(X, t), dtype=float)
        if grad.shape != (n, p):
            raise ValueError(f"gradient oracle returned shape {grad.shape}, expected {(n, p)}")
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError(f"non-finite gradient at round {t}")
        if G is not None:
            G = (1.0 - phi) * G + phi * grad
            local = G
        else:
            local = grad
        D = (1.0 - alpha) * mix(D) + alpha * local
        V = body.lmo_rows(D)
        X = mix(X) + step * V
        stats.record(t, X, D)
        if params.check_feasibility and not feasible_rows(body, X):
            raise AssertionError(f"iterate left the feasible set at round {t}")
        if t % params.stride == 0 or t == params.T:
            snapshots.append(Snapshot(t, X.copy(), D.copy(), V,
                                      None if G is None else G.copy()))
    pool = getattr(gradient_step, "pool", None)
    if pool is not None:
        pool.shutdown()
    return Trajectory(mode=mode, params=params, n=n, p=p, beta=report.beta,
                      snapshots=snapshots, stats=stats, body=body, weights=w)


def run_continuous_dcg(local_gradients, body: FeasibleBody, w, params: RunParameters,
                       graph: CommGraph | None = None) -> Trajectory:
    """Decentralized continuous greedy with exact local gradients.

    ``local_gradients`` is either a list of per-node callables ``x -> grad``
    or a single callable mapping the ``(n, p)`` state matrix to the
    ``(n, p)`` matrix of local gradients.
    """
    n = np.asarray(w).shape[0]
    stacked = _stack(local_gradients, n, params.workers)

    def gradient_step(X, t):
        return stacked(X)
    gradient_step.pool = getattr(stacked, "pool", None)
    return _run("continuous", gradient_step, body, w, params, graph)


def node_rng(seed: int, node: int, t: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, node, round)."""
    return np.random.default_rng([int(seed), int(node), int(t)])


def run_discrete_dcg(local_functions, body: FeasibleBody, w, params: RunParameters,
                     gradient_mode: str = "sampled",
                     graph: CommGraph | None = None) -> Trajectory:
    """Discrete variant: local gradients are replaced by the running average
    g_i <- (1 - phi) g_i + phi * estimate.

    ``gradient_mode`` is ``"sampled"`` (``params.batch`` draws of the
    sampled estimator per round) or ``"exact-facility"`` (closed form,
    facility-location objectives only).
    """
    local_functions = list(local_functions)
    n = np.asarray(w).shape[0]
    if len(local_functions) != n:
        raise ValueError(f"need one set function per node ({n}), got {len(local_functions)}")
    if any(f.p != body.p for f in local_functions):
        raise ValueError("set functions and body disagree on dimension")

    if gradient_mode == "exact-facility":
        stacked = StackedFacility(local_functions)

        def gradient_step(X, t):
            return stacked(X)
        gradient_step.pool = None
    elif gradient_mode == "sampled":
        def one(i, X, t):
            rng = node_rng(params.seed, i, t)
            return stochastic_gradient(local_functions[i], X[i], params.batch, rng).g

        pool = ThreadPoolExecutor(params.workers) if params.workers > 1 else None

        def gradient_step(X, t):
            if pool is None:
                return np.array([one(i, X, t) for i in range(n)])
            return np.array(list(pool.map(lambda i: one(i, X, t), range(n))))
        gradient_step.pool = pool
    else:
        raise ValueError(f"unknown gradient mode {gradient_mode!r}")
    return _run("discrete", gradient_step, body, w, params, graph)


def exact_facility_oracle(local_functions) -> Callable:
    """Stacked closed-form gradient oracle for continuous runs on
    facility-location multilinear extensions."""
    return StackedFacility(local_functions)


def distance_to_average(X) -> float:
    X = np.asarray(X, dtype=float)
    return float(np.linalg.norm(X - X.mean(axis=0), axis=1).mean())


@dataclass
class SnapshotMetrics:
    t: np.ndarray
    distance_to_average: np.ndarray
    objective: np.ndarray | None   # (rounds, n) per-node values, if an oracle was given
    d_residual: np.ndarray


def snapshot_metrics(traj: Trajectory, value_oracle=None) -> SnapshotMetrics:
    """Consensus distance, per-node objective and d-consensus residual at
    every stored snapshot. ``value_oracle`` maps a point to F(x)."""
    if not traj.snapshots:
        raise ValueError("trajectory has no snapshots")
    ts = np.array([s.t for s in traj.snapshots])
    dist = np.array([distance_to_average(s.x) for s in traj.snapshots])
    dres = np.array([distance_to_average(s.d) for s in traj.snapshots])
    obj = None
    if value_oracle is not None:
        obj = np.array([[value_oracle(x) for x in s.x] for s in traj.snapshots])
    return SnapshotMetrics(ts, dist, obj, dres)


__all__ = [
    "RunParameters", "Snapshot", "RoundStats", "Trajectory", "Mixer",
    "run_continuous_dcg", "run_discrete_dcg", "exact_facility_oracle",
    "snapshot_metrics", "SnapshotMetrics", "distance_to_average", "node_rng",
    "feasible_rows",
]
