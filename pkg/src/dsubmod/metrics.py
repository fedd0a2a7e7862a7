"""Worst-case smoothness constants and per-round consensus bound checks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .engine import Trajectory
from .polytope import FeasibleBody

REL_TOL = 1e-12
ABS_TOL = 1e-14


@dataclass
class TheoryBounds:
    """G, L, sigma bound gradient norm, gradient Lipschitz constant and
    estimator spread; K = sqrt(sigma^2 + G^2); C = 1 + 2/(1 - beta)^2."""

    G: float
    L: float
    D: float
    sigma: float
    beta: float
    m_f: float = 0.0

    @property
    def K(self) -> float:
        return math.sqrt(self.sigma ** 2 + self.G ** 2)

    @property
    def C(self) -> float:
        if self.beta >= 1.0:
            return math.inf
        return 1.0 + 2.0 / (1.0 - self.beta) ** 2

    def to_dict(self):
        out = asdict(self)
        out.update(K=self.K, C=self.C)
        return out


def theory_constants(set_functions, body: FeasibleBody, beta) -> TheoryBounds:
    """Bounds for multilinear extensions: G = L = sigma = m_f * sqrt(|V|),
    with m_f the largest singleton value over all node functions.

    ``beta`` may be a number or anything with a ``beta`` attribute.
    """
    set_functions = list(set_functions)
    beta = float(getattr(beta, "beta", beta))
    m_f = max((f.max_marginal for f in set_functions), default=0.0)
    m_f = max(m_f, 0.0)
    bound = m_f * math.sqrt(body.p)
    return TheoryBounds(G=bound, L=bound, D=body.diameter(), sigma=bound, beta=beta, m_f=m_f)


@dataclass
class LemmaCheck:
    name: str
    rounds: np.ndarray = field(repr=False)
    lhs: np.ndarray = field(repr=False)
    bound: np.ndarray = field(repr=False)

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(self.bound > 0, self.lhs / self.bound,
                         np.where(self.lhs > ABS_TOL, np.inf, 0.0))
        return np.where(np.isinf(self.bound), 0.0, r)

    @property
    def violations(self) -> np.ndarray:
        return self.rounds[self.lhs > self.bound * (1.0 + REL_TOL) + ABS_TOL]

    @property
    def max_ratio(self) -> float:
        return float(self.ratio.max()) if self.ratio.size else 0.0

    def summary(self):
        v = self.violations
        return {"max_ratio": self.max_ratio, "violations": int(v.size),
                "first_violation": int(v[0]) if v.size else None}


@dataclass
class LemmaReport:
    mode: str
    checks: dict[str, LemmaCheck]
    skipped: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.violations.size == 0 for c in self.checks.values())

    def ratio_at(self, name, t) -> float:
        c = self.checks.get(name)
        if c is None:
            return float("nan")
        hit = np.flatnonzero(c.rounds == t)
        return float(c.ratio[hit[0]]) if hit.size else float("nan")

    def to_dict(self):
        return {"mode": self.mode, "ok": self.ok, "skipped": list(self.skipped),
                "lemmas": {k: c.summary() for k, c in self.checks.items()}}


def check_lemma_bounds(traj: Trajectory, bounds: TheoryBounds,
                       global_gradient=None) -> LemmaReport:
    """Evaluate the consensus and tracking inequalities at every round.

    Continuous runs: average-step bound, x-consensus bound, d-consensus bound
    with G, and (when ``global_gradient`` maps x to (1/n) sum_i grad F_i(x))
    the gradient-tracking bound. Discrete runs: the first two plus the mean
    d-consensus bound with K in place of G.

    Works from the per-round statistics the engine always records, so the
    snapshot stride does not matter.
    """
    st = traj.stats
    T, n = traj.T, traj.n
    alpha = traj.params.alpha
    beta = bounds.beta
    D, G, L = bounds.D, bounds.G, bounds.L
    gap = 1.0 - beta
    rounds = np.arange(1, T + 1)
    checks = {}
    skipped = []

    step = np.linalg.norm(st.x_bar[1:] - st.x_bar[:-1], axis=1)
    checks["lemma1"] = LemmaCheck("lemma1", rounds, step, np.full(T, D / T))

    x_bound = math.sqrt(n) * D / (T * gap) if gap > 0 else math.inf
    all_rounds = np.arange(0, T + 1)
    checks["lemma2"] = LemmaCheck("lemma2", all_rounds, st.x_dev, np.full(T + 1, x_bound))

    denom = 1.0 - beta * (1.0 - alpha)
    if traj.mode == "continuous":
        d_bound = alpha * math.sqrt(n) * G / denom if denom > 0 else math.inf
        checks["lemma3"] = LemmaCheck("lemma3", rounds, st.d_dev[1:], np.full(T, d_bound))
        if global_gradient is None:
            skipped.append("lemma4")
        else:
            # round t queries gradients at the average after t - 1 steps
            err = np.array([np.linalg.norm(st.d_bar[t] - global_gradient(st.x_bar[t - 1]))
                            for t in rounds])
            if alpha > 0 and gap > 0:
                tail = (1.0 - alpha) * L * D / (alpha * T) + L * D / (T * gap)
                b4 = (1.0 - alpha) ** rounds * G + tail
            else:
                b4 = np.full(T, math.inf)
            checks["lemma4"] = LemmaCheck("lemma4", rounds, err, b4)
    else:
        k_bound = alpha * bounds.K / denom if denom > 0 else math.inf
        checks["lemma6"] = LemmaCheck("lemma6", rounds, st.d_mean_dev[1:],
                                      np.full(T, k_bound))
    return LemmaReport(traj.mode, checks, skipped)
