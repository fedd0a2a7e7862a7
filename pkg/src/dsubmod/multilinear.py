"""Multilinear extension F(x) = E[f(S)], S containing each j w.p. x_j.

Three routes to F and its gradient:

* exact enumeration over all 2^p subsets (small p only),
* the sampled estimator f(S + i) - f(S - i) with one shared S per draw,
* a closed form for facility location: with a user's movies sorted by
  decreasing rating, the user contributes sum_k r_(k) x_(k) prod_{k'<k} (1 - x_(k')).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .setfn import FacilityLocation, SetObjective

ENUM_MAX = 20
CUBE_TOL = 1e-9


def check_point(x, p: int) -> np.ndarray:
    """Validate a point of [0, 1]^p; float drift up to CUBE_TOL is clipped."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p,):
        raise ValueError(f"point has shape {x.shape}, expected ({p},)")
    if not np.all(np.isfinite(x)) or np.any(x < -CUBE_TOL) or np.any(x > 1 + CUBE_TOL):
        raise ValueError("coordinates must lie in [0, 1]")
    return np.clip(x, 0.0, 1.0)


def _bit_matrix(p):
    return ((np.arange(1 << p)[:, None] >> np.arange(p)) & 1).astype(bool)


def _subset_probs(x, bits):
    return np.where(bits, x, 1.0 - x).prod(axis=1)


def exact_multilinear(f: SetObjective, x) -> float:
    if f.p > ENUM_MAX:
        raise ValueError(f"enumeration limited to |V| <= {ENUM_MAX}, got {f.p}")
    x = check_point(x, f.p)
    table = f.subset_table()
    return float(table @ _subset_probs(x, _bit_matrix(f.p)))


def exact_gradient(f: SetObjective, x) -> np.ndarray:
    """dF/dx_i = F(x; x_i <- 1) - F(x; x_i <- 0), by enumeration."""
    if f.p > ENUM_MAX:
        raise ValueError(f"enumeration limited to |V| <= {ENUM_MAX}, got {f.p}")
    x = check_point(x, f.p)
    table = f.subset_table()
    bits = _bit_matrix(f.p)
    grad = np.empty(f.p)
    for i in range(f.p):
        hi, lo = x.copy(), x.copy()
        hi[i], lo[i] = 1.0, 0.0
        grad[i] = table @ _subset_probs(hi, bits) - table @ _subset_probs(lo, bits)
    return grad


@dataclass
class GradientEstimate:
    g: np.ndarray
    batch: int
    seed: object = None


def stochastic_gradient(f: SetObjective, x, batch: int = 1, rng=None) -> GradientEstimate:
    """Average of ``batch`` draws of f(S + i) - f(S - i), one S per draw."""
    if batch < 1:
        raise ValueError("batch size must be >= 1")
    x = check_point(x, f.p)
    seed = rng if not isinstance(rng, np.random.Generator) else None
    rng = np.random.default_rng(rng)
    total = f.swap_difference_sum(rng.random((batch, f.p)) < x)
    return GradientEstimate(total / batch, batch, seed)


def _facility_value_terms(order, vals, xs_full):
    xs = np.take_along_axis(xs_full, order, axis=1)
    prefix = np.ones_like(xs)
    if order.shape[1] > 1:
        np.cumprod(1.0 - xs[:, :-1], axis=1, out=prefix[:, 1:])
    return (vals * xs * prefix).sum(axis=1)


def _facility_terms(order, vals, xs_full):
    """Per-user value and sorted-position gradient for the closed form.

    ``xs_full`` holds each user's point with an extra trailing 0 column so
    padded positions (index p) read x = 0.
    """
    xs = np.take_along_axis(xs_full, order, axis=1)
    keep = 1.0 - xs
    width = order.shape[1]
    # prefix[:, m] = prod_{k<m} (1 - x_(k))
    prefix = np.ones_like(xs)
    if width > 1:
        np.cumprod(keep[:, :-1], axis=1, out=prefix[:, 1:])
    value = (vals * xs * prefix).sum(axis=1)
    # tail[:, m] = expected best among positions > m given none of <= m chosen
    tail = np.zeros_like(xs)
    for m in range(width - 1, 0, -1):
        tail[:, m - 1] = vals[:, m] * xs[:, m] + keep[:, m] * tail[:, m]
    grad_sorted = prefix * (vals - tail)
    return value, grad_sorted


def facility_closed_form(f: FacilityLocation, x) -> tuple[float, np.ndarray]:
    """Exact (F(x), grad F(x)) for a facility-location objective."""
    x = check_point(x, f.p)
    order, vals = f.sorted_view
    users = order.shape[0]
    xs_full = np.broadcast_to(np.append(x, 0.0), (users, f.p + 1))
    value, grad_sorted = _facility_terms(order, vals, xs_full)
    grad = np.zeros(f.p + 1)
    np.add.at(grad, order.ravel(), grad_sorted.ravel())
    return f.scale * float(value.sum()), f.scale * grad[:f.p]


def facility_values(f: FacilityLocation, X) -> np.ndarray:
    """F at every row of an ``(m, p)`` array, one vectorized pass."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != f.p:
        raise ValueError(f"points have {X.shape[1]} coordinates, expected {f.p}")
    order, vals = f.sorted_view
    users, m = order.shape[0], X.shape[0]
    xs_full = np.repeat(np.hstack([X, np.zeros((m, 1))]), users, axis=0)
    if m == 1:
        value = _facility_value_terms(order, vals, xs_full)
    else:
        value = _facility_value_terms(np.tile(order, (m, 1)), np.tile(vals, (m, 1)), xs_full)
    return f.scale * value.reshape(m, users).sum(axis=1)


class StackedFacility:
    """Closed-form values and gradients for one facility objective per node,
    evaluated for all nodes in a single vectorized pass.

    Calling the instance with an ``(n, p)`` array returns the ``(n, p)``
    array of local gradients.
    """

    def __init__(self, objectives):
        objectives = list(objectives)
        if not objectives:
            raise ValueError("need at least one node objective")
        p = objectives[0].p
        if any(f.p != p for f in objectives):
            raise ValueError("node objectives disagree on ground set size")
        self.p = p
        self.n = len(objectives)
        width = max(f.sorted_view[0].shape[1] for f in objectives)
        orders, vals, owner, scales = [], [], [], []
        for i, f in enumerate(objectives):
            o, v = f.sorted_view
            pad = width - o.shape[1]
            orders.append(np.pad(o, ((0, 0), (0, pad)), constant_values=p))
            vals.append(np.pad(v, ((0, 0), (0, pad))))
            owner.append(np.full(o.shape[0], i))
            scales.append(np.full(o.shape[0], f.scale))
        self.order = np.vstack(orders)
        self.vals = np.vstack(vals)
        self.owner = np.concatenate(owner)
        self.user_scale = np.concatenate(scales)
        counts = np.bincount(self.owner, minlength=self.n)
        self.starts = np.concatenate([[0], np.cumsum(counts)[:-1]])

    def _terms(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape != (self.n, self.p):
            raise ValueError(f"expected points of shape {(self.n, self.p)}, got {X.shape}")
        xs_full = np.hstack([X, np.zeros((self.n, 1))])[self.owner]
        return _facility_terms(self.order, self.vals, xs_full)

    def values(self, X) -> np.ndarray:
        value, _ = self._terms(X)
        return np.add.reduceat(value * self.user_scale, self.starts)

    def gradients(self, X) -> np.ndarray:
        _, grad_sorted = self._terms(X)
        dense = np.zeros((self.order.shape[0], self.p + 1))
        np.put_along_axis(dense, self.order, grad_sorted * self.user_scale[:, None], axis=1)
        # padding slots all write to column p; it is dropped below
        return np.add.reduceat(dense, self.starts, axis=0)[:, :self.p]

    __call__ = gradients


def facility_value_oracle(f: FacilityLocation):
    """x -> F(x) via the closed form."""
    def value(x):
        return float(facility_values(f, check_point(x, f.p))[0])
    return value


def facility_gradient_oracle(f: FacilityLocation):
    def grad(x):
        return facility_closed_form(f, x)[1]
    return grad


def sampled_value_oracle(f: SetObjective, samples: int = 2048, seed=0):
    """Monte Carlo F(x) with common random numbers shared across calls."""
    u = np.random.default_rng(seed).random((samples, f.p))

    def value(x):
        x = np.asarray(x, dtype=float)
        return float(np.mean([f._value(row) for row in u < x]))
    return value
