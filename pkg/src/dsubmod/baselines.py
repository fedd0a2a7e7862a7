"""Centralized references: (lazy) greedy and continuous greedy."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .polytope import FeasibleBody, PartitionMatroid, UniformMatroid
from .setfn import SetObjective


@dataclass
class GreedyResult:
    selected: tuple[int, ...]
    value: float
    gains: list[float]


def _capacity(body, p):
    if isinstance(body, UniformMatroid):
        return np.zeros(p, dtype=int), [body.k]
    if isinstance(body, PartitionMatroid):
        return body.part_of(), list(body.caps)
    raise TypeError(f"greedy needs a uniform or partition matroid, got {type(body).__name__}")


def centralized_greedy(f: SetObjective, body: FeasibleBody, lazy: bool = True) -> GreedyResult:
    """Greedy by largest marginal gain, ties to the lowest index.

    Only elements with a positive singleton value are candidates (for a
    submodular f the others never gain anything). Zero-gain candidates are
    still taken while capacity remains, so with k >= p the result is every
    candidate. The lazy variant keeps stale gains in a heap as upper bounds
    and only commits an element whose gain was refreshed in the current
    iteration, which returns the same set as the plain scan.
    """
    owner, caps = _capacity(body, f.p)
    left = list(caps)
    mask = np.zeros(f.p, dtype=bool)
    value = f._value(mask)
    singles = f.singleton_values() - value
    candidates = [e for e in range(f.p) if singles[e] > 0]
    gains = []
    if not lazy:
        while True:
            best, best_gain = -1, -np.inf
            for e in candidates:
                if mask[e] or left[owner[e]] <= 0:
                    continue
                mask[e] = True
                gain = f._value(mask) - value
                mask[e] = False
                if gain > best_gain:
                    best, best_gain = e, gain
            if best < 0 or best_gain < 0:
                break
            mask[best] = True
            left[owner[best]] -= 1
            value = f._value(mask)
            gains.append(float(best_gain))
        return GreedyResult(tuple(np.flatnonzero(mask).tolist()), float(value), gains)

    heap = [(-float(singles[e]), e, 0) for e in candidates]
    heapq.heapify(heap)
    rnd = 0
    while heap:
        neg, e, stamp = heapq.heappop(heap)
        if left[owner[e]] <= 0:
            continue
        if stamp == rnd:
            if -neg < 0:
                break
            mask[e] = True
            left[owner[e]] -= 1
            value = f._value(mask)
            gains.append(-neg)
            rnd += 1
            continue
        mask[e] = True
        gain = f._value(mask) - value
        mask[e] = False
        heapq.heappush(heap, (-gain, e, rnd))
    return GreedyResult(tuple(np.flatnonzero(mask).tolist()), float(value), gains)


def brute_force_optimum(f: SetObjective, body: FeasibleBody, max_p: int = 12):
    """Best independent set by enumeration; returns (set, value, count)."""
    if f.p > max_p:
        raise ValueError(f"brute force limited to p <= {max_p}")
    best, best_val, count = (), f.evaluate(()), 0
    for v in body.vertices():
        count += 1
        s = tuple(np.flatnonzero(v).tolist())
        val = f.evaluate(s)
        if val > best_val:
            best, best_val = s, val
    return best, float(best_val), count


def centralized_continuous_greedy(gradient_oracle, body: FeasibleBody, T: int,
                                  return_path: bool = False):
    """x <- x + (1/T) lmo(grad F(x)), T times from x = 0."""
    if T < 1:
        raise ValueError("T must be >= 1")
    step = 1.0 / T
    x = np.zeros(body.p)
    path = [x]
    for _ in range(T):
        g = np.asarray(gradient_oracle(x), dtype=float)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
        x = x + step * body.lmo(g)
        path.append(x)
    return (x, path) if return_path else x


def independent_sets(body: FeasibleBody):
    for v in body.vertices():
        yield tuple(np.flatnonzero(v).tolist())


__all__ = ["GreedyResult", "centralized_greedy", "brute_force_optimum",
           "centralized_continuous_greedy", "independent_sets"]
