"""Rounding fractional matroid-polytope points to independent sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .polytope import MEMBERSHIP_TOL, PartitionMatroid, UniformMatroid
from .setfn import SetObjective

# coordinates this close to 0 or 1 are treated as integral
SNAP_TOL = 1e-12


@dataclass
class RoundingResult:
    selected: tuple[int, ...]
    fractional_value: float
    value: float
    method: str
    steps: int
    trace: list[float] = field(default_factory=list)


def _groups(body):
    """(member index arrays, caps) describing the matroid's capacity groups."""
    if isinstance(body, UniformMatroid):
        return [np.arange(body.p)], [body.k]
    if isinstance(body, PartitionMatroid):
        return [np.array(part) for part in body.parts], list(body.caps)
    raise TypeError(f"rounding needs a uniform or partition matroid, got {type(body).__name__}")


def _is_frac(v):
    return SNAP_TOL < v < 1.0 - SNAP_TOL


def _checked_value(oracle, x):
    val = float(oracle(x))
    if not np.isfinite(val):
        raise FloatingPointError("value oracle returned a non-finite value")
    return val


def pipage_round(x, body, value_oracle, set_function: SetObjective | None = None,
                 method: str = "pipage") -> RoundingResult:
    """Pipage rounding against a value oracle x -> F(x).

    Within each capacity group the lowest-index pair of fractional
    coordinates is moved along e_i - e_j to whichever boundary endpoint has
    the larger oracle value (F is convex along such directions, so the
    better endpoint never loses value). A lone fractional coordinate in a
    group is pushed to 0 or 1, up only if the cap allows. Each step makes at
    least one coordinate integral.
    """
    x = np.array(x, dtype=float)
    if not body.contains(x, MEMBERSHIP_TOL):
        raise ValueError("input point is not in the feasible body")
    groups, caps = _groups(body)
    start_value = _checked_value(value_oracle, x)
    x[x <= SNAP_TOL] = 0.0
    x[x >= 1.0 - SNAP_TOL] = 1.0
    current = _checked_value(value_oracle, x)
    trace = [current]
    steps = 0
    for members, cap in zip(groups, caps):
        while True:
            frac = [int(j) for j in members if _is_frac(x[j])]
            if not frac:
                break
            if len(frac) >= 2:
                i, j = frac[0], frac[1]
                up = min(1.0 - x[i], x[j])     # x_i up, x_j down
                down = min(x[i], 1.0 - x[j])   # x_i down, x_j up
                total = x[i] + x[j]
                a, b = x.copy(), x.copy()
                if up == 1.0 - x[i]:
                    a[i], a[j] = 1.0, total - 1.0
                else:
                    a[i], a[j] = total, 0.0
                if down == x[i]:
                    b[i], b[j] = 0.0, total
                else:
                    b[i], b[j] = total - 1.0, 1.0
                candidates = [a, b]
            else:
                i = frac[0]
                ones = int(np.sum(x[members] == 1.0))
                lo = x.copy()
                lo[i] = 0.0
                candidates = [lo]
                if ones + 1 <= cap:
                    hi = x.copy()
                    hi[i] = 1.0
                    candidates.insert(0, hi)
            # snap float residue created by total - 1.0 and friends
            for c in candidates:
                c[np.abs(c) <= SNAP_TOL] = 0.0
                c[np.abs(c - 1.0) <= SNAP_TOL] = 1.0
            values = [_checked_value(value_oracle, c) for c in candidates]
            best = int(np.argmax(values))
            x = candidates[best]
            current = values[best]
            trace.append(current)
            steps += 1
    selected = tuple(int(j) for j in np.flatnonzero(x == 1.0))
    value = set_function.evaluate(selected) if set_function is not None else current
    return RoundingResult(selected, start_value, float(value), method, steps, trace)


def randomized_round(x, body, f: SetObjective, trials: int = 16, rng=None,
                     value_oracle=None) -> RoundingResult:
    """Best of ``trials`` independent samples, each repaired to
    independence by repeatedly dropping the element whose removal loses the
    least value from an overfull group."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    x = np.asarray(x, dtype=float)
    if not body.contains(x, MEMBERSHIP_TOL):
        raise ValueError("input point is not in the feasible body")
    rng = np.random.default_rng(rng)
    groups, caps = _groups(body)
    best_set, best_val = (), -np.inf
    for _ in range(trials):
        mask = rng.random(body.p) < x
        for members, cap in zip(groups, caps):
            while mask[members].sum() > cap:
                chosen = members[mask[members]]
                base = f._value(mask)
                losses = []
                for e in chosen:
                    mask[e] = False
                    losses.append(base - f._value(mask))
                    mask[e] = True
                mask[chosen[int(np.argmin(losses))]] = False
        val = f._value(mask)
        if val > best_val:
            best_set, best_val = tuple(int(j) for j in np.flatnonzero(mask)), val
    frac = float(value_oracle(x)) if value_oracle is not None else float("nan")
    return RoundingResult(best_set, frac, float(best_val), "randomized", trials)
