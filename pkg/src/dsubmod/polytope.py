"""Down-closed feasible bodies: uniform and partition matroid polytopes, boxes.

Each body offers the linear maximization oracle, a membership test and its
Euclidean diameter. ``contains`` works on float arrays and on object arrays
of ``fractions.Fraction`` (for exact replays).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

MEMBERSHIP_TOL = 1e-9


def _direction(d, p):
    d = np.asarray(d, dtype=float)
    if d.shape != (p,):
        raise ValueError(f"direction has shape {d.shape}, expected ({p},)")
    if not np.all(np.isfinite(d)):
        raise ValueError("direction must be finite")
    return d


def _top_positive(d, idx, cap):
    """Up to ``cap`` indices from ``idx`` with the largest strictly positive
    entries of d; ties go to the lower index."""
    sub = d[idx]
    ranked = np.argsort(-sub, kind="stable")[:cap]
    return idx[ranked[sub[ranked] > 0]]


def _check_len(x, p):
    if len(x) != p:
        raise ValueError(f"point has length {len(x)}, expected {p}")


def _is_float_array(x):
    return isinstance(x, np.ndarray) and x.dtype != object


class FeasibleBody:
    p: int
    kind: str

    def lmo(self, d) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def vertices(self):
        """Iterate over the vertex set (small p only)."""
        raise NotImplementedError

    def lmo_rows(self, D) -> np.ndarray:
        """Row-wise LMO for an ``(n, p)`` array of directions."""
        return np.array([self.lmo(d) for d in D])

    def contains_rows(self, X, tol: float = MEMBERSHIP_TOL) -> bool:
        return all(self.contains(x, tol) for x in X)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class UniformMatroid(FeasibleBody):
    """{x in [0,1]^p : sum(x) <= k}."""

    p: int
    k: int
    kind = "uniform"

    def __post_init__(self):
        if self.p < 1 or self.k < 0:
            raise ValueError(f"invalid uniform matroid p={self.p}, k={self.k}")

    def lmo(self, d):
        d = _direction(d, self.p)
        v = np.zeros(self.p)
        v[_top_positive(d, np.arange(self.p), self.k)] = 1.0
        return v

    def contains(self, x, tol=MEMBERSHIP_TOL):
        _check_len(x, self.p)
        if _is_float_array(x):
            return bool(np.all(x >= -tol) and np.all(x <= 1 + tol)
                        and x.sum() <= self.k + tol)
        if any(xj < -tol or xj > 1 + tol for xj in x):
            return False
        return sum(x) <= self.k + tol

    def lmo_rows(self, D):
        D = np.asarray(D, dtype=float)
        if D.ndim != 2 or D.shape[1] != self.p:
            raise ValueError(f"directions have shape {D.shape}, expected (n, {self.p})")
        if not np.all(np.isfinite(D)):
            raise ValueError("direction must be finite")
        ranked = np.argsort(-D, axis=1, kind="stable")[:, :self.k]
        top = np.take_along_axis(D, ranked, axis=1) > 0
        V = np.zeros_like(D)
        np.put_along_axis(V, ranked, top.astype(float), axis=1)
        return V

    def contains_rows(self, X, tol=MEMBERSHIP_TOL):
        X = np.asarray(X)
        if X.dtype == object:
            return super().contains_rows(X, tol)
        return bool(np.all(X >= -tol) and np.all(X <= 1 + tol)
                    and np.all(X.sum(axis=1) <= self.k + tol))

    def diameter(self):
        # two disjoint independent sets of sizes min(k, ...) as far apart as possible
        return math.sqrt(min(2 * self.k, self.p))

    def independent(self, s) -> bool:
        return len(set(s)) <= self.k

    def vertices(self):
        for r in range(min(self.k, self.p) + 1):
            for s in itertools.combinations(range(self.p), r):
                v = np.zeros(self.p)
                v[list(s)] = 1.0
                yield v

    def to_dict(self):
        return {"kind": "uniform", "p": self.p, "k": self.k}


@dataclass(frozen=True)
class PartitionMatroid(FeasibleBody):
    """Per-part sums bounded by caps; parts must partition {0..p-1}."""

    parts: tuple[tuple[int, ...], ...]
    caps: tuple[int, ...]
    kind = "partition"

    def __post_init__(self):
        if len(self.parts) != len(self.caps):
            raise ValueError("one cap per part required")
        flat = sorted(e for part in self.parts for e in part)
        if flat != list(range(len(flat))) or not flat:
            raise ValueError("parts must partition {0, ..., p-1}")
        if any(c < 0 for c in self.caps):
            raise ValueError("caps must be nonnegative")

    @classmethod
    def from_lists(cls, parts, caps):
        return cls(tuple(tuple(int(e) for e in part) for part in parts),
                   tuple(int(c) for c in caps))

    @property
    def p(self):
        return sum(len(part) for part in self.parts)

    def lmo(self, d):
        d = _direction(d, self.p)
        v = np.zeros(self.p)
        for part, cap in zip(self.parts, self.caps):
            v[_top_positive(d, np.array(part), cap)] = 1.0
        return v

    def contains(self, x, tol=MEMBERSHIP_TOL):
        _check_len(x, self.p)
        if _is_float_array(x):
            if not (np.all(x >= -tol) and np.all(x <= 1 + tol)):
                return False
            sums = np.bincount(self.part_of(), weights=x, minlength=len(self.parts))
            return bool(np.all(sums <= np.array(self.caps) + tol))
        if any(xj < -tol or xj > 1 + tol for xj in x):
            return False
        return all(sum(x[j] for j in part) <= cap + tol
                   for part, cap in zip(self.parts, self.caps))

    def diameter(self):
        return math.sqrt(sum(min(2 * cap, len(part))
                             for part, cap in zip(self.parts, self.caps)))

    def part_of(self) -> np.ndarray:
        owner = np.empty(self.p, dtype=int)
        for i, part in enumerate(self.parts):
            owner[list(part)] = i
        return owner

    def independent(self, s) -> bool:
        owner = self.part_of()
        counts = np.bincount(owner[list(set(s))], minlength=len(self.parts))
        return bool(np.all(counts <= np.array(self.caps)))

    def vertices(self):
        choices = []
        for part, cap in zip(self.parts, self.caps):
            opts = [c for r in range(min(cap, len(part)) + 1)
                    for c in itertools.combinations(part, r)]
            choices.append(opts)
        for combo in itertools.product(*choices):
            v = np.zeros(self.p)
            for c in combo:
                v[list(c)] = 1.0
            yield v

    def to_dict(self):
        return {"kind": "partition", "parts": [list(pt) for pt in self.parts],
                "caps": list(self.caps)}


@dataclass(frozen=True)
class Box(FeasibleBody):
    """{0 <= x <= u} with u in (0, 1]^p."""

    upper: tuple[float, ...]
    kind = "box"

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(float(u) for u in self.upper))
        if not self.upper or any(not 0 < u <= 1 for u in self.upper):
            raise ValueError("box upper bounds must lie in (0, 1]")

    @classmethod
    def unit(cls, p):
        return cls(tuple([1.0] * p))

    @property
    def p(self):
        return len(self.upper)

    def lmo(self, d):
        d = _direction(d, self.p)
        u = np.array(self.upper)
        return np.where(d > 0, u, 0.0)

    def contains(self, x, tol=MEMBERSHIP_TOL):
        _check_len(x, self.p)
        if _is_float_array(x):
            return bool(np.all(x >= -tol) and np.all(x <= np.array(self.upper) + tol))
        return all(-tol <= xj <= uj + tol for xj, uj in zip(x, self.upper))

    def diameter(self):
        return float(np.linalg.norm(self.upper))

    def vertices(self):
        u = np.array(self.upper)
        for bits in itertools.product((0.0, 1.0), repeat=self.p):
            yield np.array(bits) * u

    def to_dict(self):
        return {"kind": "box", "upper": list(self.upper)}


def body_from_dict(spec: dict, p: int | None = None) -> FeasibleBody:
    kind = spec.get("kind", "uniform")
    if kind == "uniform":
        return UniformMatroid(int(spec.get("p", p)), int(spec["k"]))
    if kind == "partition":
        return PartitionMatroid.from_lists(spec["parts"], spec["caps"])
    if kind == "box":
        upper = spec.get("upper")
        return Box(tuple(upper)) if upper is not None else Box.unit(int(spec.get("p", p)))
    raise ValueError(f"unknown body kind {kind!r}")


def brute_force_diameter(body: FeasibleBody) -> float:
    verts = np.array(list(body.vertices()))
    diff = verts[:, None, :] - verts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=2).max()))


def indicator(s, p: int) -> np.ndarray:
    v = np.zeros(p)
    v[list(s)] = 1.0
    return v
