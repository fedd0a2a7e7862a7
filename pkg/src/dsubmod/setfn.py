"""Monotone submodular set functions on a ground set ``{0, ..., p-1}``.

Subsets are passed as any iterable of element indices (list, set, array) or
as a boolean mask of length ``p``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import sparse

EXHAUSTIVE_MAX = 14


def as_mask(s, p: int) -> np.ndarray:
    """Boolean membership mask for subset ``s`` of ``{0..p-1}``."""
    if isinstance(s, np.ndarray) and s.dtype == bool:
        if s.shape != (p,):
            raise ValueError(f"mask has shape {s.shape}, expected ({p},)")
        return s
    idx = np.fromiter((int(e) for e in s), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= p):
        raise IndexError(f"subset element out of range for ground set of size {p}")
    mask = np.zeros(p, dtype=bool)
    mask[idx] = True
    return mask


class SetObjective:
    """Base class: subclasses implement ``_value(mask)``."""

    p: int

    def _value(self, mask: np.ndarray) -> float:
        raise NotImplementedError

    def evaluate(self, s) -> float:
        return float(self._value(as_mask(s, self.p)))

    __call__ = evaluate

    def marginal(self, s, e: int) -> float:
        """f(s + e) - f(s); zero when ``e`` is already in ``s``."""
        if not 0 <= e < self.p:
            raise IndexError(f"element {e} out of range for ground set of size {self.p}")
        mask = as_mask(s, self.p)
        if mask[e]:
            return 0.0
        with_e = mask.copy()
        with_e[e] = True
        return float(self._value(with_e) - self._value(mask))

    @cached_property
    def max_marginal(self) -> float:
        """m_f = max_i f({i})."""
        return float(max(self.singleton_values()))

    def singleton_values(self) -> np.ndarray:
        out = np.empty(self.p)
        mask = np.zeros(self.p, dtype=bool)
        for i in range(self.p):
            mask[i] = True
            out[i] = self._value(mask)
            mask[i] = False
        return out

    def subset_table(self) -> np.ndarray:
        bits = ((np.arange(1 << self.p)[:, None] >> np.arange(self.p)) & 1).astype(bool)
        return np.array([self._value(row) for row in bits])

    def swap_differences(self, mask: np.ndarray) -> np.ndarray:
        """Vector with entries f(S + i) - f(S - i) for every element i."""
        mask = np.asarray(mask, dtype=bool)
        base = self._value(mask)
        out = np.empty(self.p)
        work = mask.copy()
        for i in range(self.p):
            if mask[i]:
                work[i] = False
                out[i] = base - self._value(work)
            else:
                work[i] = True
                out[i] = self._value(work) - base
            work[i] = mask[i]
        return out

    def swap_difference_sum(self, masks: np.ndarray) -> np.ndarray:
        """Sum of ``swap_differences`` over the rows of a boolean matrix."""
        total = np.zeros(self.p)
        for mask in np.asarray(masks, dtype=bool):
            total += self.swap_differences(mask)
        return total


class FunctionObjective(SetObjective):
    """Wrap a plain callable ``frozenset -> float``."""

    def __init__(self, fn: Callable[[frozenset], float], p: int):
        if p < 1:
            raise ValueError("ground set must be nonempty")
        self.fn = fn
        self.p = p

    def _value(self, mask):
        return float(self.fn(frozenset(np.flatnonzero(mask).tolist())))


class ModularObjective(SetObjective):
    """f(S) = sum of weights over S."""

    def __init__(self, weights):
        self.weights = np.asarray(weights, dtype=float)
        self.p = self.weights.size

    def _value(self, mask):
        return float(self.weights[mask].sum())

    def swap_differences(self, mask):
        return self.weights.copy()


class FacilityLocation(SetObjective):
    """f(S) = scale * sum_users max_{j in S} r[user, j], with max over {} = 0.

    Ratings must be nonnegative. Each user's ratings are also kept sorted in
    decreasing order (only the rated movies), which the multilinear closed
    form and the greedy baseline reuse.
    """

    def __init__(self, ratings, scale: float = 1.0):
        r = ratings.toarray() if sparse.issparse(ratings) else np.asarray(ratings, dtype=float)
        r = np.atleast_2d(np.asarray(r, dtype=float))
        if r.shape[0] == 0:
            raise ValueError("facility location needs at least one user")
        if r.shape[1] == 0:
            raise ValueError("ground set must be nonempty")
        if np.any(r < 0):
            raise ValueError("ratings must be nonnegative")
        self.ratings = r
        self.scale = float(scale)
        self.p = r.shape[1]

    def _value(self, mask):
        if not mask.any():
            return 0.0
        return self.scale * float(self.ratings[:, mask].max(axis=1).sum())

    def singleton_values(self):
        return self.scale * self.ratings.sum(axis=0)

    @cached_property
    def sorted_view(self):
        """(order, sorted_ratings): per-user movie indices by decreasing
        rating, truncated to the widest rated row; padding uses index p."""
        r = self.ratings
        width = max(1, int((r > 0).sum(axis=1).max()))
        order = np.argsort(-r, axis=1, kind="stable")[:, :width]
        vals = np.take_along_axis(r, order, axis=1)
        pad = vals <= 0
        order = np.where(pad, self.p, order)
        vals = np.where(pad, 0.0, vals)
        return order, vals

    def subset_table(self):
        total = np.zeros(1 << self.p)
        for row in self.ratings:
            best = np.zeros(1 << self.p)
            for j in range(self.p):
                lo = 1 << j
                best[lo:2 * lo] = np.maximum(best[:lo], row[j])
            total += best
        return self.scale * total

    def swap_differences(self, mask):
        mask = np.asarray(mask, dtype=bool)
        r = self.ratings
        if not mask.any():
            return self.scale * r.sum(axis=0)
        sub = np.where(mask, r, -np.inf)
        top_idx = np.argmax(sub, axis=1)
        rows = np.arange(r.shape[0])
        top = sub[rows, top_idx]
        sub[rows, top_idx] = -np.inf
        second = np.maximum(sub.max(axis=1), 0.0)
        # elements outside S: gain over the current best
        gain = np.maximum(r - top[:, None], 0.0)
        gain[:, mask] = 0.0
        # elements inside S: only the argmax matters when removed
        gain[rows, top_idx] = top - second
        return self.scale * gain.sum(axis=0)

    def swap_difference_sum(self, masks, chunk: int = 2048):
        masks = np.atleast_2d(np.asarray(masks, dtype=bool))
        r = self.ratings
        total = np.zeros(self.p)
        for start in range(0, masks.shape[0], chunk):
            m = masks[start:start + chunk]
            sub = np.where(m[:, None, :], r[None], -np.inf)
            top_idx = np.argmax(sub, axis=2)[..., None]
            top = np.take_along_axis(sub, top_idx, axis=2)
            np.put_along_axis(sub, top_idx, -np.inf, axis=2)
            second = np.maximum(sub.max(axis=2, keepdims=True), 0.0)
            empty = ~m.any(axis=1)[:, None, None]
            top = np.where(empty, 0.0, top)
            gain = np.maximum(r[None] - top, 0.0)
            gain = np.where(m[:, None, :], 0.0, gain)
            at_top = np.where(empty, np.take_along_axis(gain, top_idx, axis=2), top - second)
            np.put_along_axis(gain, top_idx, at_top, axis=2)
            total += gain.sum(axis=(0, 1))
        return self.scale * total


class SumObjective(SetObjective):
    """Scaled sum of set functions sharing a ground set."""

    def __init__(self, parts, scale: float = 1.0):
        parts = list(parts)
        if not parts:
            raise ValueError("need at least one component")
        p = parts[0].p
        if any(f.p != p for f in parts):
            raise ValueError("components disagree on ground set size")
        self.parts = parts
        self.scale = float(scale)
        self.p = p

    def _value(self, mask):
        return self.scale * float(sum(f._value(mask) for f in self.parts))

    def swap_differences(self, mask):
        return self.scale * sum(f.swap_differences(mask) for f in self.parts)


@dataclass
class RatingsMatrix:
    """Sparse user x movie ratings; missing ratings read as 0."""

    values: sparse.csr_matrix
    user_ids: list | None = None
    movie_ids: list | None = None

    def __post_init__(self):
        self.values = sparse.csr_matrix(self.values, dtype=float)
        if self.values.nnz and self.values.data.min() < 0:
            raise ValueError("ratings must be nonnegative")

    @property
    def n_users(self) -> int:
        return self.values.shape[0]

    @property
    def n_movies(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_dense(cls, r):
        return cls(sparse.csr_matrix(np.asarray(r, dtype=float)))

    def dense_rows(self, users) -> np.ndarray:
        return self.values[np.asarray(list(users), dtype=int)].toarray()


def facility_location(ratings: RatingsMatrix | np.ndarray, users=None,
                      scale: float = 1.0) -> FacilityLocation:
    """Facility-location objective restricted to ``users`` (all by default)."""
    if not isinstance(ratings, RatingsMatrix):
        ratings = RatingsMatrix.from_dense(np.atleast_2d(ratings))
    if users is None:
        users = range(ratings.n_users)
    users = list(users)
    if not users:
        raise ValueError("facility location needs a nonempty user set")
    return FacilityLocation(ratings.dense_rows(users), scale=scale)


@dataclass(frozen=True)
class NodePartition:
    chunks: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.chunks)

    def owner(self) -> dict[int, int]:
        return {u: i for i, chunk in enumerate(self.chunks) for u in chunk}


def partition_users(M: int, n: int, seed: int = 0) -> NodePartition:
    """Random permutation of users cut into n balanced contiguous chunks."""
    if n < 1:
        raise ValueError("need at least one node")
    if M < n:
        raise ValueError(f"cannot split {M} users across {n} nodes")
    perm = np.random.default_rng(seed).permutation(M)
    chunks = np.array_split(perm, n)
    return NodePartition(tuple(tuple(sorted(int(u) for u in c)) for c in chunks))


def node_objectives(ratings: RatingsMatrix, partition: NodePartition):
    """Per-node facility functions f_i and the global f = (1/n) sum_i f_i."""
    local = [facility_location(ratings, chunk) for chunk in partition.chunks]
    order = [u for chunk in partition.chunks for u in chunk]
    glob = facility_location(ratings, order, scale=1.0 / partition.n)
    return local, glob


@dataclass
class SubmodularityReport:
    monotone: bool
    submodular: bool
    witness: tuple | None = None

    @property
    def ok(self) -> bool:
        return self.monotone and self.submodular


def all_subset_values(f: SetObjective, max_p: int = 20) -> np.ndarray:
    """f evaluated on every subset, indexed by bitmask (bit j <-> element j)."""
    if f.p > max_p:
        raise ValueError(f"ground set of size {f.p} too large for enumeration (max {max_p})")
    return f.subset_table()


def check_monotone_submodular(f: SetObjective, tol: float = 1e-9) -> SubmodularityReport:
    """Exhaustive lattice checks; the witness is the first violating pair
    (A, B) as sorted tuples."""
    if f.p > EXHAUSTIVE_MAX:
        raise ValueError(f"exhaustive check limited to |V| <= {EXHAUSTIVE_MAX}")
    vals = all_subset_values(f, EXHAUSTIVE_MAX)
    size = 1 << f.p

    def members(m):
        return tuple(j for j in range(f.p) if m >> j & 1)

    masks = np.arange(size)
    witness = None
    monotone = True
    for j in range(f.p):
        without = masks[(masks >> j & 1) == 0]
        bad = np.flatnonzero(vals[without] > vals[without | (1 << j)] + tol)
        if bad.size:
            monotone = False
            a = int(without[bad[0]])
            witness = ("monotone", members(a), members(a | 1 << j))
            break
    # pairwise lattice inequality reduces to the local exchange form
    # f(S+i) + f(S+j) >= f(S+i+j) + f(S) for i != j outside S
    submodular = True
    for i, j in itertools.combinations(range(f.p), 2):
        base = masks[((masks >> i & 1) == 0) & ((masks >> j & 1) == 0)]
        si, sj = base | 1 << i, base | 1 << j
        lhs = vals[si] + vals[sj]
        rhs = vals[si | sj] + vals[base]
        bad = np.flatnonzero(lhs < rhs - tol)
        if bad.size:
            submodular = False
            k = bad[0]
            if witness is None:
                witness = ("submodular", members(int(si[k])), members(int(sj[k])))
            break
    return SubmodularityReport(monotone, submodular, witness)
