"""Ratings ingestion (MovieLens-style files) and a synthetic generator."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from scipy import sparse

from .setfn import RatingsMatrix

MAX_RATING = 5.0
_SPLIT = re.compile(r"::|,|\s+")


class RatingsFormatError(ValueError):
    pass


def _is_number(tok):
    try:
        float(tok)
    except ValueError:
        return False
    return True


def load_ratings(path) -> RatingsMatrix:
    """Parse ``user::movie::rating[::timestamp]`` lines, or whitespace /
    comma separated triples (a trailing timestamp column is ignored).

    User and movie ids are remapped to dense 0-based indices in increasing
    id order. A repeated (user, movie) pair keeps the last rating. Blank
    lines, ``#`` comments and a leading non-numeric header row are skipped.
    """
    path = Path(path)
    entries = {}
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            toks = [t for t in _SPLIT.split(line) if t]
            if lineno == 1 and toks and not any(_is_number(t) for t in toks):
                continue
            if len(toks) not in (3, 4):
                raise RatingsFormatError(f"{path}:{lineno}: expected 3 or 4 fields, got {raw!r}")
            try:
                user, movie = int(toks[0]), int(toks[1])
                rating = float(toks[2])
            except ValueError:
                raise RatingsFormatError(f"{path}:{lineno}: cannot parse {raw!r}") from None
            if not 0.0 <= rating <= MAX_RATING:
                raise RatingsFormatError(
                    f"{path}:{lineno}: rating {rating} outside [0, {MAX_RATING:g}]")
            entries[(user, movie)] = rating
    if not entries:
        raise RatingsFormatError(f"{path}: no ratings found")
    user_ids = sorted({u for u, _ in entries})
    movie_ids = sorted({m for _, m in entries})
    urow = {u: i for i, u in enumerate(user_ids)}
    mcol = {m: j for j, m in enumerate(movie_ids)}
    rows = np.fromiter((urow[u] for u, _ in entries), dtype=int, count=len(entries))
    cols = np.fromiter((mcol[m] for _, m in entries), dtype=int, count=len(entries))
    vals = np.fromiter(entries.values(), dtype=float, count=len(entries))
    mat = sparse.csr_matrix((vals, (rows, cols)), shape=(len(user_ids), len(movie_ids)))
    return RatingsMatrix(mat, user_ids=user_ids, movie_ids=movie_ids)


def generate_synthetic(M: int, p: int, density: float = 0.1,
                       rating_range=(1, 5), seed: int = 0) -> RatingsMatrix:
    """Each (user, movie) pair is rated with probability ``density``; the
    rating is a uniform integer in ``rating_range`` (inclusive)."""
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    lo, hi = (int(v) for v in rating_range)
    if not 0 <= lo <= hi:
        raise ValueError(f"invalid rating range {rating_range}")
    if M < 1 or p < 1:
        raise ValueError("need at least one user and one movie")
    rng = np.random.default_rng(seed)
    rated = rng.random((M, p)) < density
    scores = rng.integers(lo, hi + 1, size=(M, p)).astype(float)
    return RatingsMatrix(sparse.csr_matrix(np.where(rated, scores, 0.0)))
