"""Communication graphs, Metropolis mixing matrices and their spectra."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

STOCHASTIC_TOL = 1e-12
SYMMETRY_TOL = 1e-9
# lambda_2 must sit this far below 1 for null(I - W) to be one-dimensional
EIGEN_GAP_TOL = 1e-10
ER_MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class CommGraph:
    """Undirected simple graph on nodes ``0..n-1``."""

    n: int
    edges: frozenset[tuple[int, int]]
    kind: str = "custom"
    attempts: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")
            if i > j:
                raise ValueError(f"edge ({i}, {j}) not normalized as (min, max)")

    @classmethod
    def from_edges(cls, n, edges, kind="custom", attempts=1):
        normalized = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            normalized.add((min(i, j), max(i, j)))
        return cls(n=n, edges=frozenset(normalized), kind=kind, attempts=attempts)

    @property
    def adjacency(self) -> list[list[int]]:
        nbrs = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return [sorted(a) for a in nbrs]

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def is_connected(self) -> bool:
        return _count_components(self.n, self.edges) == 1

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


def _count_components(n, edges):
    if n == 1:
        return 1
    if not edges:
        return n
    rows, cols = zip(*edges)
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    count, _ = connected_components(adj, directed=False)
    return count


def erdos_renyi_prob(n: int, avg_degree: float) -> float:
    """Edge probability giving the requested expected degree."""
    if n <= 1:
        return 0.0
    return min(1.0, avg_degree / (n - 1))


def build_graph(kind: str, n: int, *, edge_prob: float | None = None,
                avg_degree: float | None = None, edges=None, seed: int = 0) -> CommGraph:
    """Build a ``line``, ``complete``, ``erdos_renyi`` or ``custom`` graph.

    Erdos-Renyi graphs are resampled from the seeded stream until connected;
    the number of draws is kept on ``CommGraph.attempts``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind == "line":
        return CommGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)], kind="line")
    if kind == "complete":
        return CommGraph.from_edges(
            n, [(i, j) for i in range(n) for j in range(i + 1, n)], kind="complete")
    if kind in ("erdos_renyi", "er"):
        if edge_prob is None:
            if avg_degree is None:
                raise ValueError("erdos_renyi needs edge_prob or avg_degree")
            edge_prob = erdos_renyi_prob(n, avg_degree)
        if not 0.0 <= edge_prob <= 1.0:
            raise ValueError(f"edge_prob must lie in [0, 1], got {edge_prob}")
        rng = np.random.default_rng(seed)
        iu, ju = np.triu_indices(n, k=1)
        for attempt in range(1, ER_MAX_ATTEMPTS + 1):
            keep = rng.random(iu.size) < edge_prob
            g = CommGraph.from_edges(n, zip(iu[keep], ju[keep]), kind="erdos_renyi",
                                     attempts=attempt)
            if g.is_connected():
                return g
        raise RuntimeError(
            f"no connected Erdos-Renyi graph (n={n}, p={edge_prob}) "
            f"after {ER_MAX_ATTEMPTS} attempts")
    if kind == "custom":
        if edges is None:
            raise ValueError("custom graph needs an edge list")
        return CommGraph.from_edges(n, edges, kind="custom")
    raise ValueError(f"unknown graph kind {kind!r}")


def load_edge_list(path) -> CommGraph:
    """Read ``i j`` pairs (0-indexed, ``#`` comments) into a graph.

    The node count is one more than the largest index mentioned; a line
    ``# nodes: N`` overrides it so isolated trailing nodes can be declared.
    """
    edges = []
    n_declared = None
    max_node = -1
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("nodes:"):
                n_declared = int(body.split(":", 1)[1])
            continue
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'i j', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-integer node in {raw!r}") from None
        if i < 0 or j < 0:
            raise ValueError(f"{path}:{lineno}: negative node index")
        edges.append((i, j))
        max_node = max(max_node, i, j)
    n = n_declared if n_declared is not None else max_node + 1
    if n < 1:
        raise ValueError(f"{path}: no nodes found")
    return CommGraph.from_edges(n, edges, kind="custom")


def metropolis_weights(g: CommGraph) -> np.ndarray:
    """w_ij = 1/(1 + max(d_i, d_j)) on edges, remainder on the diagonal."""
    deg = g.degrees
    w = np.zeros((g.n, g.n))
    for i, j in g.edges:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    # diagonal from the row sum without the (zero) diagonal term
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return w


@dataclass
class SpectralReport:
    beta: float
    lambda_min: float
    connected: bool
    assumption1_holds: bool
    eigenvalues: np.ndarray = field(repr=False)
    issues: list[str] = field(default_factory=list)

    @property
    def spectral_gap(self) -> float:
        return 1.0 - self.beta

    def to_dict(self):
        return {
            "beta": float(self.beta),
            "lambda_min": float(self.lambda_min),
            "connected": bool(self.connected),
            "assumption1_holds": bool(self.assumption1_holds),
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "issues": list(self.issues),
        }


def _support_connected(w):
    n = w.shape[0]
    rows, cols = np.nonzero(np.triu(w, k=1) != 0)
    return _count_components(n, set(zip(rows.tolist(), cols.tolist()))) == 1


def spectral_beta(w) -> SpectralReport:
    """Second-largest eigenvalue magnitude of a symmetric mixing matrix.

    Eigenvalues come back sorted nonincreasing. For a single node there is no
    second eigenvalue and beta is reported as 0.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"weight matrix must be square, got shape {w.shape}")
    asym = np.max(np.abs(w - w.T)) if w.size else 0.0
    if asym > SYMMETRY_TOL:
        raise ValueError(f"weight matrix is not symmetric (max |W - W^T| = {asym:.3g})")
    eig = np.linalg.eigvalsh((w + w.T) / 2.0)[::-1]
    if eig.size > 1:
        beta = max(abs(eig[1]), abs(eig[-1]))
    else:
        beta = 0.0
    connected = _support_connected(w)
    holds = bool(eig.size == 1 or eig[1] < 1.0 - EIGEN_GAP_TOL)
    return SpectralReport(beta=float(beta), lambda_min=float(eig[-1]), connected=connected,
                          assumption1_holds=holds, eigenvalues=eig)


def validate_weights(w, g: CommGraph) -> SpectralReport:
    """Check a mixing matrix against the graph: symmetry, nonnegativity,
    unit row sums, sparsity, and a one-dimensional null space of I - W."""
    w = np.asarray(w, dtype=float)
    if w.shape != (g.n, g.n):
        raise ValueError(f"weight matrix shape {w.shape} does not match n={g.n}")
    issues = []
    if np.max(np.abs(w - w.T)) > SYMMETRY_TOL:
        issues.append("not symmetric")
    if np.any(w < 0):
        issues.append("negative weight")
    row_err = np.max(np.abs(w.sum(axis=1) - 1.0))
    if row_err > STOCHASTIC_TOL:
        issues.append(f"rows do not sum to 1 (max error {row_err:.3g})")
    allowed = np.eye(g.n, dtype=bool)
    for i, j in g.edges:
        allowed[i, j] = allowed[j, i] = True
    if np.any(w[~allowed] != 0):
        issues.append("nonzero weight outside graph edges")

    if "not symmetric" in issues:
        eig = np.linalg.eigvals(w)
        eig = np.sort(eig.real)[::-1]
        beta = max(abs(eig[1]), abs(eig[-1])) if eig.size > 1 else 0.0
        report = SpectralReport(beta=float(beta), lambda_min=float(eig[-1]),
                                connected=g.is_connected(), assumption1_holds=False,
                                eigenvalues=eig)
    else:
        report = spectral_beta(w)
        report.connected = g.is_connected()
    if not report.assumption1_holds:
        issues.append("eigenvalue 1 has multiplicity > 1 (null(I - W) is not span(1))")
    if report.lambda_min <= -1.0 + EIGEN_GAP_TOL and g.n > 1:
        issues.append("smallest eigenvalue is -1; beta = 1")
    report.issues = issues
    report.assumption1_holds = not issues and report.connected
    return report
