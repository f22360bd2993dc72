"""Weighted undirected graphs and their incidence/Laplacian matrices.

Edges are stored canonically: ``i < j``, sorted lexicographically, and each
edge is oriented from the lower to the higher node index.  Every m-indexed
vector in the package (edge flows, projections, weights) uses that order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import null_space, subspace_angles

from .errors import (
    DimensionMismatch,
    Disconnected,
    DuplicateEdge,
    EigSolveFailure,
    GraphError,
    NonpositiveWeight,
    SelfLoop,
)

ZERO_EIG_RTOL = 1e-9


@dataclass(frozen=True)
class LaplacianBundle:
    L: np.ndarray
    Ldag: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    @property
    def lambda2(self) -> float:
        return float(self.eigvals[1]) if len(self.eigvals) > 1 else 0.0


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    edges: tuple[tuple[int, int, float], ...]

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([w for _, _, w in self.edges], dtype=float)

    @cached_property
    def B(self) -> np.ndarray:
        return incidence_matrix(self)

    @cached_property
    def laplacian(self) -> LaplacianBundle:
        return laplacian_bundle(self)

    @property
    def is_unweighted(self) -> bool:
        return bool(np.all(self.weights == 1.0))

    @property
    def is_tree(self) -> bool:
        return self.m == self.n - 1

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            A[i, j] = A[j, i] = w
        return A

    def neighbors(self) -> list[list[int]]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j, _ in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return [sorted(v) for v in nbrs]

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [[i, j, w] for i, j, w in self.edges]}


def _find(parent: list[int], a: int) -> int:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def build_graph(n: int, edges: Iterable[Sequence]) -> Graph:
    """Validate an edge list and return the canonical :class:`Graph`.

    Each edge is ``(i, j)`` or ``(i, j, weight)`` with 0-based node indices;
    the weight defaults to 1.  Raises a :class:`GraphError` subclass for
    self-loops, duplicates, nonpositive weights or a disconnected result.
    """
    n = int(n)
    if n < 1:
        raise GraphError(f"node count must be positive, got {n}")
    canon: dict[tuple[int, int], float] = {}
    for e in edges:
        if len(e) == 2:
            i, j, w = int(e[0]), int(e[1]), 1.0
        else:
            i, j, w = int(e[0]), int(e[1]), float(e[2])
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge ({i}, {j}) references a node outside 0..{n - 1}")
        if i == j:
            raise SelfLoop(f"self-loop at node {i}")
        if not (w > 0 and np.isfinite(w)):
            raise NonpositiveWeight(f"edge ({i}, {j}) has weight {w}")
        key = (min(i, j), max(i, j))
        if key in canon:
            raise DuplicateEdge(f"edge {key} listed twice")
        canon[key] = w

    parent = list(range(n))
    for i, j in canon:
        ri, rj = _find(parent, i), _find(parent, j)
        if ri != rj:
            parent[ri] = rj
    roots = {_find(parent, k) for k in range(n)}
    if len(roots) != 1:
        raise Disconnected(f"graph has {len(roots)} connected components")

    ordered = tuple((i, j, canon[(i, j)]) for i, j in sorted(canon))
    return Graph(n=n, edges=ordered)


def incidence_matrix(g: Graph) -> np.ndarray:
    B = np.zeros((g.n, g.m))
    for e, (i, j, _) in enumerate(g.edges):
        B[i, e] = 1.0
        B[j, e] = -1.0
    return B


def _pinv_from_eigh(vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    cutoff = ZERO_EIG_RTOL * max(float(np.max(np.abs(vals))), 1.0)
    keep = vals > cutoff
    return (vecs[:, keep] / vals[keep]) @ vecs[:, keep].T


def laplacian_bundle(g: Graph) -> LaplacianBundle:
    B = g.B
    L = (B * g.weights) @ B.T
    try:
        vals, vecs = np.linalg.eigh(L)
    except np.linalg.LinAlgError as exc:
        raise EigSolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(vals)):
        raise EigSolveFailure("non-finite Laplacian eigenvalues")
    cutoff = ZERO_EIG_RTOL * max(float(vals[-1]), 1.0)
    if g.n > 1 and np.count_nonzero(vals <= cutoff) != 1:
        raise EigSolveFailure("Laplacian kernel is not one-dimensional")
    Ldag = _pinv_from_eigh(vals, vecs)
    Ldag = 0.5 * (Ldag + Ldag.T)
    for arr in (L, Ldag, vals, vecs):
        arr.setflags(write=False)
    return LaplacianBundle(L=L, Ldag=Ldag, eigvals=vals, eigvecs=vecs)


def scaled_laplacian(g: Graph, v) -> np.ndarray:
    """``B diag(a) diag(v) B^T`` for an edge vector ``v``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (g.m,):
        raise DimensionMismatch(f"edge vector has shape {v.shape}, expected ({g.m},)")
    return (g.B * (g.weights * v)) @ g.B.T


def connected_pinv(L: np.ndarray) -> np.ndarray:
    """Pseudoinverse of a Laplacian whose kernel is exactly span(1)."""
    n = L.shape[0]
    J = np.full((n, n), 1.0 / n)
    return np.linalg.inv(L + J) - J


def verify_decomposition(g: Graph) -> dict:
    """Dimensions of the cutset space Img(B^T) and the weighted cycle space
    Ker(B A), and the smallest principal angle between them (> 0 means the
    two subspaces only meet at the origin)."""
    B = g.B
    dim_cut = int(np.linalg.matrix_rank(B.T))
    BA = B * g.weights
    dim_cyc = g.m - int(np.linalg.matrix_rank(BA))
    if dim_cyc == 0:
        angle = float(np.pi / 2)
    else:
        angle = float(np.min(subspace_angles(B.T, null_space(BA))))
    return {
        "dim_cutset": dim_cut,
        "dim_cycle": dim_cyc,
        "min_angle": angle,
        "trivial_intersection": bool(angle > 1e-10),
    }


def load_graph(path) -> Graph:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict) or "n" not in data or "edges" not in data:
        raise GraphError("graph file must be an object with 'n' and 'edges'")
    return build_graph(data["n"], data["edges"])


# Small constructors used by tests, scripts and the CLI.

def path_graph(n: int, weight: float = 1.0) -> Graph:
    return build_graph(n, [(i, i + 1, weight) for i in range(n - 1)])


def ring_graph(n: int, weight: float = 1.0) -> Graph:
    return build_graph(n, [(i, (i + 1) % n, weight) for i in range(n)])


def complete_graph(n: int, weight: float = 1.0) -> Graph:
    return build_graph(n, [(i, j, weight) for i in range(n) for j in range(i + 1, n)])


def star_graph(n: int, weight: float = 1.0) -> Graph:
    return build_graph(n, [(0, j, weight) for j in range(1, n)])


def random_tree(n: int, rng: np.random.Generator, weighted: bool = True) -> Graph:
    edges = []
    for k in range(1, n):
        parent = int(rng.integers(0, k))
        w = float(rng.uniform(0.5, 3.0)) if weighted else 1.0
        edges.append((parent, k, w))
    return build_graph(n, edges)


def random_connected_graph(
    n: int, rng: np.random.Generator, p_extra: float = 0.4, weighted: bool = True
) -> Graph:
    """Random spanning tree plus each remaining pair with probability ``p_extra``."""
    pairs = {}
    for k in range(1, n):
        pairs[(int(rng.integers(0, k)), k)] = None
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in pairs and rng.random() < p_extra:
                pairs[(i, j)] = None
    edges = [
        (i, j, float(rng.uniform(0.5, 3.0)) if weighted else 1.0) for i, j in pairs
    ]
    return build_graph(n, edges)
