"""Geodesic distance on the circle, the embedding of torus points into the
zero-mean subspace, and membership tests for the arc, cohesive and embedded
cohesive subsets."""

from __future__ import annotations

import heapq

import numpy as np

from .errors import Disconnected
from .graph import Graph

TWO_PI = 2.0 * np.pi
MEMBERSHIP_TOL = 1e-9

CCW = "counterclockwise"
CW = "clockwise"


def wrap(theta) -> np.ndarray:
    """Map angles into [0, 2*pi)."""
    out = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    out[out >= TWO_PI] = 0.0
    return out


def geodesic_distance(a: float, b: float) -> tuple[float, str]:
    """Shorter arc length between angles ``a`` and ``b`` and the direction of
    travel from ``a`` to ``b`` along it.  A tie at exactly pi counts as
    counterclockwise."""
    d = float(np.mod(b - a, TWO_PI))
    if d <= np.pi:
        return d, CCW
    return TWO_PI - d, CW


def embed(theta, g: Graph) -> np.ndarray:
    """Lift ``theta`` to the zero-mean vector x with exp(i x) in [theta].

    Spanning-tree traversal from node 0; among visited nodes with unvisited
    neighbours the lowest index is expanded first, towards its lowest-index
    unvisited neighbour.
    """
    theta = wrap(theta)
    if theta.shape != (g.n,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({g.n},)")
    nbrs = g.neighbors()
    ptr = [0] * g.n
    x = np.zeros(g.n)
    seen = np.zeros(g.n, dtype=bool)
    seen[0] = True
    count = 1
    heap = [0]
    while count < g.n:
        if not heap:
            raise Disconnected("embedding traversal could not reach every node")
        j = heap[0]
        lst = nbrs[j]
        while ptr[j] < len(lst) and seen[lst[ptr[j]]]:
            ptr[j] += 1
        if ptr[j] == len(lst):
            heapq.heappop(heap)
            continue
        k = lst[ptr[j]]
        dist, direction = geodesic_distance(theta[j], theta[k])
        x[k] = x[j] + dist if direction == CCW else x[j] - dist
        seen[k] = True
        count += 1
        heapq.heappush(heap, k)
    x -= x.mean()
    return x


def in_arc_subset(theta, gamma: float, tol: float = MEMBERSHIP_TOL) -> bool:
    """True iff some closed arc of length ``gamma`` contains every angle."""
    t = np.sort(wrap(theta))
    if t.size <= 1:
        return True
    gaps = np.diff(np.concatenate([t, [t[0] + TWO_PI]]))
    return bool(TWO_PI - gaps.max() <= gamma + tol)


def in_cohesive(theta, g: Graph, gamma: float, tol: float = MEMBERSHIP_TOL) -> bool:
    t = wrap(theta)
    for i, j, _ in g.edges:
        if geodesic_distance(t[i], t[j])[0] > gamma + tol:
            return False
    return True


def in_embedded_cohesive(theta, g: Graph, gamma: float, tol: float = MEMBERSHIP_TOL) -> bool:
    x = embed(theta, g)
    return bool(np.max(np.abs(g.B.T @ x), initial=0.0) <= gamma + tol)


def memberships(theta, g: Graph, gamma: float) -> dict:
    return {
        "arc": in_arc_subset(theta, gamma),
        "embedded_cohesive": in_embedded_cohesive(theta, g, gamma),
        "cohesive": in_cohesive(theta, g, gamma),
    }
