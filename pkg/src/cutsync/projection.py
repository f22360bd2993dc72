"""Cutset projection P = B^T L^+ B A and its induced norms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space, orth, subspace_angles

from .errors import CutsyncError, TrivialCycleSpace, UnsupportedNorm
from .graph import Graph

SPECTRUM_ATOL = 1e-6
IDEMPOTENCY_TOL = 1e-9
SUPPORTED_P = (1, 2, np.inf)


def parse_p(p) -> float:
    """Normalize a norm index given as int, float or string ('inf')."""
    if isinstance(p, str):
        p = p.strip().lower()
        if p in ("inf", "infinity", "oo"):
            return np.inf
        try:
            p = float(p)
        except ValueError:
            raise UnsupportedNorm(f"unsupported norm index {p!r}") from None
    p = float(p)
    if p not in SUPPORTED_P:
        raise UnsupportedNorm(f"unsupported norm index {p}")
    return p


def induced_norm(M: np.ndarray, p) -> float:
    p = parse_p(p)
    if p == 1:
        return float(np.max(np.sum(np.abs(M), axis=0)))
    if p == np.inf:
        return float(np.max(np.sum(np.abs(M), axis=1)))
    return float(np.linalg.svd(M, compute_uv=False)[0])


@dataclass(frozen=True, eq=False)
class CutsetProjection:
    P: np.ndarray
    norms: dict = field(default_factory=dict)
    idempotency_error: float = 0.0
    multiplicity_zero: int = 0
    multiplicity_one: int = 0

    def norm(self, p) -> float:
        return self.norms[parse_p(p)]

    def to_dict(self) -> dict:
        return {
            "P": self.P.tolist(),
            "norms": {_p_label(p): v for p, v in self.norms.items()},
            "idempotency_error": self.idempotency_error,
            "multiplicity_zero": self.multiplicity_zero,
            "multiplicity_one": self.multiplicity_one,
        }


def _p_label(p: float) -> str:
    return "inf" if p == np.inf else str(int(p))


def cutset_projection(g: Graph) -> CutsetProjection:
    """Build P, check that it is an idempotent with the expected spectrum,
    and cache ||P||_p for p in {1, 2, inf}."""
    lb = g.laplacian
    P = g.B.T @ lb.Ldag @ (g.B * g.weights)
    idem = float(np.linalg.norm(P @ P - P, 2)) if g.m else 0.0
    eig = np.linalg.eigvals(P) if g.m else np.empty(0)
    mult0 = int(np.count_nonzero(np.abs(eig) < SPECTRUM_ATOL))
    mult1 = int(np.count_nonzero(np.abs(eig - 1.0) < SPECTRUM_ATOL))
    if idem > IDEMPOTENCY_TOL * max(1.0, float(np.abs(P).max(initial=0.0))):
        raise CutsyncError(f"P is not idempotent (||P^2 - P||_2 = {idem:.3e})")
    if (mult0, mult1) != (g.m - g.n + 1, g.n - 1):
        raise CutsyncError(
            f"unexpected spectrum multiplicities (0: {mult0}, 1: {mult1}) "
            f"for n={g.n}, m={g.m}"
        )
    P.setflags(write=False)
    norms = {p: induced_norm(P, p) for p in SUPPORTED_P} if g.m else {}
    return CutsetProjection(
        P=P, norms=norms, idempotency_error=idem,
        multiplicity_zero=mult0, multiplicity_one=mult1,
    )


def projection_norm(cp: CutsetProjection, p) -> float:
    return cp.norm(p)


def effective_resistance(g: Graph) -> np.ndarray:
    Ld = g.laplacian.Ldag
    d = np.diag(Ld)
    return d[:, None] + d[None, :] - 2.0 * Ld


def effective_resistance_check(g: Graph) -> float:
    """Max-abs gap between P and -(1/2) B^T R_eff B A."""
    R = effective_resistance(g)
    alt = -0.5 * g.B.T @ R @ (g.B * g.weights)
    return float(np.max(np.abs(alt - cutset_projection(g).P)))


def cutset_basis(g: Graph) -> np.ndarray:
    """Orthonormal basis (m x (n-1)) of the cutset space Img(B^T)."""
    return orth(g.B.T)


def cycle_basis(g: Graph) -> np.ndarray:
    """Orthonormal basis of the weighted cycle space Ker(B A)."""
    return null_space(g.B * g.weights)


def minimal_angle_check(g: Graph) -> tuple[float, float]:
    """Minimal angle between cutset and weighted cycle space, and
    ``|sin(angle) - 1/||P||_2|``."""
    if g.m == g.n - 1:
        raise TrivialCycleSpace("tree has a trivial cycle space")
    angle = float(np.min(subspace_angles(cutset_basis(g), cycle_basis(g))))
    norm2 = cutset_projection(g).norm(2)
    return angle, abs(np.sin(angle) - 1.0 / norm2)
