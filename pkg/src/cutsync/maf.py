"""Minimum amplification factor alpha_p(gamma) of the scaled cutset projection.

    alpha_p(gamma) = min_{y in D_p(gamma)} min_{z in Img(B^T), ||z||_p = 1}
                     || P diag(sinc(y)) z ||_p

with D_p(gamma) = {y in Img(B^T) : ||y||_p <= gamma}.  Two kinds of numbers
come out of this module and they are never mixed: closed-form lower bounds
(rigorous) and numerical minimisation results (feasible points, hence upper
bounds on the true minimum).
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import ConfigInvalid, TooLarge, UnsupportedNorm
from .graph import Graph, connected_pinv
from .projection import _p_label, cutset_basis, cutset_projection, parse_p


def sinc(x):
    """sin(x)/x with sinc(0) = 1; series branch for |x| < 1e-4."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    x2 = x * x
    out = np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)
    return float(out) if out.ndim == 0 else out


def alpha_lower_bound_2(gamma: float) -> float:
    """Lower bound on alpha_2(gamma) for unweighted graphs."""
    return sinc(gamma)


def alpha_lower_bound_general(gamma: float, p_norm_of_P: float) -> float:
    """Affine lower bound valid for any weighted graph; may be <= 0 (vacuous)."""
    s = sinc(gamma)
    # (1 + s)/2 - x (1 - s)/2 rearranged so that x = 1 returns sinc exactly
    return s - 0.5 * (p_norm_of_P - 1.0) * (1.0 - s)


@dataclass
class MultistartConfig:
    starts: int = 100
    iters: int = 500
    seed: int = 42
    min_step: float = 1e-9


@dataclass
class MafEstimate:
    p: float
    gamma: float
    lower_bound: float
    bound_method: str
    numeric_estimate: float
    method: str
    vacuous: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p"] = _p_label(self.p)
        return d


def _norm(v, p):
    return float(np.linalg.norm(v, ord=p))


def theorem_lower_bound(g: Graph, p, gamma: float) -> tuple[float, str]:
    p = parse_p(p)
    if p == 2 and g.is_unweighted:
        return alpha_lower_bound_2(gamma), "theorem_2norm"
    norm_P = cutset_projection(g).norm(p)
    return alpha_lower_bound_general(gamma, norm_P), "theorem_general"


def q_inverse(g: Graph, y) -> np.ndarray:
    """Inverse of z -> P diag(sinc(y)) z on Img(B^T): B^T L_{sinc y}^+ B A."""
    B = g.B
    Ls = (B * (g.weights * sinc(np.asarray(y, dtype=float)))) @ B.T
    return B.T @ connected_pinv(Ls) @ (B * g.weights)


def scaled_projection(g: Graph, y) -> np.ndarray:
    return cutset_projection(g).P * sinc(np.asarray(y, dtype=float))[None, :]


def min_gain(T: np.ndarray, basis: np.ndarray, p) -> float:
    """min ||T z||_p over z in span(basis) with ||z||_p = 1 (p in {2, inf})."""
    p = parse_p(p)
    if p == 2:
        return float(np.linalg.svd(T @ basis, compute_uv=False)[-1])
    if p != np.inf:
        raise UnsupportedNorm("min_gain supports p in {2, inf}")
    # ||z||_inf = 1 means some entry equals +1 (sign symmetry) and all lie in
    # [-1, 1]; one LP per pinned entry.
    m, k = basis.shape
    TB = T @ basis
    c = np.zeros(k + 1)
    c[-1] = 1.0
    A_ub = np.vstack([
        np.hstack([TB, -np.ones((m, 1))]),
        np.hstack([-TB, -np.ones((m, 1))]),
        np.hstack([basis, np.zeros((m, 1))]),
        np.hstack([-basis, np.zeros((m, 1))]),
    ])
    b_ub = np.concatenate([np.zeros(2 * m), np.ones(2 * m)])
    best = np.inf
    for i in range(m):
        A_eq = np.concatenate([basis[i], [0.0]])[None, :]
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                      bounds=[(None, None)] * (k + 1), method="highs")
        if res.status == 0:
            best = min(best, float(res.fun))
    return best


def max_gain(T: np.ndarray, basis: np.ndarray, p) -> float:
    """max ||T z||_p over z in span(basis) with ||z||_p = 1 (p in {2, inf})."""
    p = parse_p(p)
    if p == 2:
        return float(np.linalg.svd(T @ basis, compute_uv=False)[0])
    if p != np.inf:
        raise UnsupportedNorm("max_gain supports p in {2, inf}")
    m, k = basis.shape
    TB = T @ basis
    A_ub = np.vstack([basis, -basis])
    b_ub = np.ones(2 * m)
    best = 0.0
    for r in range(m):
        res = linprog(-TB[r], A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * k,
                      method="highs")
        if res.status == 0:
            best = max(best, float(-res.fun))
    return best


class _Objective:
    """Objective over coordinates a (for y) and b (for z) in an orthonormal
    basis of the cutset space, so subspace constraints hold by construction."""

    def __init__(self, g: Graph, p: float, gamma: float):
        self.P = cutset_projection(g).P
        self.basis = cutset_basis(g)
        self.p = p
        self.gamma = gamma
        self.k = self.basis.shape[1]

    def project_a(self, a: np.ndarray) -> np.ndarray:
        nrm = _norm(self.basis @ a, self.p)
        if nrm > self.gamma:
            return a * (self.gamma / nrm) if nrm > 0 else a
        return a

    def value(self, a: np.ndarray, b: np.ndarray | None = None) -> float:
        s = sinc(self.basis @ a)
        if self.p == 2:
            # inner minimum over the unit 2-sphere of the subspace is exact
            return float(np.linalg.svd((self.P * s) @ self.basis, compute_uv=False)[-1])
        z = self.basis @ b
        nz = _norm(z, self.p)
        if nz == 0.0:
            return np.inf
        return _norm(self.P @ (s * z), self.p) / nz


def _pattern_search(obj: _Objective, a, b, cfg: MultistartConfig, rng) -> float:
    k = obj.k
    joint = obj.p != 2
    dim = 2 * k if joint else k

    def split(v):
        return (v[:k], v[k:]) if joint else (v, None)

    def project(v):
        a_, b_ = split(v)
        a_ = obj.project_a(a_)
        if joint:
            nb = np.linalg.norm(b_)
            b_ = b_ / nb if nb > 0 else b_
            return np.concatenate([a_, b_])
        return a_

    v = project(np.concatenate([a, b]) if joint else a)
    f = obj.value(*split(v))
    step = max(obj.gamma, 0.5) if obj.gamma > 0 else 0.5
    eye = np.eye(dim)
    for _ in range(cfg.iters):
        dirs = np.vstack([eye, -eye, rng.standard_normal((dim, dim))])
        dirs[2 * dim:] /= np.linalg.norm(dirs[2 * dim:], axis=1, keepdims=True)
        improved = False
        for d in dirs:
            cand = project(v + step * d)
            fc = obj.value(*split(cand))
            if fc < f:
                v, f, improved = cand, fc, True
                break
        if not improved:
            step *= 0.5
            if step < cfg.min_step:
                break
    return f


def estimate_alpha(g: Graph, p, gamma: float, config: MultistartConfig | None = None) -> MafEstimate:
    """Multistart projected pattern search for alpha_p(gamma).

    The returned ``numeric_estimate`` is the smallest objective value found;
    it upper-bounds alpha_p(gamma).  ``lower_bound`` comes from the closed-form
    theorems and is independent of the search.  ``gamma`` may equal pi/2
    (closure of the domain) for the approximate AT1 test.
    """
    cfg = config or MultistartConfig()
    if cfg.starts < 1 or cfg.iters < 0:
        raise ConfigInvalid(f"starts must be >= 1 (got {cfg.starts})")
    p = parse_p(p)
    if not 0.0 <= gamma <= np.pi / 2:
        raise ValueError(f"gamma must lie in [0, pi/2], got {gamma}")
    lower, bound_method = theorem_lower_bound(g, p, gamma)
    obj = _Objective(g, p, gamma)
    rng = np.random.default_rng(cfg.seed)
    k = obj.k
    # deterministic first start: y = 0 gives objective 1 (P z = z on the range)
    best = obj.value(np.zeros(k), rng.standard_normal(k))
    for s in range(cfg.starts):
        a = rng.standard_normal(k)
        a *= gamma * rng.uniform(0.5, 2.0) / max(_norm(obj.basis @ a, p), 1e-300)
        b = rng.standard_normal(k)
        best = min(best, _pattern_search(obj, a, b, cfg, rng))
    return MafEstimate(
        p=p, gamma=float(gamma), lower_bound=float(lower), bound_method=bound_method,
        numeric_estimate=float(best), method="multistart", vacuous=bool(lower <= 0),
    )


def brute_force_alpha(g: Graph, p, gamma: float, grid: int = 31, chunk: int = 200_000) -> float:
    """Exhaustive grid search over node potentials u (for y = B^T u) and w
    (for z = B^T w), node 0 grounded.  Only feasible grid points are scored,
    so the result upper-bounds alpha_p(gamma) and decreases towards it as
    ``grid`` grows.  Limited to n <= 4."""
    p = parse_p(p)
    if g.n > 4:
        raise TooLarge(f"brute force limited to n <= 4 (got n={g.n})")
    P = cutset_projection(g).P
    Bt = g.B.T[:, 1:]  # ground node 0
    k = g.n - 1
    radius = max(k * gamma, 1e-12)
    u_axis = np.linspace(-radius, radius, grid)
    w_axis = np.linspace(-1.0, 1.0, grid)
    u_pts = np.array(list(itertools.product(u_axis, repeat=k)))
    y = u_pts @ Bt.T
    feasible = np.linalg.norm(y, ord=p, axis=1) <= gamma * (1 + 1e-12) + 1e-15
    S = sinc(y[feasible])
    S = np.atleast_2d(S)
    w_pts = np.array(list(itertools.product(w_axis, repeat=k)))
    Z = w_pts @ Bt.T
    nz = np.linalg.norm(Z, ord=p, axis=1)
    Z = Z[nz > 1e-12] / nz[nz > 1e-12, None]
    best = np.inf
    per = max(1, chunk // max(len(Z), 1))
    for start in range(0, len(S), per):
        s = S[start:start + per]
        prod = s[:, None, :] * Z[None, :, :]
        vals = np.linalg.norm(prod @ P.T, ord=p, axis=2)
        best = min(best, float(vals.min()))
    return best
