"""Sufficient (and approximate) synchronization tests built on the edge flow
B^T L^+ omega, plus the threshold functions g, gamma* and h_n."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from .errors import CutsyncError, DomainError, GammaMismatch, NotAcyclic, TopologyNotApplicable
from .graph import Graph
from .maf import MafEstimate, MultistartConfig, estimate_alpha
from .projection import _p_label, cutset_projection, parse_p

HALF_PI = np.pi / 2
# computed norms of idempotents can land a few ulps below 1
NORM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class OscillatorSystem:
    graph: Graph
    omega: np.ndarray
    omega_syn: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.shape != (self.graph.n,):
            raise ValueError(f"omega has shape {w.shape}, expected ({self.graph.n},)")
        scale = max(float(np.linalg.norm(w)), 1.0)
        if abs(w.sum()) > 1e-9 * scale:
            raise ValueError("omega must have zero mean; use OscillatorSystem.from_raw")
        object.__setattr__(self, "omega", w)

    @classmethod
    def from_raw(cls, graph: Graph, omega_raw) -> "OscillatorSystem":
        w, syn = normalize_frequencies(omega_raw)
        return cls(graph, w, syn)

    @property
    def omega_raw(self) -> np.ndarray:
        return self.omega + self.omega_syn

    def scaled(self, K: float) -> "OscillatorSystem":
        return OscillatorSystem(self.graph, K * self.omega, K * self.omega_syn)


@dataclass
class TestRecord:
    name: str
    applicable: bool
    lhs: float | None = None
    threshold: float | None = None
    passed: bool | None = None
    margin: float | None = None
    gamma_domain: float | None = None
    p: str | None = None
    rigorous: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


# keep pytest from collecting the dataclass
TestRecord.__test__ = False


def _record(name, lhs, threshold, *, strict=False, gamma_domain=None, p=None,
            rigorous=True, note="") -> TestRecord:
    lhs, threshold = float(lhs), float(threshold)
    passed = lhs < threshold if strict else lhs <= threshold
    return TestRecord(
        name=name, applicable=True, lhs=lhs, threshold=threshold, passed=bool(passed),
        margin=threshold - lhs, gamma_domain=None if gamma_domain is None else float(gamma_domain),
        p=None if p is None else _p_label(p), rigorous=rigorous, note=note,
    )


def normalize_frequencies(omega_raw) -> tuple[np.ndarray, float]:
    w = np.asarray(omega_raw, dtype=float)
    syn = float(w.mean())
    return w - syn, syn


def edge_flow(sys: OscillatorSystem) -> np.ndarray:
    g = sys.graph
    return g.B.T @ (g.laplacian.Ldag @ sys.omega)


def test_T0(sys: OscillatorSystem) -> TestRecord:
    g = sys.graph
    lhs = np.linalg.norm(g.B.T @ sys.omega)
    return _record("T0", lhs, g.laplacian.lambda2, strict=True, gamma_domain=HALF_PI, p=2)


def test_T2(sys: OscillatorSystem, gamma: float, flow=None) -> TestRecord:
    if not sys.graph.is_unweighted:
        return TestRecord(name="T2", applicable=False, p="2",
                          note="WeightedGraphNotCovered")
    flow = edge_flow(sys) if flow is None else flow
    return _record("T2", np.linalg.norm(flow, 2), np.sin(gamma), gamma_domain=gamma, p=2)


def gamma_star(p_norm_of_P: float) -> float:
    if p_norm_of_P < 1 - NORM_TOL:
        raise DomainError(f"||P||_p must be >= 1, got {p_norm_of_P}")
    p_norm_of_P = max(p_norm_of_P, 1.0)
    return float(np.arccos((p_norm_of_P - 1.0) / (p_norm_of_P + 1.0)))


def g_function(x: float) -> float:
    """Threshold of the general p-norm test as a function of ||P||_p.

    Equal to 1 at x = 1, decreasing, and tending to 0 as x grows.
    """
    if x < 1 - NORM_TOL:
        raise DomainError(f"g is defined on [1, inf), got {x}")
    if x <= 1:
        return 1.0
    y = gamma_star(x)
    s = np.sin(y)
    return float(0.5 * (y + s) - x * 0.5 * (y - s))


def test_T3(sys: OscillatorSystem, p=np.inf, flow=None) -> TestRecord:
    p = parse_p(p)
    norm_P = cutset_projection(sys.graph).norm(p)
    flow = edge_flow(sys) if flow is None else flow
    return _record("T3", np.linalg.norm(flow, p), g_function(norm_P),
                   gamma_domain=gamma_star(norm_P), p=p)


def test_T1(sys: OscillatorSystem, p, gamma: float, alpha: MafEstimate,
            flow=None) -> tuple[TestRecord, TestRecord]:
    """Rigorous verdict (theorem lower bound on alpha) and heuristic verdict
    (numerical estimate of alpha, which only upper-bounds it)."""
    p = parse_p(p)
    if alpha.p != p or not np.isclose(alpha.gamma, gamma, rtol=0, atol=1e-12):
        raise GammaMismatch(
            f"alpha computed for p={alpha.p}, gamma={alpha.gamma}; asked p={p}, gamma={gamma}"
        )
    flow = edge_flow(sys) if flow is None else flow
    lhs = np.linalg.norm(flow, p)
    rig = _record("T1", lhs, alpha.lower_bound * gamma, gamma_domain=gamma, p=p,
                  note=alpha.bound_method + (" (vacuous)" if alpha.vacuous else ""))
    heur = _record("T1_estimate", lhs, alpha.numeric_estimate * gamma, gamma_domain=gamma,
                   p=p, rigorous=False, note=alpha.method)
    return rig, heur


def test_AT0(sys: OscillatorSystem, flow=None) -> TestRecord:
    flow = edge_flow(sys) if flow is None else flow
    return _record("AT0", np.linalg.norm(flow, np.inf), 1.0, gamma_domain=HALF_PI,
                   p=np.inf, rigorous=False)


def test_AT1(sys: OscillatorSystem, alpha_star: float, flow=None) -> TestRecord:
    flow = edge_flow(sys) if flow is None else flow
    return _record("AT1", np.linalg.norm(flow, np.inf), HALF_PI * alpha_star,
                   gamma_domain=HALF_PI, p=np.inf, rigorous=False)


def acyclic_characterization(sys: OscillatorSystem, gamma: float):
    """Exact existence test on trees.  Returns ``(exists, x_star)`` where
    ``x_star`` is the unique manifold in S^G(gamma) or None."""
    g = sys.graph
    if not g.is_tree:
        raise NotAcyclic(f"graph has m={g.m} edges for n={g.n} nodes")
    flow = edge_flow(sys)
    if np.max(np.abs(flow), initial=0.0) > np.sin(gamma):
        return False, None
    x = g.laplacian.Ldag @ (g.B * g.weights) @ np.arcsin(flow)
    x -= x.mean()
    if np.max(np.abs(g.B.T @ x), initial=0.0) > gamma + 1e-9:
        raise CutsyncError("explicit tree manifold left S^G(gamma)")
    return True, x


def h_n(n: int, gamma):
    gamma = np.asarray(gamma, dtype=float)
    s = np.sin(gamma)
    return s - (n - 2) / (2.0 * n) * (gamma - s)


def detect_topology(g: Graph) -> str | None:
    if not g.is_unweighted or g.n < 3:
        return None
    if g.m == g.n * (g.n - 1) // 2:
        return "complete"
    if g.n >= 3 and g.m == g.n and all(len(v) == 2 for v in g.neighbors()):
        return "ring"
    return None


def h_n_test(sys: OscillatorSystem, gamma: float, flow=None) -> TestRecord:
    topo = detect_topology(sys.graph)
    if topo is None:
        raise TopologyNotApplicable("h_n test needs an unweighted complete or ring graph")
    flow = edge_flow(sys) if flow is None else flow
    return _record("h_n", np.linalg.norm(flow, np.inf), float(h_n(sys.graph.n, gamma)),
                   gamma_domain=gamma, p=np.inf, note=topo)


@dataclass
class SyncReport:
    n: int
    m: int
    edge_flow: list
    tests: list = field(default_factory=list)
    alpha: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "edge_flow": list(self.edge_flow),
            "tests": [t.to_dict() for t in self.tests],
            "alpha": [a.to_dict() for a in self.alpha],
        }

    def find(self, name: str, gamma: float | None = None) -> list[TestRecord]:
        return [
            t for t in self.tests
            if t.name == name and (gamma is None or t.gamma_domain == gamma)
        ]


def run_all(sys: OscillatorSystem, gamma_grid: Iterable[float] = (1.0,), p=np.inf,
            alpha_config: MultistartConfig | None = None,
            with_at1: bool = False) -> SyncReport:
    """Evaluate every applicable test.  T1 needs alpha estimates, which are
    only computed when ``alpha_config`` is given."""
    g = sys.graph
    p = parse_p(p)
    flow = edge_flow(sys)
    rep = SyncReport(n=g.n, m=g.m, edge_flow=flow.tolist())
    rep.tests.append(test_T0(sys))
    rep.tests.append(test_T3(sys, p, flow=flow))
    rep.tests.append(test_AT0(sys, flow=flow))
    if with_at1:
        est = estimate_alpha(g, np.inf, HALF_PI, alpha_config)
        rep.alpha.append(est)
        rep.tests.append(test_AT1(sys, est.numeric_estimate, flow=flow))
    topo = detect_topology(g)
    for gamma in gamma_grid:
        gamma = float(gamma)
        rep.tests.append(test_T2(sys, gamma, flow=flow))
        if alpha_config is not None:
            est = estimate_alpha(g, p, gamma, alpha_config)
            rep.alpha.append(est)
            rep.tests.extend(test_T1(sys, p, gamma, est, flow=flow))
        if g.is_tree:
            exists, _ = acyclic_characterization(sys, gamma)
            lhs = float(np.max(np.abs(flow), initial=0.0))
            rep.tests.append(TestRecord(
                name="acyclic", applicable=True, lhs=lhs, threshold=float(np.sin(gamma)),
                passed=exists, margin=float(np.sin(gamma)) - lhs, gamma_domain=gamma,
                p="inf", note="necessary and sufficient",
            ))
        if topo is not None:
            rep.tests.append(h_n_test(sys, gamma, flow=flow))
    return rep


# these are library functions, not pytest tests
for _f in (test_T0, test_T1, test_T2, test_T3, test_AT0, test_AT1):
    _f.__test__ = False


def margins_csv(report: SyncReport) -> str:
    rows = ["name,p,gamma_domain,lhs,threshold,margin,passed,rigorous,applicable"]
    for t in report.tests:
        cells = [t.name, t.p or "", t.gamma_domain, t.lhs, t.threshold, t.margin,
                 t.passed, t.rigorous, t.applicable]
        rows.append(",".join("" if c is None else (repr(c) if isinstance(c, float) else str(c))
                             for c in cells))
    return "\n".join(rows) + "\n"
