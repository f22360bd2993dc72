"""Power-network cases: parsing, lossless lowering to a Kuramoto system, and
the critical-ratio protocol (K_c by continuation + bisection, K_T per test).

Voltage magnitudes come from the case file: generator setpoints (gen ``Vg``)
at buses with an in-service generator, the bus ``Vm`` column elsewhere.
Resistances, shunts, tap ratios and phase shifters are ignored.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import BracketNotFound, Disconnected, DisconnectedCase, NoConvergence, ParseError
from .graph import build_graph
from .maf import MultistartConfig, estimate_alpha
from .projection import cutset_projection
from .sync_tests import HALF_PI, OscillatorSystem, edge_flow, g_function
from .torus import in_embedded_cohesive

VOLTAGE_PROVENANCE = "case_file"
LOWERING_NOTE = "lossless: resistance, shunts, taps and phase shifts ignored"


@dataclass
class Bus:
    id: int
    type: str  # "load" or "generator"
    Vm: float
    P_nom: float  # net active injection, p.u.


@dataclass
class Branch:
    f: int  # 0-based bus positions
    t: int
    x: float


@dataclass
class PowerCase:
    name: str
    buses: list[Bus]
    branches: list[Branch]
    base_mva: float = 100.0
    voltage_provenance: str = VOLTAGE_PROVENANCE

    @property
    def n(self) -> int:
        return len(self.buses)


def bundled_case_path(name: str) -> Path:
    """Path of a fixture shipped with the package (``case9``, ``case14``, ``toy3``)."""
    base = resources.files("cutsync") / "data"
    for suffix in (".m", ".json"):
        p = base / f"{name}{suffix}"
        if p.is_file():
            return Path(str(p))
    raise FileNotFoundError(f"no bundled case named {name!r}")


def parse_case(path) -> PowerCase:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        return _parse_json_case(text, path.stem)
    return _parse_matpower(text, path.stem)


def _finalize(name, buses, raw_branches, base_mva) -> PowerCase:
    for b in buses:
        if not b.Vm > 0:
            raise ParseError(f"bus {b.id}: voltage magnitude must be positive, got {b.Vm}")
    pos = {b.id: k for k, b in enumerate(buses)}
    branches = []
    for lineno, f, t, x in raw_branches:
        if f not in pos or t not in pos:
            raise ParseError(f"line {lineno}: branch references unknown bus {f} or {t}")
        if not x > 0:
            raise ParseError(f"line {lineno}: branch {f}-{t} has reactance {x}; need x > 0")
        if f == t:
            raise ParseError(f"line {lineno}: branch {f}-{t} is a self-loop")
        branches.append(Branch(pos[f], pos[t], x))
    case = PowerCase(name=name, buses=buses, branches=branches, base_mva=base_mva)
    try:
        build_graph(case.n, [(br.f, br.t) for br in _merge_pairs(branches)])
    except Disconnected as exc:
        raise DisconnectedCase(str(exc)) from None
    return case


def _merge_pairs(branches):
    seen = {}
    for br in branches:
        seen.setdefault((min(br.f, br.t), max(br.f, br.t)), br)
    return list(seen.values())


def _parse_json_case(text: str, default_name: str) -> PowerCase:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}: {exc.msg}") from None
    try:
        base = float(data.get("baseMVA", 1.0))
        buses = [
            Bus(id=int(b["id"]), type=str(b["type"]), Vm=float(b["Vm"]),
                P_nom=float(b["P"]) / base)
            for b in data["buses"]
        ]
        raw = [
            (k, int(br["from"]), int(br["to"]), float(br["x"]))
            for k, br in enumerate(data["branches"])
            if int(br.get("status", 1)) != 0
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"missing or malformed field: {exc}") from None
    for b in buses:
        if b.type not in ("load", "generator"):
            raise ParseError(f"bus {b.id}: type must be 'load' or 'generator'")
    return _finalize(data.get("name", default_name), buses, raw, base)


_BLOCK_RE = re.compile(r"^\s*mpc\.(\w+)\s*=\s*\[")
_SCALAR_RE = re.compile(r"^\s*mpc\.baseMVA\s*=\s*([-+0-9.eE]+)")


def _read_tables(text: str) -> tuple[float, dict]:
    base = None
    tables: dict[str, list[tuple[int, list[float]]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0]
        if current is None:
            m = _SCALAR_RE.match(line)
            if m:
                base = float(m.group(1))
                continue
            m = _BLOCK_RE.match(line)
            if not m:
                continue
            current = m.group(1)
            tables[current] = []
            line = line[m.end():]
        closing = "]" in line
        line = line.split("]", 1)[0]
        for chunk in line.split(";"):
            if chunk.strip():
                try:
                    tables[current].append((lineno, [float(v) for v in chunk.replace(",", " ").split()]))
                except ValueError:
                    raise ParseError(f"line {lineno}: non-numeric entry in mpc.{current}") from None
        if closing:
            current = None
    if base is None:
        raise ParseError("mpc.baseMVA not found")
    return base, tables


def _parse_matpower(text: str, default_name: str) -> PowerCase:
    base, tables = _read_tables(text)
    for key, min_cols in (("bus", 13), ("gen", 10), ("branch", 13)):
        if key not in tables:
            raise ParseError(f"mpc.{key} table not found")
        for lineno, row in tables[key]:
            if len(row) < min_cols:
                raise ParseError(f"line {lineno}: mpc.{key} row has {len(row)} columns, "
                                 f"need at least {min_cols}")
    gen_p: dict[int, float] = {}
    gen_v: dict[int, float] = {}
    for _, row in tables["gen"]:
        bus, pg, vg, status = int(row[0]), row[1], row[5], row[7]
        if status > 0:
            gen_p[bus] = gen_p.get(bus, 0.0) + pg
            gen_v[bus] = vg
    buses = []
    for _, row in tables["bus"]:
        bid, btype, pd, vm = int(row[0]), int(row[1]), row[2], row[7]
        if btype == 4:
            continue
        is_gen = bid in gen_v
        buses.append(Bus(
            id=bid, type="generator" if is_gen else "load",
            Vm=gen_v[bid] if is_gen else vm,
            P_nom=(gen_p.get(bid, 0.0) - pd) / base,
        ))
    live = {b.id for b in buses}
    raw = [
        (lineno, int(row[0]), int(row[1]), row[3])
        for lineno, row in tables["branch"]
        if row[10] > 0 and int(row[0]) in live and int(row[1]) in live
    ]
    return _finalize(default_name, buses, raw, base)


def lower_to_oscillators(case: PowerCase) -> OscillatorSystem:
    """Edge weight a_jl = V_j V_l / x_jl, parallel branches summed;
    omega = zero-mean part of the nominal injections."""
    weights: dict[tuple[int, int], float] = {}
    for br in case.branches:
        key = (min(br.f, br.t), max(br.f, br.t))
        a = case.buses[br.f].Vm * case.buses[br.t].Vm / br.x
        weights[key] = weights.get(key, 0.0) + a
    g = build_graph(case.n, [(i, j, w) for (i, j), w in weights.items()])
    return OscillatorSystem.from_raw(g, [b.P_nom for b in case.buses])


def _exists(sys: OscillatorSystem, x0) -> np.ndarray | None:
    from .dynamics import solve_newton

    try:
        res = solve_newton(sys, x0, max_iter=60, tol=1e-10)
    except NoConvergence:
        return None
    if res.residual < 1e-9 and in_embedded_cohesive(res.x_star, sys.graph, HALF_PI):
        return res.x_star
    return None


def _necessary_bound(sys: OscillatorSystem) -> float:
    # |K omega_i| <= weighted degree of i is necessary for any equilibrium
    deg = np.abs(sys.graph.B) @ sys.graph.weights
    w = np.abs(sys.omega)
    nz = w > 0
    return float(np.min(deg[nz] / w[nz]))


def critical_coupling(sys_or_case, bisect_tol: float = 1e-4, K_hi_init: float | None = None,
                      steps: int = 64, max_doublings: int = 20) -> float:
    """Largest K for which K * omega has an equilibrium in S^G(pi/2).

    Continuation over ``steps`` K-points up to K_hi (doubled until the branch
    is lost), then bisection warm-started from the last verified solution.
    Returns ``math.inf`` when omega = 0.
    """
    sys = sys_or_case if isinstance(sys_or_case, OscillatorSystem) else lower_to_oscillators(sys_or_case)
    if not np.any(sys.omega):
        return math.inf
    K_hi = 1.01 * _necessary_bound(sys) if K_hi_init is None else float(K_hi_init)
    K_lo, x_lo = 0.0, np.zeros(sys.graph.n)
    fail = None
    for _ in range(max_doublings + 1):
        for K in np.linspace(K_lo, K_hi, steps + 1)[1:]:
            x = _exists(sys.scaled(K), x_lo)
            if x is None:
                fail = K
                break
            K_lo, x_lo = K, x
        if fail is not None:
            break
        K_hi *= 2.0
    if fail is None:
        raise BracketNotFound(f"equilibrium branch persists up to K = {K_lo:.6g}")
    hi = fail
    while hi - K_lo > bisect_tol * max(K_lo, 1e-300):
        mid = 0.5 * (K_lo + hi)
        x = _exists(sys.scaled(mid), x_lo)
        if x is None:
            hi = mid
        else:
            K_lo, x_lo = mid, x
    return float(K_lo)


@dataclass
class CriticalRatioReport:
    case: str
    n: int
    m: int
    K_c: float
    tests: dict = field(default_factory=dict)
    gamma_domain: float = HALF_PI
    voltage_provenance: str = VOLTAGE_PROVENANCE
    lowering: str = LOWERING_NOTE
    alpha_star: float | None = None

    def to_dict(self) -> dict:
        unbounded = math.isinf(self.K_c)
        return {
            "case": self.case, "n": self.n, "m": self.m,
            "K_c": None if unbounded else self.K_c, "K_c_unbounded": unbounded,
            "gamma_domain": self.gamma_domain,
            "voltage_provenance": self.voltage_provenance,
            "lowering": self.lowering, "alpha_star": self.alpha_star,
            "tests": self.tests,
        }


def test_thresholds(case, K_c: float | None = None, with_at1: bool = False,
                    alpha_config: MultistartConfig | None = None,
                    bisect_tol: float = 1e-4, name: str | None = None) -> CriticalRatioReport:
    """K_T for each test from homogeneity (threshold / lhs at K = 1) and the
    critical ratios K_T / K_c."""
    sys = case if isinstance(case, OscillatorSystem) else lower_to_oscillators(case)
    name = name or getattr(case, "name", "system")
    g = sys.graph
    if K_c is None:
        K_c = critical_coupling(sys, bisect_tol=bisect_tol)
    flow = edge_flow(sys)
    flow_inf = float(np.max(np.abs(flow)))
    Bw = float(np.linalg.norm(g.B.T @ sys.omega))
    norm_inf = cutset_projection(g).norm(np.inf)
    ks = {
        "T0": (g.laplacian.lambda2 / Bw if Bw else math.inf, True),
        "T3": (g_function(norm_inf) / flow_inf if flow_inf else math.inf, True),
        "AT0": (1.0 / flow_inf if flow_inf else math.inf, False),
    }
    alpha_star = None
    if with_at1:
        est = estimate_alpha(g, np.inf, HALF_PI, alpha_config)
        alpha_star = est.numeric_estimate
        ks["AT1"] = (HALF_PI * alpha_star / flow_inf if flow_inf else math.inf, False)
    tests = {}
    for key, (K_T, rigorous) in ks.items():
        ratio = K_T / K_c if math.isfinite(K_c) and math.isfinite(K_T) else None
        tests[key] = {"K_T": K_T if math.isfinite(K_T) else None, "ratio": ratio,
                      "rigorous": rigorous}
    return CriticalRatioReport(case=name, n=g.n, m=g.m, K_c=K_c, tests=tests,
                               alpha_star=alpha_star)


test_thresholds.__test__ = False


def table_csv(reports: list[CriticalRatioReport]) -> str:
    cols = ["T0", "T3", "AT0", "AT1"]
    rows = ["case,K_c," + ",".join(f"{c}_ratio_pct" for c in cols)]
    for r in reports:
        cells = [r.case, "" if math.isinf(r.K_c) else repr(r.K_c)]
        for c in cols:
            t = r.tests.get(c)
            cells.append("" if not t or t["ratio"] is None else f"{100 * t['ratio']:.2f}")
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"
