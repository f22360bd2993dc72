"""Kuramoto dynamics: RK4 simulation, equilibrium solvers and stability.

The model is  d(theta)/dt = omega - B A sin(B^T theta).  Equilibria are
represented by their zero-mean lift x (``x.sum() == 0``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .errors import (
    IterateLeftDomain,
    NoConvergence,
    NotAnEquilibrium,
    SingularJacobian,
    StepTooLarge,
    WindowTooLong,
)
from .graph import Graph, connected_pinv
from .maf import sinc
from .projection import parse_p
from .sync_tests import OscillatorSystem, acyclic_characterization, edge_flow
from .torus import TWO_PI, in_embedded_cohesive, wrap

STABILITY_THRESHOLD = 1e-9


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # wrapped to [0, 2*pi)
    freq: np.ndarray
    unwrapped: np.ndarray
    omega_syn: float = 0.0


@dataclass
class EquilibriumResult:
    x_star: np.ndarray
    residual: float
    stable: bool
    jacobian_lambda2: float
    solver: str
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "x_star": self.x_star.tolist(),
            "residual": self.residual,
            "stable": self.stable,
            "jacobian_lambda2": self.jacobian_lambda2,
            "solver": self.solver,
            "iterations": self.iterations,
        }


def rhs(sys: OscillatorSystem, theta: np.ndarray) -> np.ndarray:
    g = sys.graph
    return sys.omega_raw - (g.B * g.weights) @ np.sin(g.B.T @ theta)


def default_dt(sys: OscillatorSystem) -> float:
    return 1e-3 / max(1.0, float(np.max(np.abs(sys.omega_raw))))


def _max_row_sum(g: Graph) -> float:
    return float(np.max(np.abs(g.B) @ g.weights))


def simulate(sys: OscillatorSystem, theta0, dt: float | None = None, t_end: float = 100.0,
             stride: int = 1) -> Trajectory:
    """Fixed-step classical RK4.  Samples every ``stride`` steps; the final
    time is always included."""
    dt = default_dt(sys) if dt is None else float(dt)
    if dt <= 0:
        raise StepTooLarge("dt must be positive")
    bound = dt * (float(np.max(np.abs(sys.omega_raw))) + 2.0 * _max_row_sum(sys.graph))
    if bound > 0.5:
        raise StepTooLarge(f"dt * (|omega|_inf + 2 max row sum) = {bound:.3g} > 0.5")
    steps = int(round(t_end / dt))
    if steps < 1 or not np.isclose(steps * dt, t_end, rtol=1e-9, atol=1e-12):
        raise ValueError("t_end must be a positive integer multiple of dt")
    g = sys.graph
    BA = g.B * g.weights
    Bt = g.B.T
    w = sys.omega_raw

    def f(th):
        return w - BA @ np.sin(Bt @ th)

    th = np.asarray(theta0, dtype=float).copy()
    idx = list(range(0, steps + 1, stride))
    if idx[-1] != steps:
        idx.append(steps)
    out = np.empty((len(idx), g.n))
    times = np.empty(len(idx))
    out[0], times[0] = th, 0.0
    k = 1
    for s in range(1, steps + 1):
        k1 = f(th)
        k2 = f(th + 0.5 * dt * k1)
        k3 = f(th + 0.5 * dt * k2)
        k4 = f(th + dt * k3)
        th = th + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if k < len(idx) and s == idx[k]:
            out[k], times[k] = th, s * dt
            k += 1
    freq = np.array([f(row) for row in out])
    return Trajectory(times=times, states=wrap(out), freq=freq, unwrapped=out,
                      omega_syn=sys.omega_syn)


def detect_frequency_sync(traj: Trajectory, window: float | None = None,
                          tol: float = 1e-6) -> tuple[bool, float]:
    """Frequency sync over the final ``window`` time units (default: last 10%)."""
    duration = traj.times[-1] - traj.times[0]
    window = 0.1 * duration if window is None else float(window)
    if window > duration:
        raise WindowTooLong(f"window {window} exceeds trajectory length {duration}")
    mask = traj.times >= traj.times[-1] - window
    dev = np.max(np.abs(traj.freq[mask] - traj.omega_syn))
    return bool(dev < tol), traj.omega_syn


def residual(sys: OscillatorSystem, x) -> float:
    g = sys.graph
    return float(np.max(np.abs(sys.omega - (g.B * g.weights) @ np.sin(g.B.T @ x))))


def edge_balance_residual(sys: OscillatorSystem, x) -> float:
    from .projection import cutset_projection

    P = cutset_projection(sys.graph).P
    return float(np.max(np.abs(edge_flow(sys) - P @ np.sin(sys.graph.B.T @ x))))


def _zero_mean_basis(n: int) -> np.ndarray:
    return null_space(np.ones((1, n)))


def jacobian(sys: OscillatorSystem, x) -> np.ndarray:
    """Jacobian of the vector field at x: -B A diag(cos(B^T x)) B^T."""
    g = sys.graph
    return -(g.B * (g.weights * np.cos(g.B.T @ x))) @ g.B.T


def check_stability(sys: OscillatorSystem, x_star, eq_tol: float = 1e-6) -> tuple[bool, dict]:
    """Stable iff every eigenvalue of the Jacobian restricted to the
    zero-mean subspace is below -1e-9."""
    x_star = np.asarray(x_star, dtype=float)
    res = residual(sys, x_star)
    if res >= eq_tol:
        raise NotAnEquilibrium(f"balance residual {res:.3e} >= {eq_tol}")
    n = sys.graph.n
    if n == 1:
        return True, {"lambda2": np.inf, "min": np.inf, "max": np.inf}
    U = _zero_mean_basis(n)
    eig = np.linalg.eigvalsh(U.T @ (-jacobian(sys, x_star)) @ U)
    lam2 = float(eig[0])
    return lam2 > STABILITY_THRESHOLD, {"lambda2": lam2, "min": float(eig[0]),
                                        "max": float(eig[-1])}


def _finish(sys, x, solver, iterations) -> EquilibriumResult:
    x = x - x.mean()
    stable, spectrum = check_stability(sys, x)
    return EquilibriumResult(x_star=x, residual=residual(sys, x), stable=stable,
                             jacobian_lambda2=spectrum["lambda2"], solver=solver,
                             iterations=iterations)


def solve_newton(sys: OscillatorSystem, x_init=None, max_iter: int = 100,
                 tol: float = 1e-10, solver: str = "newton") -> EquilibriumResult:
    """Damped Newton on F(x) = B A sin(B^T x) - omega over the zero-mean
    subspace, with backtracking on ||F||_2."""
    g = sys.graph
    BA = g.B * g.weights
    Bt = g.B.T
    U = _zero_mean_basis(g.n)
    x = np.zeros(g.n) if x_init is None else np.asarray(x_init, dtype=float).copy()
    x -= x.mean()

    def F(v):
        return BA @ np.sin(Bt @ v) - sys.omega

    Fx = F(x)
    for it in range(max_iter + 1):
        if np.max(np.abs(Fx)) < tol:
            return _finish(sys, x, solver, it)
        if it == max_iter:
            break
        J = (g.B * (g.weights * np.cos(Bt @ x))) @ g.B.T
        Jr = U.T @ J @ U
        ev = np.linalg.eigvalsh(Jr)
        scale = max(1.0, float(np.max(np.abs(ev))))
        if np.min(np.abs(ev)) < 1e-12 * scale:
            raise SingularJacobian(f"Jacobian singular at iteration {it}")
        dx = -U @ np.linalg.solve(Jr, U.T @ Fx)
        f0 = np.linalg.norm(Fx)
        t = 1.0
        while True:
            xn = x + t * dx
            Fn = F(xn)
            if np.linalg.norm(Fn) <= (1.0 - 1e-4 * t) * f0:
                break
            t *= 0.5
            if t < 1e-6:
                # stuck at a local minimum of ||F||: no root in reach
                raise NoConvergence(f"line search stalled at iteration {it}, "
                                    f"residual {np.max(np.abs(Fx)):.3e}")
        x, Fx = xn, Fn
    raise NoConvergence(f"Newton stopped after {max_iter} iterations, "
                        f"residual {np.max(np.abs(Fx)):.3e}")


def solve_fixed_point(sys: OscillatorSystem, p, gamma: float, max_iter: int = 20000,
                      tol: float = 1e-12) -> EquilibriumResult:
    """Iterate y <- B^T L_{sinc(y)}^+ omega from y = 0 inside D_p(gamma); the
    fixed point y = B^T x* is lifted by least squares and polished by Newton."""
    p = parse_p(p)
    g = sys.graph
    Bt = g.B.T
    y = np.zeros(g.m)
    for it in range(1, max_iter + 1):
        Ls = (g.B * (g.weights * sinc(y))) @ g.B.T
        y_new = Bt @ (connected_pinv(Ls) @ sys.omega)
        if np.linalg.norm(y_new, p) > gamma * (1 + 1e-12) + 1e-14:
            raise IterateLeftDomain(
                f"iterate {it} has ||y||_p = {np.linalg.norm(y_new, p):.6g} > gamma = {gamma:.6g}"
            )
        done = np.max(np.abs(y_new - y), initial=0.0) < tol
        y = y_new
        if done:
            x = np.linalg.lstsq(Bt, y, rcond=None)[0]
            res = solve_newton(sys, x - x.mean(), max_iter=20, solver="fixed_point")
            res.iterations = it
            return res
    raise NoConvergence(f"fixed-point iteration did not settle in {max_iter} steps")


def solve_acyclic(sys: OscillatorSystem, gamma: float = np.pi / 2) -> EquilibriumResult:
    exists, x = acyclic_characterization(sys, gamma)
    if not exists:
        raise NoConvergence("no synchronization manifold in S^G(gamma) on this tree")
    return _finish(sys, x, "explicit_acyclic", 0)


def solve_continuation(sys: OscillatorSystem, steps: int = 16, x_init=None,
                       K_start: float = 0.0) -> EquilibriumResult:
    """Newton continuation along K * omega from K_start to 1."""
    x = np.zeros(sys.graph.n) if x_init is None else np.asarray(x_init, dtype=float)
    res = None
    for K in np.linspace(K_start, 1.0, steps + 1)[1:]:
        res = solve_newton(sys.scaled(K), x, solver="continuation")
        x = res.x_star
    return _finish(sys, x, "continuation", steps)


def find_equilibrium(sys: OscillatorSystem, p=np.inf, gamma: float = np.pi / 2) -> EquilibriumResult:
    """Fixed-point iteration first; Newton continuation as a fallback."""
    try:
        return solve_fixed_point(sys, p, gamma)
    except NoConvergence:
        return solve_continuation(sys)


def embedded_distance(x, y) -> float:
    """Distance between two phase vectors modulo uniform rotation and 2*pi."""
    d = (np.asarray(x) - x[0]) - (np.asarray(y) - y[0])
    d = np.mod(d + np.pi, TWO_PI) - np.pi
    return float(np.max(np.abs(d)))


def newton_multistart(sys: OscillatorSystem, starts: int, rng: np.random.Generator,
                      gamma: float | None = None) -> list[EquilibriumResult]:
    """Newton from random starts (inside S^G(gamma) when gamma is given)."""
    g = sys.graph
    found = []
    for _ in range(starts):
        x0 = rng.uniform(-np.pi, np.pi, g.n)
        if gamma is not None:
            x0 -= x0.mean()
            edge = np.max(np.abs(g.B.T @ x0), initial=0.0)
            if edge > 0:
                x0 *= gamma * rng.uniform(0.0, 1.0) / edge
        try:
            found.append(solve_newton(sys, x0, max_iter=60))
        except NoConvergence:
            continue
    return found


def equivalence_experiment(sys: OscillatorSystem, trials: int = 5, seed: int = 42,
                           newton_starts: int = 30, perturb: float = 0.2,
                           tol: float = 1e-4, match_tol: float = 1e-3) -> dict:
    """Empirical check that a stable manifold exists iff trajectories from an
    open set frequency-synchronize.

    With a stable equilibrium: perturbed starts must sync and converge to it.
    Without any equilibrium: random starts must not sync.
    """
    rng = np.random.default_rng(seed)
    g = sys.graph
    stable = None
    try:
        cand = solve_continuation(sys)
        stable = cand if cand.stable else None
    except NoConvergence:
        pass
    found = [] if stable else newton_multistart(sys, newton_starts, rng)
    if stable is None:
        stable = next((r for r in found if r.stable), None)
    scale = float(np.max(np.abs(sys.omega_raw))) + 2.0 * _max_row_sum(g)
    dt = min(0.01, 0.25 / scale)
    rate = stable.jacobian_lambda2 if stable is not None else 1.0
    t_end = float(np.clip(20.0 / max(rate, 1e-3), 40.0, 400.0))
    t_end = round(t_end / dt) * dt
    stride = max(1, int(round(0.1 / dt)))
    report = {"equilibrium_found": stable is not None or bool(found),
              "stable_found": stable is not None, "trials": trials, "synced": 0,
              "matched": 0, "contradictions": 0, "inconclusive": 0}
    for _ in range(trials):
        if stable is not None:
            theta0 = stable.x_star + rng.uniform(-perturb, perturb, g.n)
        else:
            theta0 = rng.uniform(0.0, TWO_PI, g.n)
        traj = simulate(sys, theta0, dt=dt, t_end=t_end, stride=stride)
        synced, _ = detect_frequency_sync(traj, tol=tol)
        report["synced"] += synced
        if stable is not None:
            matched = synced and embedded_distance(traj.unwrapped[-1], stable.x_star) < match_tol
            report["matched"] += matched
            report["contradictions"] += not matched
        elif not found:
            report["contradictions"] += synced
        else:
            report["inconclusive"] += 1
    return report
