"""Command-line entry point.

Every command writes one document (JSON or CSV) to stdout or, atomically, to
``--output``.  Exit codes: 0 success, 1 domain error, 2 usage/input error;
errors are reported as a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics, maf, power, projection, sync_tests, torus
from .errors import CutsyncError
from .graph import load_graph, verify_decomposition

COMMANDS = ("analyze", "project", "embed", "alpha", "simulate", "solve", "sweep", "figures")


class UsageError(Exception):
    code = "UsageError"


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)
    seed: int = 42
    output: str | None = None
    format: str = "json"
    quiet: bool = False


def derive_seed(seed: int, name: str) -> int:
    """Independent, reproducible stream per (seed, operation name)."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None


def _vector(path, n: int, what: str) -> np.ndarray:
    v = np.asarray(_read_json(path), dtype=float)
    if v.shape != (n,):
        raise UsageError(f"{what} in {path} has shape {v.shape}, expected ({n},)")
    return v


def _system(opts) -> sync_tests.OscillatorSystem:
    g = load_graph(opts["graph"])
    return sync_tests.OscillatorSystem.from_raw(g, _vector(opts["omega"], g.n, "omega"))


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(repr(float(v)) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _alpha_config(opts, cfg, name) -> maf.MultistartConfig:
    return maf.MultistartConfig(starts=opts.get("starts", 20), iters=opts.get("iters", 500),
                                seed=derive_seed(cfg.seed, name))


def cmd_analyze(opts, cfg):
    sys_ = _system(opts)
    gammas = opts.get("gamma") or [1.0]
    alpha_cfg = _alpha_config(opts, cfg, "analyze.alpha") if opts.get("alpha") else None
    rep = sync_tests.run_all(sys_, gammas, p=opts.get("p", "inf"), alpha_config=alpha_cfg,
                             with_at1=opts.get("with_at1", False))
    if cfg.format == "csv":
        return sync_tests.margins_csv(rep)
    return rep.to_dict()


def cmd_project(opts, cfg):
    g = load_graph(opts["graph"])
    cp = projection.cutset_projection(g)
    if cfg.format == "csv":
        return _csv([f"e{j}" for j in range(g.m)], cp.P)
    out = {"projection": cp.to_dict()}
    if opts.get("check"):
        checks = {
            "decomposition": verify_decomposition(g),
            "effective_resistance_deviation": projection.effective_resistance_check(g),
            "minimal_angle": None,
        }
        if not g.is_tree:
            angle, dev = projection.minimal_angle_check(g)
            checks["minimal_angle"] = {"angle": angle, "deviation": dev}
        out["checks"] = checks
    return out


def cmd_embed(opts, cfg):
    g = load_graph(opts["graph"])
    theta = _vector(opts["theta"], g.n, "theta")
    gamma = opts["gamma"]
    return {"x": torus.embed(theta, g), "gamma": gamma,
            "memberships": torus.memberships(theta, g, gamma)}


def cmd_alpha(opts, cfg):
    g = load_graph(opts["graph"])
    est = maf.estimate_alpha(g, opts["p"], opts["gamma"], _alpha_config(opts, cfg, "alpha"))
    out = est.to_dict()
    if opts.get("brute_force"):
        out["brute_force"] = maf.brute_force_alpha(g, opts["p"], opts["gamma"],
                                                   grid=opts.get("grid", 31))
    return out


def cmd_simulate(opts, cfg):
    sys_ = _system(opts)
    n = sys_.graph.n
    if opts.get("theta0_file"):
        theta0 = _vector(opts["theta0_file"], n, "theta0")
    else:
        rng = np.random.default_rng(derive_seed(cfg.seed, "simulate.theta0"))
        theta0 = rng.uniform(0.0, torus.TWO_PI, n)
    traj = dynamics.simulate(sys_, theta0, dt=opts.get("dt"), t_end=opts.get("t_end", 100.0),
                             stride=opts.get("stride", 1))
    synced, syn = dynamics.detect_frequency_sync(traj)
    if opts.get("emit_trajectory"):
        atomic_write(opts["emit_trajectory"], _csv(
            ["t"] + [f"theta{i}" for i in range(n)],
            np.column_stack([traj.times, traj.unwrapped])))
    if cfg.format == "csv":
        return _csv(["t"] + [f"theta{i}" for i in range(n)],
                    np.column_stack([traj.times, traj.unwrapped]))
    final = traj.unwrapped[-1]
    return {"synchronized": synced, "omega_syn": syn, "t_end": float(traj.times[-1]),
            "samples": len(traj.times), "final_theta": torus.wrap(final),
            "final_frequency": traj.freq[-1],
            "final_embedded": torus.embed(final, sys_.graph)}


def cmd_solve(opts, cfg):
    sys_ = _system(opts)
    method = opts.get("method", "fixed-point")
    gamma = opts.get("gamma", math.pi / 2)
    if method == "fixed-point":
        res = dynamics.solve_fixed_point(sys_, opts.get("p", "inf"), gamma)
    elif method == "newton":
        res = dynamics.solve_newton(sys_)
    else:
        res = dynamics.solve_acyclic(sys_, gamma)
    return res.to_dict()


def _resolve_case(ref: str):
    p = Path(ref)
    if p.exists():
        return power.parse_case(p), p.stem
    try:
        return power.parse_case(power.bundled_case_path(ref)), ref
    except FileNotFoundError:
        raise FileNotFoundError(f"case {ref!r} is neither a file nor a bundled case") from None


def cmd_sweep(opts, cfg):
    reports = []
    for ref in opts["case"]:
        case, name = _resolve_case(ref)
        acfg = _alpha_config(opts, cfg, f"sweep.alpha.{name}") if opts.get("with_at1") else None
        reports.append(power.test_thresholds(case, with_at1=opts.get("with_at1", False),
                                             alpha_config=acfg,
                                             bisect_tol=opts.get("bisect_tol", 1e-4),
                                             name=name))
    if cfg.format == "csv":
        return power.table_csv(reports)
    return {"reports": [r.to_dict() for r in reports], "table_csv": power.table_csv(reports)}


def emit_figure_data(which: str, points: int = 200) -> str:
    if which == "g":
        xs = np.linspace(1.0, 20.0, points)
        return _csv(["x", "g"], [(x, sync_tests.g_function(x)) for x in xs])
    if which == "hn_comparison":
        gs = np.linspace(0.0, math.pi / 2, points, endpoint=False)
        rows = [(g, math.sin(g), math.sin(g) / 2, *(float(sync_tests.h_n(k, g)) for k in (5, 10, 20)))
                for g in gs]
        return _csv(["gamma", "sin", "sin_half", "h5", "h10", "h20"], rows)
    raise UsageError(f"unknown figure {which!r}")


def cmd_figures(opts, cfg):
    text = emit_figure_data(opts["which"], opts.get("points", 200))
    if cfg.format == "json":
        lines = text.strip().split("\n")
        return {"which": opts["which"], "columns": lines[0].split(","),
                "rows": [[float(v) for v in ln.split(",")] for ln in lines[1:]]}
    return text


SCHEMA_FOR = {
    "analyze": "sync_report", "project": "projection", "embed": "embed",
    "alpha": "maf_estimate", "simulate": "simulate", "solve": "equilibrium",
    "sweep": "sweep", "figures": "figures",
}


def load_schema(name: str) -> dict:
    from importlib import resources

    return json.loads((resources.files("cutsync") / "schemas" / f"{name}.schema.json").read_text())


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}
CSV_OK = {"analyze", "project", "simulate", "sweep", "figures"}


def run(config: RunConfig) -> int:
    try:
        if config.command not in HANDLERS:
            raise UsageError(f"unknown command {config.command!r}")
        if config.format not in ("json", "csv"):
            raise UsageError(f"unknown format {config.format!r}")
        if config.format == "csv" and config.command not in CSV_OK:
            raise UsageError(f"{config.command} has no CSV output")
        result = HANDLERS[config.command](config.options, config)
        text = result if isinstance(result, str) else dumps(result)
        if config.output:
            atomic_write(config.output, text)
            if not config.quiet:
                print(f"wrote {config.output}", file=sys.stderr)
        else:
            sys.stdout.write(text)
        return 0
    except (UsageError, FileNotFoundError, IsADirectoryError) as exc:
        code = getattr(exc, "code", "FileNotFound")
        _report_error(code, str(exc))
        return 2
    except json.JSONDecodeError as exc:
        _report_error("InvalidJSON", str(exc))
        return 2
    except CutsyncError as exc:
        _report_error(exc.code, str(exc))
        return 1
    except ValueError as exc:
        _report_error("InvalidArgument", str(exc))
        return 1


def _report_error(code: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": code, "message": message}) + "\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _p_arg(text):
    return projection.parse_p(text)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cutsync", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--output")
    ap.add_argument("--format", choices=["json", "csv"], default="json")
    ap.add_argument("--quiet", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def graph_omega(sp, omega=True):
        sp.add_argument("--graph", required=True)
        if omega:
            sp.add_argument("--omega", required=True)

    sp = sub.add_parser("analyze", help="evaluate all synchronization tests")
    graph_omega(sp)
    sp.add_argument("--gamma", type=float, action="append")
    sp.add_argument("--p", type=_p_arg, default=math.inf)
    sp.add_argument("--alpha", action="store_true", help="also estimate alpha for T1")
    sp.add_argument("--with-at1", action="store_true")
    sp.add_argument("--starts", type=int, default=20)

    sp = sub.add_parser("project", help="cutset projection and its norms")
    graph_omega(sp, omega=False)
    sp.add_argument("--check", action="store_true")

    sp = sub.add_parser("embed", help="lift a phase vector and test set memberships")
    graph_omega(sp, omega=False)
    sp.add_argument("--theta", required=True)
    sp.add_argument("--gamma", type=float, required=True)

    sp = sub.add_parser("alpha", help="minimum amplification factor")
    graph_omega(sp, omega=False)
    sp.add_argument("--p", type=_p_arg, default=math.inf)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--starts", type=int, default=100)
    sp.add_argument("--iters", type=int, default=500)
    sp.add_argument("--brute-force", action="store_true")
    sp.add_argument("--grid", type=int, default=31)

    sp = sub.add_parser("simulate", help="RK4 simulation")
    graph_omega(sp)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--t-end", type=float, default=100.0)
    sp.add_argument("--stride", type=int, default=1)
    sp.add_argument("--theta0-file")
    sp.add_argument("--emit-trajectory")

    sp = sub.add_parser("solve", help="find a synchronization manifold")
    graph_omega(sp)
    sp.add_argument("--method", choices=["fixed-point", "newton", "acyclic"], default="fixed-point")
    sp.add_argument("--gamma", type=float, default=math.pi / 2)
    sp.add_argument("--p", type=_p_arg, default=math.inf)

    sp = sub.add_parser("sweep", help="critical-ratio protocol on power cases")
    sp.add_argument("--case", action="append", required=True,
                    help="case file or bundled name (case9, case14, toy3)")
    sp.add_argument("--bisect-tol", type=float, default=1e-4)
    sp.add_argument("--with-at1", action="store_true")
    sp.add_argument("--starts", type=int, default=20)

    sp = sub.add_parser("figures", help="figure data as CSV")
    sp.add_argument("--which", choices=["g", "hn_comparison"], required=True)
    sp.add_argument("--points", type=int, default=200)
    return ap


def parse_config(argv=None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    glob = {k: ns.pop(k) for k in ("seed", "output", "format", "quiet")}
    return RunConfig(command=ns.pop("command"), options=ns, **glob)


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        _report_error("UsageError", str(exc))
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
