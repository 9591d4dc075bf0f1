"""Config-driven experiment runner.

One JSON document describes one experiment; ``gsbp run`` validates it,
executes it, and writes delimiter-separated artifacts plus a manifest
(config echo, package version, wall time) next to the main output.  CSV
bytes are deterministic for a fixed config and seed; the manifest is not
(it carries the wall time).

Exit codes: 0 success, 2 configuration/schema failure (diagnostics name
the offending field or JSON line), 3 numerical failure (domain exit,
non-convergence, ...).  Set GSBP_LOG=debug|info|warning to control log
verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from importlib import resources

import numpy as np

from . import __version__
from .bridge import BridgeProblem, solve
from .dynamics import PhaseState, integrate, write_trajectory_csv
from .errors import ConfigError, GsbpError
from .hopf_cole import integrate_eta, symplectic_residual, to_eta, write_eta_trajectory_csv
from .metrics import (
    DiagonalPower,
    Euclidean,
    Graph,
    GraphWasserstein,
    SimplexDensity,
    metric_homogeneity_degree,
    project_mean_zero,
)
from .potentials import Entropy, Quadratic, Renyi, homogeneity_fit
from .splitting import audit_inequalities, splitting_diagnostics, write_split_csv

log = logging.getLogger("gsbp")

_FMT = "%.17g"

KINDS = ("flow", "eta_flow", "bridge", "split_audit", "symplectic_check", "homogeneity_report")

EXAMPLES = {
    "flat_bridge.cfg": "flat quadratic bridge, n=1: x=2 to y=e+1/e over T=1",
    "flat_split_audit.cfg": "split audit of the flat quadratic bridge at lambda=1",
    "flat_eta_flow.cfg": "flat quadratic flow integrated in transformed variables",
    "two_node_stationary.cfg": "uniform two-vertex entropy flow (fixed point) with split audit",
    "two_node_flow.cfg": "mild non-stationary two-vertex entropy flow with splitting columns",
    "two_node_bridge.cfg": "two-vertex entropy bridge (0.3,0.7) to (0.7,0.3)",
    "two_node_symplectic.cfg": "symplectic residual sweep on the two-vertex entropy system",
    "homogeneity_report.cfg": "homogeneity fits for the power entropy on the two-vertex graph",
}


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _require(data: dict, field: str, path: str):
    if field not in data:
        raise ConfigError(f"{path}{field}", "missing required field")
    return data[field]


def _reject_unknown(data: dict, allowed, path: str):
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{path}{key}", "unknown field")


def _number(value, field: str, positive: bool = False) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(field, f"expected a number, got {type(value).__name__}")
    if positive and not value > 0:
        raise ConfigError(field, f"must be positive, got {value}")
    return float(value)


def _vector(value, field: str) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise ConfigError(field, "expected a non-empty array of numbers")
    return np.asarray(value, dtype=float)


def _build_metric(data, base_dir: str, path: str = "metric."):
    if not isinstance(data, dict):
        raise ConfigError(path.rstrip("."), "expected an object")
    kind = _require(data, "kind", path)
    if kind == "euclidean":
        _reject_unknown(data, {"kind"}, path)
        return Euclidean()
    if kind == "diagonal_power":
        _reject_unknown(data, {"kind", "m"}, path)
        return DiagonalPower(_number(_require(data, "m", path), path + "m", positive=True))
    if kind == "graph_wasserstein":
        _reject_unknown(data, {"kind", "graph"}, path)
        spec = _require(data, "graph", path)
        try:
            if isinstance(spec, str):
                graph = Graph.from_file(os.path.join(base_dir, spec))
            elif isinstance(spec, dict):
                graph = Graph.from_dict(spec)
            else:
                raise ConfigError(path + "graph", "expected a file path or inline object")
        except GsbpError as exc:
            raise ConfigError(path + "graph", str(exc))
        except OSError as exc:
            raise ConfigError(path + "graph", str(exc))
        return GraphWasserstein(graph)
    raise ConfigError(path + "kind", f"unknown metric kind {kind!r}")


def _build_potential(data, path: str = "potential."):
    if not isinstance(data, dict):
        raise ConfigError(path.rstrip("."), "expected an object")
    kind = _require(data, "kind", path)
    try:
        if kind == "quadratic":
            _reject_unknown(data, {"kind", "W", "U"}, path)
            w_rows = _require(data, "W", path)
            if not isinstance(w_rows, list):
                raise ConfigError(path + "W", "expected a matrix (array of rows)")
            W = np.asarray(w_rows, dtype=float)
            U = _vector(data["U"], path + "U") if "U" in data else None
            return Quadratic(W, U)
        if kind == "entropy":
            _reject_unknown(data, {"kind", "gamma"}, path)
            return Entropy(_number(_require(data, "gamma", path), path + "gamma", positive=True))
        if kind == "renyi":
            _reject_unknown(data, {"kind", "gamma", "m"}, path)
            return Renyi(
                _number(_require(data, "gamma", path), path + "gamma", positive=True),
                _number(_require(data, "m", path), path + "m", positive=True),
            )
    except GsbpError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path.rstrip("."), str(exc))
    raise ConfigError(path + "kind", f"unknown potential kind {kind!r}")


_COMMON = {"kind", "metric", "potential", "output", "seed"}
_ALLOWED = {
    "flow": _COMMON | {"initial", "T", "dt", "splitting"},
    "eta_flow": _COMMON | {"initial", "T", "dt"},
    "bridge": _COMMON | {"endpoints", "T", "dt", "tol", "max_iter", "warm_start"},
    "split_audit": _COMMON | {"initial", "endpoints", "lambda", "T", "dt", "tol", "max_iter", "warm_start"},
    "symplectic_check": _COMMON | {"samples"},
    "homogeneity_report": _COMMON | {"samples"},
}


def validate_config(raw: dict, base_dir: str) -> dict:
    """Normalize and validate one experiment document.

    Returns a dict with constructed metric/potential objects and numeric
    fields; raises ConfigError naming the offending field otherwise.
    """
    if not isinstance(raw, dict):
        raise ConfigError("<document>", "top level must be an object")
    kind = _require(raw, "kind", "")
    if kind not in KINDS:
        raise ConfigError("kind", f"unknown experiment kind {kind!r}; expected one of {KINDS}")
    _reject_unknown(raw, _ALLOWED[kind], "")

    metric = _build_metric(_require(raw, "metric", ""), base_dir)
    potential = _build_potential(_require(raw, "potential", ""))
    output = _require(raw, "output", "")
    if not isinstance(output, str) or not output:
        raise ConfigError("output", "expected a non-empty path string")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed", "expected an integer")

    cfg = {"kind": kind, "metric": metric, "potential": potential, "output": output,
           "seed": seed, "raw": raw}

    if kind in ("flow", "eta_flow"):
        init = _require(raw, "initial", "")
        if not isinstance(init, dict):
            raise ConfigError("initial", "expected an object with q and p")
        _reject_unknown(init, {"q", "p"}, "initial.")
        cfg["q0"] = _vector(_require(init, "q", "initial."), "initial.q")
        cfg["p0"] = _vector(_require(init, "p", "initial."), "initial.p")
        if cfg["q0"].size != cfg["p0"].size:
            raise ConfigError("initial.p", "length differs from initial.q")
        cfg["T"] = _number(_require(raw, "T", ""), "T", positive=True)
        cfg["dt"] = _number(_require(raw, "dt", ""), "dt", positive=True)
        cfg["splitting"] = bool(raw.get("splitting", False))
    elif kind in ("bridge", "split_audit"):
        has_endpoints = "endpoints" in raw
        has_initial = "initial" in raw
        if kind == "bridge" or has_endpoints:
            ep = _require(raw, "endpoints", "")
            if not isinstance(ep, dict):
                raise ConfigError("endpoints", "expected an object with x and y")
            _reject_unknown(ep, {"x", "y"}, "endpoints.")
            cfg["x"] = _vector(_require(ep, "x", "endpoints."), "endpoints.x")
            cfg["y"] = _vector(_require(ep, "y", "endpoints."), "endpoints.y")
        elif has_initial:
            init = raw["initial"]
            if not isinstance(init, dict):
                raise ConfigError("initial", "expected an object with q and p")
            _reject_unknown(init, {"q", "p"}, "initial.")
            cfg["q0"] = _vector(_require(init, "q", "initial."), "initial.q")
            cfg["p0"] = _vector(_require(init, "p", "initial."), "initial.p")
        else:
            raise ConfigError("endpoints", "split_audit needs either endpoints or initial")
        cfg["T"] = _number(_require(raw, "T", ""), "T", positive=True)
        cfg["dt"] = _number(_require(raw, "dt", ""), "dt", positive=True)
        cfg["tol"] = _number(raw.get("tol", 1e-8), "tol", positive=True)
        max_iter = raw.get("max_iter", 60)
        if not isinstance(max_iter, int) or isinstance(max_iter, bool) or max_iter <= 0:
            raise ConfigError("max_iter", "expected a positive integer")
        cfg["max_iter"] = max_iter
        cfg["warm_start"] = bool(raw.get("warm_start", False))
        if kind == "split_audit":
            cfg["lambda"] = _number(_require(raw, "lambda", ""), "lambda")
    else:
        samples = raw.get("samples", 100)
        if not isinstance(samples, int) or isinstance(samples, bool) or samples <= 0:
            raise ConfigError("samples", "expected a positive integer")
        cfg["samples"] = samples
    return cfg


def _load_document(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}", exc.msg)
    except OSError as exc:
        raise ConfigError(path, str(exc))


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------


def _random_state(metric, potential, rng) -> PhaseState:
    """A random valid phase state for residual sweeps (seeded, retried)."""
    n = getattr(getattr(metric, "graph", None), "n", None) or getattr(potential, "n", None) or 2
    for _ in range(100):
        if getattr(metric, "is_simplex", False):
            q = rng.dirichlet(np.full(n, 3.0))
            if np.any(q < 1e-3):
                continue
            p = project_mean_zero(rng.normal(scale=0.4, size=n))
        elif metric.kind == "diagonal_power":
            q = 0.5 + rng.random(n)
            p = rng.normal(scale=0.3, size=n)
        else:
            q = rng.normal(size=n)
            p = rng.normal(size=n)
        state = PhaseState(q, p)
        try:
            to_eta(potential, state)
        except GsbpError:
            continue
        return state
    raise GsbpError("could not draw a valid random state in 100 attempts")


def _domain_samples(metric, potential, rng, count: int):
    simplex = getattr(metric, "is_simplex", False) or potential.kind in ("entropy", "renyi")
    n = getattr(getattr(metric, "graph", None), "n", None) or getattr(potential, "n", None) or 3
    out = []
    for _ in range(count):
        if simplex:
            out.append(rng.dirichlet(np.full(n, 2.0)) * 0.98 + 0.02 / n)
        elif metric.kind == "diagonal_power":
            out.append(0.5 + rng.random(n))
        else:
            out.append(rng.normal(size=n))
    return out


def _run_flow(cfg) -> list[str]:
    metric, potential = cfg["metric"], cfg["potential"]
    p0 = cfg["p0"]
    if getattr(metric, "is_simplex", False):
        SimplexDensity(cfg["q0"])
        p0 = project_mean_zero(p0)
    traj = integrate(metric, potential, PhaseState(cfg["q0"], p0), cfg["T"], cfg["dt"])
    if cfg["splitting"]:
        traj.diagnostics.update(splitting_diagnostics(traj, potential, metric))
    write_trajectory_csv(traj, cfg["output"])
    return [cfg["output"]]


def _run_eta_flow(cfg) -> list[str]:
    metric, potential = cfg["metric"], cfg["potential"]
    p0 = cfg["p0"]
    if getattr(metric, "is_simplex", False):
        SimplexDensity(cfg["q0"])
        p0 = project_mean_zero(p0)
    pair0 = to_eta(potential, PhaseState(cfg["q0"], p0))
    traj = integrate_eta(metric, potential, pair0, cfg["T"], cfg["dt"])
    write_eta_trajectory_csv(traj, cfg["output"])
    return [cfg["output"]]


def _solve_bridge(cfg):
    problem = BridgeProblem(
        metric=cfg["metric"], potential=cfg["potential"], x=cfg["x"], y=cfg["y"],
        T=cfg["T"], dt=cfg["dt"], tol=cfg["tol"], max_iter=cfg["max_iter"],
    )
    return solve(problem, warm_start=cfg["warm_start"])


def _run_bridge(cfg) -> list[str]:
    result = _solve_bridge(cfg)
    write_trajectory_csv(result.trajectory, cfg["output"])
    log.info("bridge converged: residual %.3e, action %.12g", result.residual, result.action)
    return [cfg["output"]]


def _run_split_audit(cfg) -> list[str]:
    metric, potential = cfg["metric"], cfg["potential"]
    if "x" in cfg:
        traj = _solve_bridge(cfg).trajectory
    else:
        p0 = cfg["p0"]
        if getattr(metric, "is_simplex", False):
            SimplexDensity(cfg["q0"])
            p0 = project_mean_zero(p0)
        traj = integrate(metric, potential, PhaseState(cfg["q0"], p0), cfg["T"], cfg["dt"])
    report = audit_inequalities(traj, potential, metric, cfg["lambda"])
    write_split_csv(report, cfg["output"])
    stem, ext = os.path.splitext(cfg["output"])
    traj_path = f"{stem}_trajectory{ext or '.csv'}"
    traj.diagnostics.update(splitting_diagnostics(traj, potential, metric))
    write_trajectory_csv(traj, traj_path)
    log.info("split audit: min slack %.3e (%s)", report.min_slack,
             "pass" if report.passed else "FAIL")
    return [cfg["output"], traj_path]


def _run_symplectic_check(cfg) -> list[str]:
    metric, potential = cfg["metric"], cfg["potential"]
    rng = np.random.default_rng(cfg["seed"])
    rows = []
    for k in range(cfg["samples"]):
        state = _random_state(metric, potential, rng)
        check = symplectic_residual(metric, potential, to_eta(potential, state))
        rows.append((k, check.flow_residual, check.form_residual))
    with open(cfg["output"], "w", newline="") as fh:
        fh.write("sample,flow_residual,form_residual\n")
        for k, flow, form in rows:
            fh.write(f"{k},{_FMT % flow},{_FMT % form}\n")
    return [cfg["output"]]


def _run_homogeneity_report(cfg) -> list[str]:
    metric, potential = cfg["metric"], cfg["potential"]
    rng = np.random.default_rng(cfg["seed"])
    samples = _domain_samples(metric, potential, rng, cfg["samples"])
    constrained = potential.kind in ("entropy", "renyi")
    fit = homogeneity_fit(potential, samples, constrained=constrained)
    m_hat, m_res = metric_homogeneity_degree(metric, samples)
    with open(cfg["output"], "w", newline="") as fh:
        fh.write("object,kind,degree,offset,residual\n")
        fh.write(f"potential,{potential.kind},{_FMT % fit.a},{_FMT % fit.b},{_FMT % fit.residual}\n")
        fh.write(f"metric,{metric.kind},{_FMT % m_hat},nan,{_FMT % m_res}\n")
    return [cfg["output"]]


_RUNNERS = {
    "flow": _run_flow,
    "eta_flow": _run_eta_flow,
    "bridge": _run_bridge,
    "split_audit": _run_split_audit,
    "symplectic_check": _run_symplectic_check,
    "homogeneity_report": _run_homogeneity_report,
}


def run_config(path: str) -> list[str]:
    """Validate and execute one config; returns written artifact paths."""
    started = time.perf_counter()
    resolved = _resolve_config_path(path)
    raw = _load_document(resolved)
    cfg = validate_config(raw, base_dir=os.path.dirname(resolved))
    artifacts = _RUNNERS[cfg["kind"]](cfg)
    manifest = {
        "config": raw,
        "config_path": str(resolved),
        "version": __version__,
        "wall_time_s": time.perf_counter() - started,
        "artifacts": artifacts,
    }
    manifest_path = cfg["output"] + ".manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return artifacts + [manifest_path]


def _resolve_config_path(path: str) -> str:
    if os.path.exists(path):
        return path
    name = os.path.basename(path)
    if name in EXAMPLES:
        ref = resources.files("gsbp").joinpath("examples", name)
        if ref.is_file():
            return str(ref)
    raise ConfigError(path, "config file not found (and not a bundled example)")


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gsbp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="validate and execute experiment configs")
    p_run.add_argument("configs", nargs="+", metavar="config")
    p_val = sub.add_parser("validate", help="validate configs without executing")
    p_val.add_argument("configs", nargs="+", metavar="config")
    sub.add_parser("list-examples", help="list bundled example configs")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("GSBP_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)

    if args.command == "list-examples":
        for name, desc in EXAMPLES.items():
            print(f"{name:28s} {desc}")
        return 0

    status = 0
    for path in args.configs:
        try:
            if args.command == "validate":
                resolved = _resolve_config_path(path)
                validate_config(_load_document(resolved), base_dir=os.path.dirname(resolved))
                print(f"{path}: ok")
            else:
                artifacts = run_config(path)
                print(f"{path}: wrote {', '.join(artifacts)}")
        except ConfigError as exc:
            print(f"{path}: config error: {exc}", file=sys.stderr)
            status = max(status, 2)
        except GsbpError as exc:
            print(f"{path}: {type(exc).__name__}: {exc}", file=sys.stderr)
            status = max(status, 3)
    return status


if __name__ == "__main__":
    sys.exit(main())
