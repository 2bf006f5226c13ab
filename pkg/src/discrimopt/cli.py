"""Command-line front end.

``solve`` runs an algorithm on a problem config and writes design.json,
history.csv, and (for 1-D box spaces) psi_curve.csv.  ``verify`` checks a
design file against the equivalence-theorem criterion.  ``compare`` runs
several algorithms on one problem and tabulates the results.

Exit codes: 0 success/converged, 2 non-converged termination (stall or
iteration limit), 1 error.  The ``DISCRIM_OPT_LOG`` environment variable
(error | info | debug) controls log verbosity.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .algorithms import (
    SolveResult,
    SolverError,
    check_optimality,
    disc_md,
    two_adapt_md,
    vdm,
)
from .config import ALGORITHMS, ConfigError, ProblemConfig, load_config
from .core import Box, Design, DesignError, Lattice, ModelEvaluationError, squared_distance
from .lsq import FitError, fit_parameters

__all__ = ["main", "cmd_solve", "cmd_verify", "cmd_compare"]

log = logging.getLogger("discrimopt")

_HISTORY_FIELDS = [
    "phase",
    "outer_iteration",
    "inner_iteration",
    "t_lp",
    "t_value",
    "accuracy",
    "n_theta",
    "n_candidates",
    "lp_time",
    "ls_time",
    "global_time",
    "wall_time",
]


def _fmt(value):
    """Serialize numbers at full precision (well above 12 significant digits)."""
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return value


def _write_history(records, path: Path):
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_HISTORY_FIELDS)
        writer.writeheader()
        for rec in records:
            writer.writerow({k: _fmt(v) for k, v in asdict(rec).items()})


def _write_design(result: SolveResult, path: Path):
    payload = {
        "support": [[float(c) for c in p] for p in result.design.points],
        "weights": [float(w) for w in result.design.weights],
        "theta_hat": [float(t) for t in result.theta_hat],
        "t_value": result.t_value,
        "accuracy": result.accuracy,
        "iterations": result.iterations,
        "runtime_seconds": result.runtime_seconds,
        "converged": result.converged,
    }
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _write_psi_curve(cfg: ProblemConfig, result: SolveResult, path: Path):
    space = cfg.space
    xs = np.linspace(space.lower[0], space.upper[0], cfg.psi_grid)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "psi"])
        for x in xs:
            psi = squared_distance(cfg.pair, [x], result.theta_hat) - result.t_value
            writer.writerow([_fmt(float(x)), _fmt(float(psi))])


def _load_design_file(path: Path) -> tuple[Design, np.ndarray | None]:
    try:
        payload = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read design file {path}: {exc}") from exc
    if not isinstance(payload, dict) or "support" not in payload or "weights" not in payload:
        raise ConfigError(f"design file {path} must contain 'support' and 'weights'")
    design = Design(np.array(payload["support"], dtype=float), np.array(payload["weights"], dtype=float))
    theta = payload.get("theta_hat")
    return design, None if theta is None else np.asarray(theta, dtype=float)


def _run_algorithm(name: str, cfg: ProblemConfig) -> SolveResult:
    params = cfg.params_for(name)
    if name == "2adapt":
        return two_adapt_md(cfg.pair, cfg.space, cfg.initial, None, params, cfg.gcfg)
    if name == "vdm":
        return vdm(cfg.pair, cfg.space, cfg.initial, params, cfg.gcfg)
    if name == "disc":
        return _run_disc(cfg, params)
    raise ConfigError(f"unknown algorithm {name!r}; known: {list(ALGORITHMS)}")


def _run_disc(cfg: ProblemConfig, params) -> SolveResult:
    """Fixed-candidate weight optimization: the full lattice when the design
    space is finite, otherwise the support of the initial design."""
    import time

    if isinstance(cfg.space, Lattice):
        candidates = list(cfg.space.enumerate())
    else:
        candidates = list(cfg.initial.points)
    fit0 = fit_parameters(cfg.pair, cfg.initial, cfg=params.fit_config())
    history: list = []
    t0 = time.perf_counter()
    design, _, fit, converged = disc_md(
        cfg.pair, candidates, cfg.initial, [fit0.theta_hat], params, history=history, clock_start=t0
    )
    report = check_optimality(cfg.pair, design, fit.theta_hat, cfg.space, cfg.gcfg)
    return SolveResult(
        design=design,
        theta_hat=fit.theta_hat,
        t_value=fit.objective,
        accuracy=report.max_psi,
        iterations=len(history),
        converged=converged and report.max_psi <= params.eps,
        history=tuple(history),
        runtime_seconds=time.perf_counter() - t0,
    )


def _out_dir(args, cfg: ProblemConfig) -> Path:
    out = args.out or cfg.output_dir or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _limit_threads(n):
    if n is None:
        return
    # Thread counts affect only BLAS-level parallelism, never results.
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        log.debug("threadpoolctl not installed; --threads ignored")


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    _limit_threads(args.threads)
    algorithm = args.algorithm or cfg.algorithm
    out = _out_dir(args, cfg)
    try:
        result = _run_algorithm(algorithm, cfg)
    except SolverError as exc:
        _write_history(exc.history, out / "history.csv")
        log.error("solver failed: %s (history flushed to %s)", exc, out / "history.csv")
        return 1
    _write_design(result, out / "design.json")
    _write_history(result.history, out / "history.csv")
    if cfg.emit_psi_curve and isinstance(cfg.space, Box) and cfg.space.dimension == 1:
        _write_psi_curve(cfg, result, out / "psi_curve.csv")
    print(
        f"{algorithm}: converged={result.converged} t_value={result.t_value:.6e} "
        f"accuracy={result.accuracy:.3e} iterations={result.iterations} "
        f"support={result.design.n_points} runtime={result.runtime_seconds:.1f}s"
    )
    return 0 if result.converged else 2


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    _limit_threads(getattr(args, "threads", None))
    design, theta0 = _load_design_file(Path(args.design))
    # The criterion value needs the best-fit parameters for *this* design.
    fit = fit_parameters(cfg.pair, design, warm_start=theta0, cfg=cfg.params.fit_config())
    report = check_optimality(cfg.pair, design, fit.theta_hat, cfg.space, cfg.gcfg)
    eps = cfg.params.eps
    verdict = report.is_eps_optimal(eps)
    print(f"max_psi={report.max_psi:.6e}")
    print(f"min_support_gap={report.min_support_gap:.6e}")
    print(f"worst_point={[float(c) for c in report.worst_point]}")
    print(f"eps-T-optimal at eps={eps:g}: {'yes' if verdict else 'no'}")
    return 0 if verdict else 1


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    _limit_threads(args.threads)
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    if not algorithms:
        raise ConfigError("compare: the algorithm list must be nonempty")
    for name in algorithms:
        if name not in ALGORITHMS:
            raise ConfigError(f"compare: unknown algorithm {name!r}; known: {list(ALGORITHMS)}")
    out = _out_dir(args, cfg)
    rows = []
    for name in algorithms:
        result = _run_algorithm(name, cfg)
        rows.append(
            {
                "algorithm": name,
                "reached_accuracy": _fmt(result.accuracy),
                "t_value": _fmt(result.t_value),
                "runtime_seconds": _fmt(result.runtime_seconds),
                "iterations": result.iterations,
                "support_size": result.design.n_points,
            }
        )
        print(
            f"{name}: t_value={result.t_value:.6e} accuracy={result.accuracy:.3e} "
            f"runtime={result.runtime_seconds:.1f}s"
        )
    with (out / "comparison.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=[
                "algorithm",
                "reached_accuracy",
                "t_value",
                "runtime_seconds",
                "iterations",
                "support_size",
            ],
        )
        writer.writeheader()
        writer.writerows(rows)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="discrimopt",
        description="T-optimal experimental design for model discrimination",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run a design algorithm on a problem config")
    p_solve.add_argument("--config", required=True, help="problem configuration file")
    p_solve.add_argument("--algorithm", choices=ALGORITHMS, help="override the configured algorithm")
    p_solve.add_argument("--out", help="output directory (default: config's, else cwd)")
    p_solve.add_argument("--threads", type=int, help="limit numerical thread pools")
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify", help="check a design against the optimality criterion")
    p_verify.add_argument("--design", required=True, help="design.json file")
    p_verify.add_argument("--config", required=True, help="problem configuration file")
    p_verify.set_defaults(func=cmd_verify)

    p_compare = sub.add_parser("compare", help="run several algorithms on one problem")
    p_compare.add_argument("--config", required=True, help="problem configuration file")
    p_compare.add_argument("--algorithms", required=True, help="comma-separated algorithm names")
    p_compare.add_argument("--out", help="output directory")
    p_compare.add_argument("--threads", type=int, help="limit numerical thread pools")
    p_compare.set_defaults(func=cmd_compare)
    return parser


def _configure_logging():
    level = os.environ.get("DISCRIM_OPT_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=levels.get(level, logging.ERROR),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv=None) -> int:
    _configure_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DesignError, FitError, ModelEvaluationError, SolverError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
