"""Design optimization algorithms.

A generic Blankenship & Falk engine for linear semi-infinite programs, its
specialization to T-optimal weights on a fixed candidate set (the inner
discretization loop), the outer loop that adaptively grows both the
candidate set and the parameter discretization, a Vector Direction Method
baseline, and equivalence-theorem verification.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np

from .core import (
    Design,
    DesignError,
    DesignSpace,
    ModelPair,
    canonical_key,
    mix_designs,
    prune_design,
    squared_distance,
    t_value,
)
from .lp import WeightLpInstance, solve_weight_lp
from .lsq import FitConfig, FitResult, fit_parameters
from .search import GlobalSearchConfig, maximize_distance

__all__ = [
    "AlgoParams",
    "SolveResult",
    "IterationRecord",
    "LsipProblem",
    "OptimalityReport",
    "SolverError",
    "blankenship_falk",
    "disc_md",
    "two_adapt_md",
    "vdm",
    "check_optimality",
]

log = logging.getLogger("discrimopt")

# Consecutive non-growing, non-improving outer iterations tolerated before a
# run is declared stalled.  Accuracy is not monotone across outer iterations
# (the refit can temporarily worsen the certificate while the parameter
# discretization still tightens), so several non-improving iterations in a
# row are normal on the way to convergence.
_STALL_LIMIT = 6


class SolverError(RuntimeError):
    """A sub-solver failed; carries the iteration history gathered so far."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = tuple(history)


@dataclass(frozen=True)
class AlgoParams:
    """Algorithm parameters; defaults follow the benchmark configuration.

    For the Vector Direction Method the customary overrides are ``lam = 0``
    (all support points keep positive weight, no regularization needed) and
    ``max_iter = 1000``.
    """

    eps: float = 1e-5
    max_iter: int = 100
    n_theta_starts: int = 9
    lam: float = 1e-8
    eps_sip: float = 1e-5
    max_iter_sip: int = 20
    vdm_step_rule: str = "harmonic"  # "harmonic" | "line_search"
    prune_threshold: float = 1e-6

    def __post_init__(self):
        if self.eps <= 0 or self.eps_sip <= 0:
            raise ValueError("eps and eps_sip must be positive")
        if self.max_iter < 1 or self.max_iter_sip < 1:
            raise ValueError("iteration limits must be >= 1")
        if self.n_theta_starts < 0 or self.lam < 0:
            raise ValueError("n_theta_starts and lam must be nonnegative")
        if self.vdm_step_rule not in ("harmonic", "line_search"):
            raise ValueError(f"unknown vdm_step_rule {self.vdm_step_rule!r}")

    def fit_config(self) -> FitConfig:
        return FitConfig(n_starts=self.n_theta_starts, lam=self.lam)


@dataclass(frozen=True)
class IterationRecord:
    phase: str  # "outer" | "disc" | "vdm"
    outer_iteration: int
    inner_iteration: int | None
    t_lp: float | None
    t_value: float
    accuracy: float | None
    n_theta: int
    n_candidates: int
    lp_time: float
    ls_time: float
    global_time: float
    wall_time: float


@dataclass(frozen=True)
class SolveResult:
    design: Design
    theta_hat: np.ndarray
    t_value: float
    accuracy: float
    iterations: int
    converged: bool
    history: tuple[IterationRecord, ...]
    runtime_seconds: float
    stalled: bool = False


@dataclass(frozen=True)
class OptimalityReport:
    max_psi: float
    min_support_gap: float
    worst_point: np.ndarray

    def is_eps_optimal(self, eps: float) -> bool:
        # The support criterion alone can fire early when the fitted
        # parameters are inexact; the scan maximum must also be below eps.
        return self.min_support_gap <= eps and self.max_psi <= eps


@dataclass(frozen=True)
class LsipProblem:
    """A linear SIP in oracle form for the Blankenship & Falk engine.

    ``solve_discretized`` solves the finite-constraint relaxation over the
    current index discretization; ``minimize_constraint`` is the lower-level
    global oracle returning the most violated index for a decision;
    ``constraint`` evaluates g(decision, index).  The caller asserts that the
    initial discretization yields a compact feasible region.
    """

    solve_discretized: Callable[[Sequence[Any]], Any]
    minimize_constraint: Callable[[Any], Any]
    constraint: Callable[[Any, Any], float]
    initial_indices: Sequence[Any]


def blankenship_falk(
    problem: LsipProblem, tol: float, max_iter: int
) -> tuple[Any, list[Any], bool]:
    """Alternate finite solves and most-violated-constraint searches.

    Stops once the most violated constraint satisfies g >= -tol; the index
    discretization grows by one element per non-terminal iteration.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    indices = list(problem.initial_indices)
    if not indices:
        raise ValueError("initial index discretization must be nonempty")
    decision = None
    for _ in range(max_iter):
        decision = problem.solve_discretized(indices)
        index = problem.minimize_constraint(decision)
        g = problem.constraint(decision, index)
        indices.append(index)
        if g >= -tol:
            return decision, indices, True
    return decision, indices, False


class _PhiCache:
    """Memoizes squared distances keyed by canonically rounded (x, theta)."""

    def __init__(self, pair: ModelPair):
        self.pair = pair
        self._data: dict[tuple, float] = {}

    def __call__(self, x, theta) -> float:
        key = (canonical_key(x), canonical_key(theta))
        v = self._data.get(key)
        if v is None:
            v = squared_distance(self.pair, x, theta)
            self._data[key] = v
        return v

    def column(self, candidates, theta) -> np.ndarray:
        return np.array([self(x, theta) for x in candidates])


def disc_md(
    pair: ModelPair,
    candidates: Sequence[np.ndarray],
    initial: Design,
    theta_disc: list[np.ndarray],
    params: AlgoParams = AlgoParams(),
    *,
    phi_cache: _PhiCache | None = None,
    history: list[IterationRecord] | None = None,
    outer_iteration: int = 0,
    clock_start: float | None = None,
) -> tuple[Design, list[np.ndarray], FitResult, bool]:
    """T-optimal weights on a fixed finite candidate set.

    Alternates the weight LP over the current parameter discretization with
    the regularized weighted least-squares fit, appending each fitted
    parameter to the discretization, until the LP relaxation value and the
    true inner minimum agree to ``eps_sip``.  This is the Blankenship & Falk
    engine applied to the weight-linear semi-infinite formulation.
    """
    candidates = [np.atleast_1d(np.asarray(c, dtype=float)) for c in candidates]
    if not candidates:
        raise ValueError("candidate set must be nonempty")
    keys = {canonical_key(c) for c in candidates}
    if len(keys) != len(candidates):
        raise ValueError("candidate points must be pairwise distinct")
    if not theta_disc:
        raise ValueError("initial parameter discretization must be nonempty")

    phi = phi_cache or _PhiCache(pair)
    theta_disc = [np.atleast_1d(np.asarray(t, dtype=float)) for t in theta_disc]
    fit_cfg = params.fit_config()
    clock_start = clock_start if clock_start is not None else time.perf_counter()

    state: dict[str, Any] = {"fit": None, "warm": theta_disc[-1], "inner": 0}

    def solve_discretized(thetas):
        t0 = time.perf_counter()
        matrix = np.column_stack([phi.column(candidates, th) for th in thetas])
        sol = solve_weight_lp(WeightLpInstance(matrix))
        state["lp_time"] = time.perf_counter() - t0
        if sol.status != "optimal":
            raise SolverError(
                f"weight LP failed (status {sol.status}) at inner iteration "
                f"{state['inner']}",
                history=history or (),
            )
        return sol.weights, sol.t

    def minimize_constraint(decision):
        w, t_lp = decision
        t0 = time.perf_counter()
        fit = fit_parameters(
            pair, Design(np.array(candidates), w), warm_start=state["warm"], cfg=fit_cfg
        )
        ls_time = time.perf_counter() - t0
        state["fit"] = fit
        state["warm"] = fit.theta_hat
        state["inner"] += 1
        if history is not None:
            history.append(
                IterationRecord(
                    phase="disc",
                    outer_iteration=outer_iteration,
                    inner_iteration=state["inner"],
                    t_lp=t_lp,
                    t_value=fit.objective,
                    accuracy=None,
                    n_theta=state["inner"] + len(theta_disc),
                    n_candidates=len(candidates),
                    lp_time=state.get("lp_time", 0.0),
                    ls_time=ls_time,
                    global_time=0.0,
                    wall_time=time.perf_counter() - clock_start,
                )
            )
        return fit.theta_hat

    def constraint(decision, theta):
        w, t_lp = decision
        return float(w @ phi.column(candidates, theta)) - t_lp

    problem = LsipProblem(
        solve_discretized=solve_discretized,
        minimize_constraint=minimize_constraint,
        constraint=constraint,
        initial_indices=theta_disc,
    )
    decision, grown, converged = blankenship_falk(
        problem, tol=params.eps_sip, max_iter=params.max_iter_sip
    )
    w, _ = decision
    design = prune_design(Design(np.array(candidates), w), params.prune_threshold)
    return design, grown, state["fit"], converged


def _initial_theta_disc(pair, initial, theta_disc0, fit_cfg):
    if theta_disc0:
        return [np.atleast_1d(np.asarray(t, dtype=float)) for t in theta_disc0]
    fit = fit_parameters(pair, initial, cfg=fit_cfg)
    return [fit.theta_hat]


def _support_gap(pair, design, theta_hat, tval, phi):
    """min over support of phi(x_i, theta_hat) - T; <= 0 up to fit error."""
    return min(phi(x, theta_hat) for x in design.points) - tval


def _validate_initial(space: DesignSpace, initial: Design):
    for p in initial.points:
        if not space.contains(p):
            raise DesignError(f"initial design point {p} lies outside the design space")


def two_adapt_md(
    pair: ModelPair,
    space: DesignSpace,
    initial: Design,
    theta_disc0: Sequence[np.ndarray] | None = None,
    params: AlgoParams = AlgoParams(),
    gcfg: GlobalSearchConfig = GlobalSearchConfig(),
) -> SolveResult:
    """Nested adaptive discretization of parameters and design points.

    Each outer iteration computes weights on the current candidate set via
    :func:`disc_md`, refits the parameters on the resulting design, and adds
    the design point maximizing the squared model distance.  Terminates once
    the equivalence-theorem criterion holds at tolerance ``params.eps``:
    the support attains the criterion value and the global scan maximum
    exceeds it by at most eps.
    """
    _validate_initial(space, initial)
    t0 = time.perf_counter()
    phi = _PhiCache(pair)
    fit_cfg = params.fit_config()
    theta_disc = _initial_theta_disc(pair, initial, theta_disc0, fit_cfg)

    candidates = [p.copy() for p in initial.points]
    candidate_keys = {canonical_key(p) for p in candidates}
    history: list[IterationRecord] = []
    design = initial
    fit = None
    accuracy = np.inf
    best_accuracy = np.inf
    stall = 0
    stalled = False
    converged = False
    n = 0

    for n in range(1, params.max_iter + 1):
        design, theta_disc, fit, _ = disc_md(
            pair,
            candidates,
            design,
            theta_disc,
            params,
            phi_cache=phi,
            history=history,
            outer_iteration=n,
            clock_start=t0,
        )
        ls0 = time.perf_counter()
        fit = fit_parameters(pair, design, warm_start=fit.theta_hat, cfg=fit_cfg)
        ls_time = time.perf_counter() - ls0
        theta_disc.append(fit.theta_hat)
        tval = fit.objective

        g0 = time.perf_counter()
        x_new, max_phi = maximize_distance(
            pair, fit.theta_hat, space, gcfg, prefer=candidates
        )
        global_time = time.perf_counter() - g0
        accuracy = max_phi - tval
        support_gap = _support_gap(pair, design, fit.theta_hat, tval, phi)

        history.append(
            IterationRecord(
                phase="outer",
                outer_iteration=n,
                inner_iteration=None,
                t_lp=None,
                t_value=tval,
                accuracy=accuracy,
                n_theta=len(theta_disc),
                n_candidates=len(candidates),
                lp_time=0.0,
                ls_time=ls_time,
                global_time=global_time,
                wall_time=time.perf_counter() - t0,
            )
        )
        log.info(
            "outer %d: T=%.6e accuracy=%.2e candidates=%d thetas=%d",
            n,
            tval,
            accuracy,
            len(candidates),
            len(theta_disc),
        )

        if support_gap <= params.eps and accuracy <= params.eps:
            converged = True
            break

        key = canonical_key(x_new)
        grew = key not in candidate_keys
        if grew:
            candidates.append(np.atleast_1d(np.asarray(x_new, dtype=float)))
            candidate_keys.add(key)
        improved = accuracy < best_accuracy
        best_accuracy = min(best_accuracy, accuracy)
        if not grew and not improved:
            # The candidate set cannot grow and the criterion is not
            # improving: the discretization resolution is exhausted.
            stall += 1
            if stall >= _STALL_LIMIT:
                stalled = True
                log.warning(
                    "stalled after %d outer iterations: new point %s duplicates "
                    "an existing candidate and accuracy %.3e stopped improving",
                    n,
                    x_new,
                    accuracy,
                )
                break
        else:
            stall = 0

    return SolveResult(
        design=design,
        theta_hat=fit.theta_hat,
        t_value=fit.objective,
        accuracy=float(accuracy),
        iterations=n,
        converged=converged,
        history=tuple(history),
        runtime_seconds=time.perf_counter() - t0,
        stalled=stalled,
    )


def vdm(
    pair: ModelPair,
    space: DesignSpace,
    initial: Design,
    params: AlgoParams = AlgoParams(),
    gcfg: GlobalSearchConfig = GlobalSearchConfig(),
) -> SolveResult:
    """Vector Direction Method baseline.

    Mixes the current design with a point mass at the steepest-ascent point.
    The default step size is the harmonic rule 1/(k+2); "line_search" golden-
    sections the step, refitting the parameters at every trial step.
    """
    _validate_initial(space, initial)
    t0 = time.perf_counter()
    phi = _PhiCache(pair)
    fit_cfg = params.fit_config()
    history: list[IterationRecord] = []
    design = initial
    fit = None
    accuracy = np.inf
    converged = False
    k = 0

    for k in range(params.max_iter):
        warm = fit.theta_hat if fit is not None else None
        ls0 = time.perf_counter()
        fit = fit_parameters(pair, design, warm_start=warm, cfg=fit_cfg)
        ls_time = time.perf_counter() - ls0
        tval = fit.objective

        g0 = time.perf_counter()
        x_star, max_phi = maximize_distance(pair, fit.theta_hat, space, gcfg)
        global_time = time.perf_counter() - g0
        accuracy = max_phi - tval

        history.append(
            IterationRecord(
                phase="vdm",
                outer_iteration=k,
                inner_iteration=None,
                t_lp=None,
                t_value=tval,
                accuracy=accuracy,
                n_theta=0,
                n_candidates=design.n_points,
                lp_time=0.0,
                ls_time=ls_time,
                global_time=global_time,
                wall_time=time.perf_counter() - t0,
            )
        )

        if accuracy <= params.eps:
            converged = True
            break

        spike = Design(np.array([x_star]), np.array([1.0]))
        if params.vdm_step_rule == "harmonic":
            alpha = 1.0 / (k + 2)
        else:
            alpha = _golden_section_step(pair, design, spike, fit.theta_hat, fit_cfg)
        design = mix_designs(design, spike, alpha)

    return SolveResult(
        design=design,
        theta_hat=fit.theta_hat,
        t_value=fit.objective,
        accuracy=float(accuracy),
        iterations=k + 1,
        converged=converged,
        history=tuple(history),
        runtime_seconds=time.perf_counter() - t0,
    )


def _golden_section_step(pair, design, spike, warm, fit_cfg, iters=20):
    """Maximize T((1 - a) xi + a spike) over a in [0, 1], refitting per trial."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0

    def objective(alpha):
        mixed = mix_designs(design, spike, alpha)
        return fit_parameters(pair, mixed, warm_start=warm, cfg=fit_cfg).objective

    a, b = 0.0, 1.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = objective(c), objective(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = objective(d)
    return 0.5 * (a + b)


def check_optimality(
    pair: ModelPair,
    design: Design,
    theta_hat,
    space: DesignSpace,
    gcfg: GlobalSearchConfig = GlobalSearchConfig(),
) -> OptimalityReport:
    """Equivalence-theorem verification for a fitted design.

    ``max_psi`` is the directional derivative at the global scan maximum;
    ``min_support_gap`` is the smallest phi(x_i) - T over the support.  A
    design certifies as eps-optimal via :meth:`OptimalityReport.is_eps_optimal`.
    """
    theta_hat = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    tval = t_value(pair, design, theta_hat)
    worst, max_phi = maximize_distance(pair, theta_hat, space, gcfg)
    gaps = [squared_distance(pair, x, theta_hat) - tval for x in design.points]
    return OptimalityReport(
        max_psi=float(max_phi - tval),
        min_support_gap=float(min(gaps)),
        worst_point=worst,
    )
