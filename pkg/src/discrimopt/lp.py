"""Upper-level weight optimization.

Maximize t subject to w . phi[:, j] >= t for every discretized parameter j,
with w on the probability simplex: a small dense linear program.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

__all__ = ["WeightLpInstance", "WeightLpSolution", "solve_weight_lp"]


@dataclass(frozen=True)
class WeightLpInstance:
    """phi[i, j] = squared distance at candidate i under discretized theta j."""

    phi: np.ndarray

    def __post_init__(self):
        phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        if phi.size == 0:
            raise ValueError("phi matrix must be nonempty")
        if not np.all(np.isfinite(phi)):
            raise ValueError("phi matrix entries must be finite")
        if np.any(phi < 0):
            raise ValueError("phi matrix entries must be nonnegative")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @property
    def n_points(self) -> int:
        return self.phi.shape[0]

    @property
    def n_constraints(self) -> int:
        return self.phi.shape[1]


@dataclass(frozen=True)
class WeightLpSolution:
    weights: np.ndarray
    t: float
    status: str  # "optimal" | "infeasible_numerics"


def solve_weight_lp(instance: WeightLpInstance) -> WeightLpSolution:
    """Solve the maximin weight LP with the HiGHS dual simplex.

    Duplicate constraint columns are removed before solving.  Weights are
    clamped to [0, inf) and renormalized so downstream design invariants hold.
    """
    phi = instance.phi
    n = instance.n_points
    # Drop duplicate columns (repeated discretization parameters).
    phi = np.unique(phi, axis=1)
    m = phi.shape[1]

    # The solver's feasibility tolerances are absolute (floor 1e-10); typical
    # squared-distance magnitudes are far smaller, so rescale the matrix to a
    # large common magnitude and map t back afterwards.  The optimal weights
    # are scale-invariant.
    # Peaks below round-off scale mean the models are numerically identical;
    # rescaling would only amplify noise, so leave those matrices alone.
    peak = float(phi.max())
    scale = 2.0**20 / peak if peak > 1e-16 else 1.0
    phi = scale * phi

    c = np.zeros(n + 1)
    c[-1] = -1.0  # maximize t
    a_ub = np.hstack([-phi.T, np.ones((m, 1))])
    a_eq = np.concatenate([np.ones(n), [0.0]])[None, :]
    bounds = [(0.0, None)] * n + [(None, None)]
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=np.zeros(m),
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=bounds,
        method="highs",
        options={
            # Defaults (1e-7) are looser than the cutting-plane gaps the
            # caller drives toward; tighten so fresh cuts actually bind.
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )
    if not res.success or res.x is None:
        w = np.full(n, 1.0 / n) if res.x is None else np.clip(res.x[:n], 0.0, None)
        if w.sum() <= 0:
            w = np.full(n, 1.0 / n)
        w = w / w.sum()
        return WeightLpSolution(
            weights=w, t=float(np.min(w @ phi)) / scale, status="infeasible_numerics"
        )
    w = np.clip(res.x[:n], 0.0, None)
    w = w / w.sum()
    return WeightLpSolution(weights=w, t=float(res.x[-1]) / scale, status="optimal")
