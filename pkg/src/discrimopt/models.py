"""Built-in benchmark model pairs.

Michaelis-Menten vs. modified Michaelis-Menten (single response), and a
partially reversible vs. irreversible consecutive reaction modelled by a
small ODE system (three responses), plus a registry for selection by name.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import ModelEvaluationError, ModelPair, ParameterSpace

__all__ = [
    "KineticsParams",
    "KineticsInput",
    "IntegratorTol",
    "mm_eval",
    "modmm_eval",
    "integrate_kinetics",
    "make_mm_pair",
    "make_kinetics_pair",
    "registry_lookup",
    "register_model",
    "registered_models",
]

_DIVISION_GUARD = 1e-15


def mm_eval(x: float, V: float, K: float) -> float:
    """Michaelis-Menten rate V*x / (K + x)."""
    denom = K + x
    if abs(denom) <= _DIVISION_GUARD:
        raise ModelEvaluationError(f"Michaelis-Menten denominator K + x = {denom} too small", x=x)
    return V * x / denom


def modmm_eval(x: float, V: float, K: float, F: float) -> float:
    """Modified Michaelis-Menten rate: V*x / (K + x) + F*x."""
    return mm_eval(x, V, K) + F * x


@dataclass(frozen=True)
class KineticsParams:
    """Rate constants and reaction orders of the consecutive-reaction system."""

    k1: float
    k2: float
    k3: float
    n1: float
    n2: float
    n3: float

    def __post_init__(self):
        vals = (self.k1, self.k2, self.k3, self.n1, self.n2, self.n3)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("kinetics parameters must be finite")
        if self.k1 < 0 or self.k2 < 0 or self.k3 < 0:
            raise ValueError("rate constants must be nonnegative")
        if self.n1 <= 0 or self.n2 <= 0 or self.n3 <= 0:
            raise ValueError("reaction orders must be positive")


@dataclass(frozen=True)
class KineticsInput:
    """Initial concentrations and the measurement time."""

    a0: float
    b0: float
    c0: float
    t: float

    def __post_init__(self):
        if self.a0 < 0 or self.b0 < 0 or self.c0 < 0:
            raise ValueError("initial concentrations must be nonnegative")
        if self.t <= 0:
            raise ValueError("measurement time must be positive")


@dataclass(frozen=True)
class IntegratorTol:
    rel: float = 1e-8
    abs: float = 1e-10


# Identical (params, input, tol) triples recur across DISC-MD iterations;
# caching must not change numerical results.
_ode_cache: dict[tuple, np.ndarray] = {}
_ode_lock = threading.Lock()


def integrate_kinetics(
    params: KineticsParams, inp: KineticsInput, tol: IntegratorTol = IntegratorTol()
) -> np.ndarray:
    """Concentrations (a, b, c) at time t via an embedded Dormand-Prince pair.

    Power-law terms are evaluated sign-safe, max(c, 0)**n, because adaptive
    steps can transiently produce tiny negative concentrations with
    non-integer orders.
    """
    key = (params, inp, tol)
    with _ode_lock:
        cached = _ode_cache.get(key)
    if cached is not None:
        return cached.copy()

    k1, k2, k3 = params.k1, params.k2, params.k3
    n1, n2, n3 = params.n1, params.n2, params.n3

    def rhs(_, y):
        a = max(y[0], 0.0)
        b = max(y[1], 0.0)
        r1 = k1 * a**n1
        r2 = k2 * b**n2
        r3 = k3 * b**n3
        return (-r1 + r3, r1 - r2 - r3, r2)

    sol = solve_ivp(
        rhs,
        (0.0, inp.t),
        (inp.a0, inp.b0, inp.c0),
        method="RK45",
        rtol=tol.rel,
        atol=tol.abs,
    )
    if not sol.success:
        raise ModelEvaluationError(
            f"kinetics integration failed at input {inp}: {sol.message}",
            x=np.array([inp.a0, inp.b0, inp.c0, inp.t]),
        )
    out = sol.y[:, -1].copy()
    with _ode_lock:
        _ode_cache[key] = out
    return out.copy()


# Reference parameter defaults for the bundled benchmark pairs.
MM_DEFAULTS = {"V": 1.0, "K": 1.0, "F": 0.1}
MM_PARAMETER_SPACE = ParameterSpace([1e-3, 1e-3], [5.0, 5.0])

KINETICS_DEFAULTS = {"k1": 0.7, "k2": 0.2, "k3": 0.1, "n1": 2.0, "n2": 2.0, "n3": 1.0}
KINETICS_PARAMETER_SPACE = ParameterSpace([0.5, 0.05, 1.5, 1.5], [1.0, 0.5, 3.5, 3.0])


def make_mm_pair(
    V: float = 1.0,
    K: float = 1.0,
    F: float = 0.1,
    parameter_space: ParameterSpace | None = None,
) -> ModelPair:
    """Modified Michaelis-Menten reference vs. Michaelis-Menten alternative.

    The reference includes the alternative (F = 0), so the roles must be this
    way around for a nonzero criterion.
    """
    space = parameter_space or MM_PARAMETER_SPACE

    def reference(x):
        return np.array([modmm_eval(float(x[0]), V, K, F)])

    def alternative(x, theta):
        return np.array([mm_eval(float(x[0]), float(theta[0]), float(theta[1]))])

    return ModelPair(reference=reference, alternative=alternative, parameter_space=space, d_y=1)


def make_kinetics_pair(
    k1: float = 0.7,
    k2: float = 0.2,
    k3: float = 0.1,
    n1: float = 2.0,
    n2: float = 2.0,
    n3: float = 1.0,
    parameter_space: ParameterSpace | None = None,
    tol: IntegratorTol = IntegratorTol(),
) -> ModelPair:
    """Partially reversible reference vs. irreversible alternative (k3 = 0).

    Design points are (a0, b0, c0, t); responses are the three concentrations
    at the measurement time.  Alternative parameters are (k1, k2, n1, n2).
    """
    space = parameter_space or KINETICS_PARAMETER_SPACE
    ref_params = KineticsParams(k1, k2, k3, n1, n2, n3)

    def reference(x):
        inp = KineticsInput(float(x[0]), float(x[1]), float(x[2]), float(x[3]))
        return integrate_kinetics(ref_params, inp, tol)

    def alternative(x, theta):
        alt_params = KineticsParams(
            float(theta[0]), float(theta[1]), 0.0, float(theta[2]), float(theta[3]), 1.0
        )
        inp = KineticsInput(float(x[0]), float(x[1]), float(x[2]), float(x[3]))
        return integrate_kinetics(alt_params, inp, tol)

    return ModelPair(reference=reference, alternative=alternative, parameter_space=space, d_y=3)


def _build_mm(params: dict) -> ModelPair:
    merged = {**MM_DEFAULTS, **params}
    unknown = set(merged) - {"V", "K", "F", "parameter_space"}
    if unknown:
        raise KeyError(f"unknown mm_vs_modmm parameters: {sorted(unknown)}")
    return make_mm_pair(
        V=float(merged["V"]),
        K=float(merged["K"]),
        F=float(merged["F"]),
        parameter_space=merged.get("parameter_space"),
    )


def _build_kinetics(params: dict) -> ModelPair:
    merged = {**KINETICS_DEFAULTS, **params}
    unknown = set(merged) - {"k1", "k2", "k3", "n1", "n2", "n3", "parameter_space", "tol"}
    if unknown:
        raise KeyError(f"unknown kinetics_rev_vs_irrev parameters: {sorted(unknown)}")
    return make_kinetics_pair(
        k1=float(merged["k1"]),
        k2=float(merged["k2"]),
        k3=float(merged["k3"]),
        n1=float(merged["n1"]),
        n2=float(merged["n2"]),
        n3=float(merged["n3"]),
        parameter_space=merged.get("parameter_space"),
        tol=merged.get("tol", IntegratorTol()),
    )


_REGISTRY = {
    "mm_vs_modmm": _build_mm,
    "kinetics_rev_vs_irrev": _build_kinetics,
}


def register_model(name: str, builder) -> None:
    """Register a user model builder: params dict -> ModelPair."""
    _REGISTRY[name] = builder


def registered_models() -> list[str]:
    return sorted(_REGISTRY)


def registry_lookup(name: str, params: dict | None = None) -> ModelPair:
    """Construct a registered model pair by name."""
    try:
        builder = _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown model {name!r}; registered: {registered_models()}"
        ) from None
    return builder(dict(params or {}))
