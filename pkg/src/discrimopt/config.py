"""Problem configuration files.

YAML key-tree with sections ``model``, ``design_space``, ``initial_design``,
``algorithm``, and ``output``.  Validation errors name the offending field by
its dotted path.  The complete schema is documented in the README and in the
two bundled example files under ``discrimopt/configs/``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .algorithms import AlgoParams
from .core import Box, Design, DesignError, DesignSpace, Lattice, ModelPair, ParameterSpace
from .models import registry_lookup
from .search import GlobalSearchConfig

__all__ = ["ConfigError", "ProblemConfig", "load_config", "params_for"]

ALGORITHMS = ("2adapt", "disc", "vdm")

_ALGO_KEYS = {
    "eps": "eps",
    "max_iter": "max_iter",
    "n_theta_starts": "n_theta_starts",
    "lambda": "lam",
    "eps_sip": "eps_sip",
    "max_iter_sip": "max_iter_sip",
    "vdm_step_rule": "vdm_step_rule",
    "prune_threshold": "prune_threshold",
}
_SEARCH_KEYS = {
    "grid_per_dim": "grid_per_dim",
    "refine_top": "refine_top",
    "local_tol": "local_tol",
    "tie_rel": "tie_rel",
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class ProblemConfig:
    pair: ModelPair
    space: DesignSpace
    initial: Design
    algorithm: str
    params: AlgoParams
    gcfg: GlobalSearchConfig
    emit_psi_curve: bool = True
    psi_grid: int = 400
    output_dir: str | None = None
    # Raw algorithm-section overrides, kept so parameters can be rebuilt for a
    # different algorithm choice (the VDM has its own customary defaults).
    algo_overrides: dict = field(default_factory=dict)

    def params_for(self, algorithm: str) -> AlgoParams:
        return params_for(algorithm, self.algo_overrides)


def params_for(algorithm: str, overrides: dict) -> AlgoParams:
    """Algorithm parameters from defaults plus explicit config overrides.

    The VDM conventionally runs unregularized (every support point keeps
    positive weight) with a higher iteration budget; explicit overrides win.
    """
    kwargs = {"max_iter": 1000, "lam": 0.0} if algorithm == "vdm" else {}
    for key, target in _ALGO_KEYS.items():
        if key in overrides:
            kwargs[target] = overrides[key]
    try:
        return AlgoParams(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"algorithm: {exc}") from exc


def _expect_mapping(node, path):
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(node).__name__}")
    return node

def _get(node: dict, key: str, path: str, required=True, default=None):
    if key not in node:
        if required:
            raise ConfigError(f"{path}.{key}: required field is missing")
        return default
    return node[key]


def _reject_unknown(node: dict, known, path: str):
    unknown = sorted(set(node) - set(known))
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {unknown}; known: {sorted(known)}")


def _float_list(node, path):
    try:
        arr = [float(v) for v in node]
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a list of numbers, got {node!r}") from None
    if not arr:
        raise ConfigError(f"{path}: list must be nonempty")
    return arr


def _parse_model(node, path="model") -> ModelPair:
    node = _expect_mapping(node, path)
    _reject_unknown(node, {"name", "reference_params", "parameter_space"}, path)
    name = _get(node, "name", path)
    if not isinstance(name, str):
        raise ConfigError(f"{path}.name: expected a string")
    params = dict(_expect_mapping(node.get("reference_params", {}), f"{path}.reference_params"))
    if "parameter_space" in node:
        ps = _expect_mapping(node["parameter_space"], f"{path}.parameter_space")
        _reject_unknown(ps, {"lower", "upper"}, f"{path}.parameter_space")
        try:
            params["parameter_space"] = ParameterSpace(
                _float_list(_get(ps, "lower", f"{path}.parameter_space"), f"{path}.parameter_space.lower"),
                _float_list(_get(ps, "upper", f"{path}.parameter_space"), f"{path}.parameter_space.upper"),
            )
        except DesignError as exc:
            raise ConfigError(f"{path}.parameter_space: {exc}") from exc
    try:
        return registry_lookup(name, params)
    except KeyError as exc:
        raise ConfigError(f"{path}: {exc.args[0]}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.reference_params: {exc}") from exc


def _parse_space(node, path="design_space") -> DesignSpace:
    node = _expect_mapping(node, path)
    kind = _get(node, "type", path)
    if kind == "box":
        _reject_unknown(node, {"type", "lower", "upper"}, path)
        try:
            return Box(
                _float_list(_get(node, "lower", path), f"{path}.lower"),
                _float_list(_get(node, "upper", path), f"{path}.upper"),
            )
        except DesignError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if kind == "lattice":
        _reject_unknown(node, {"type", "levels"}, path)
        levels = _get(node, "levels", path)
        if not isinstance(levels, list) or not levels:
            raise ConfigError(f"{path}.levels: expected a nonempty list of level lists")
        try:
            return Lattice(tuple(_float_list(lv, f"{path}.levels[{i}]") for i, lv in enumerate(levels)))
        except DesignError as exc:
            raise ConfigError(f"{path}.levels: {exc}") from exc
    raise ConfigError(f"{path}.type: must be 'box' or 'lattice', got {kind!r}")


def _parse_initial(node, space: DesignSpace, path="initial_design") -> Design:
    node = _expect_mapping(node, path)
    _reject_unknown(node, {"points", "weights"}, path)
    raw_points = _get(node, "points", path)
    if not isinstance(raw_points, list) or not raw_points:
        raise ConfigError(f"{path}.points: expected a nonempty list of points")
    points = []
    for i, p in enumerate(raw_points):
        coords = p if isinstance(p, list) else [p]
        points.append(_float_list(coords, f"{path}.points[{i}]"))
    weights = _float_list(_get(node, "weights", path), f"{path}.weights")
    try:
        design = Design(np.array(points), np.array(weights))
    except DesignError as exc:
        raise ConfigError(f"{path}.weights: {exc}") from exc
    for i, p in enumerate(design.points):
        if not space.contains(p):
            raise ConfigError(f"{path}.points[{i}]: point {p.tolist()} lies outside the design space")
    return design


def _parse_overrides(node, keymap, path, builder):
    kwargs = {}
    for key, target in keymap.items():
        if key in node:
            kwargs[target] = node[key]
    try:
        return builder(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_algorithm(node, path="algorithm"):
    node = _expect_mapping(node, path)
    _reject_unknown(node, {"name", *_ALGO_KEYS, *_SEARCH_KEYS}, path)
    name = node.get("name", "2adapt")
    if name not in ALGORITHMS:
        raise ConfigError(f"{path}.name: must be one of {list(ALGORITHMS)}, got {name!r}")
    overrides = {k: v for k, v in node.items() if k in _ALGO_KEYS}
    params = params_for(name, overrides)
    gcfg = _parse_overrides(node, _SEARCH_KEYS, path, GlobalSearchConfig)
    return name, params, gcfg, overrides


def _parse_output(node, path="output"):
    node = _expect_mapping(node or {}, path)
    _reject_unknown(node, {"directory", "emit_psi_curve", "psi_grid"}, path)
    emit = node.get("emit_psi_curve", True)
    if not isinstance(emit, bool):
        raise ConfigError(f"{path}.emit_psi_curve: expected a boolean")
    grid = node.get("psi_grid", 400)
    if not isinstance(grid, int) or grid < 2:
        raise ConfigError(f"{path}.psi_grid: expected an integer >= 2")
    directory = node.get("directory")
    if directory is not None and not isinstance(directory, str):
        raise ConfigError(f"{path}.directory: expected a string path")
    return emit, grid, directory


def load_config(path: str | Path) -> ProblemConfig:
    """Parse and validate a problem configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"config parse error in {path}{where}: {exc}") from exc
    tree = _expect_mapping(tree, "<root>")
    _reject_unknown(tree, {"model", "design_space", "initial_design", "algorithm", "output"}, "<root>")

    pair = _parse_model(_get(tree, "model", "<root>"))
    space = _parse_space(_get(tree, "design_space", "<root>"))
    initial = _parse_initial(_get(tree, "initial_design", "<root>"), space)
    name, params, gcfg, overrides = _parse_algorithm(tree.get("algorithm", {}))
    emit, grid, directory = _parse_output(tree.get("output"))
    return ProblemConfig(
        pair=pair,
        space=space,
        initial=initial,
        algorithm=name,
        params=params,
        gcfg=gcfg,
        emit_psi_curve=emit,
        psi_grid=grid,
        output_dir=directory,
        algo_overrides=overrides,
    )
