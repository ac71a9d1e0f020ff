"""Experiment configuration: strict JSON parsing and canonical serialisation.

Configs are plain JSON with complex numbers written as ``[re, im]`` pairs.
Unknown fields are rejected with the offending path, so typos fail loudly.
The canonical writer (sorted keys, floats at 17 significant digits) makes
result files byte-reproducible and gives configs a stable content hash.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .coupling import CouplingSpec
from .disorder import DisorderModel
from .environment import EnvironmentSpec, SymbolFunction
from .walk import WalkSpec, cycle_star_vector, hadamard_coin, random_coin, rotation_coin

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "canonical_json",
    "config_hash",
    "encode_complex_matrix",
    "encode_complex_vector",
]

COMMANDS = ("validate", "asymptotic", "flux", "profile", "simulate",
            "oracle_check", "disorder_dos", "averaged_density")


class ConfigError(ValueError):
    """Malformed experiment configuration; the message carries the field path."""


# ---------------------------------------------------------------------------
# canonical JSON


def _format_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ConfigError("non-finite floats cannot be serialised")
    if float(x).is_integer() and abs(x) < 1e16:
        return f"{x:.1f}"
    return f"{x:.17g}"


def _canonical(obj, out: list):
    if isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise ConfigError("JSON object keys must be strings")
            if i:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _canonical(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _canonical(item, out)
        out.append("]")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise ConfigError(f"cannot serialise {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, 17-significant-digit floats."""
    out: list = []
    _canonical(obj, out)
    return "".join(out)


def config_hash(obj) -> str:
    """Content hash of the canonicalised configuration."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def encode_complex_vector(v) -> list:
    return [[float(np.real(z)), float(np.imag(z))] for z in np.asarray(v).ravel()]


def encode_complex_matrix(M) -> list:
    return [encode_complex_vector(row) for row in np.asarray(M)]


# ---------------------------------------------------------------------------
# parsing helpers


def _check_keys(section: dict, allowed, path: str):
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}: unknown field")


def _complex_scalar(value, path: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(x, (int, float)) for x in value)):
        return complex(value[0], value[1])
    raise ConfigError(f"{path}: expected a number or an [re, im] pair")


def _complex_vector(value, path: str) -> np.ndarray:
    if not isinstance(value, list):
        raise ConfigError(f"{path}: expected a list")
    return np.array([_complex_scalar(x, f"{path}[{i}]") for i, x in enumerate(value)])


def _complex_matrix(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty list of rows")
    return np.array([_complex_vector(row, f"{path}[{i}]") for i, row in enumerate(value)])


def _parse_coins(section, n: int, dim: int, path: str) -> list:
    _check_keys(section, {"kind", "thetas", "seed", "matrices"}, path)
    kind = section.get("kind")
    if kind == "hadamard":
        if dim != 2:
            raise ConfigError(f"{path}: hadamard coins are 2x2")
        return [hadamard_coin()] * n
    if kind == "rotation":
        thetas = section.get("thetas")
        if not isinstance(thetas, list) or len(thetas) != n:
            raise ConfigError(f"{path}.thetas: need {n} angles")
        return [rotation_coin(float(t)) for t in thetas]
    if kind == "random":
        rng = np.random.default_rng(int(section.get("seed", 0)))
        return [random_coin(dim, rng) for _ in range(n)]
    if kind == "explicit":
        mats = section.get("matrices")
        if not isinstance(mats, list) or len(mats) != n:
            raise ConfigError(f"{path}.matrices: need {n} matrices")
        return [_complex_matrix(mat, f"{path}.matrices[{i}]") for i, mat in enumerate(mats)]
    raise ConfigError(f"{path}.kind: unknown coin kind {kind!r}")


def _parse_walk(section, path="walk") -> WalkSpec:
    _check_keys(section, {"kind", "n", "r", "coins", "edge_coloring", "matrix",
                          "star_site", "star_spin", "star_vector"}, path)
    kind = section.get("kind")
    if kind == "cycle":
        n = int(section.get("n", 0))
        coins = _parse_coins(section.get("coins", {}), n, 2, f"{path}.coins")
        star = None
        if "star_vector" in section:
            star = _complex_vector(section["star_vector"], f"{path}.star_vector")
        elif "star_site" in section or "star_spin" in section:
            star = cycle_star_vector(n, int(section.get("star_site", 0)),
                                     int(section.get("star_spin", -1)))
        return WalkSpec(kind="cycle", n=n, coins=coins, star_vector=star)
    if kind == "regular_graph":
        n, r = int(section.get("n", 0)), int(section.get("r", 0))
        coloring = section.get("edge_coloring")
        if not isinstance(coloring, list) or len(coloring) != n:
            raise ConfigError(f"{path}.edge_coloring: need an n x r table of targets")
        table = {(nu, a): int(coloring[nu][a]) for nu in range(n) for a in range(r)}
        coins = _parse_coins(section.get("coins", {}), n, r, f"{path}.coins")
        star = None
        if "star_vector" in section:
            star = _complex_vector(section["star_vector"], f"{path}.star_vector")
        return WalkSpec(kind="regular_graph", n=n, r=r, coins=coins,
                        edge_coloring=table, star_vector=star)
    if kind == "raw":
        if "matrix" not in section or "star_vector" not in section:
            raise ConfigError(f"{path}: raw walks need matrix and star_vector")
        return WalkSpec(kind="raw",
                        matrix=_complex_matrix(section["matrix"], f"{path}.matrix"),
                        star_vector=_complex_vector(section["star_vector"],
                                                    f"{path}.star_vector"))
    raise ConfigError(f"{path}.kind: unknown walk kind {kind!r}")


def _parse_environment(section, path="environment") -> EnvironmentSpec:
    _check_keys(section, {"m", "unitary", "symbol_functions", "gap_tol"}, path)
    m = int(section.get("m", 1))
    unitary = section.get("unitary", {"kind": "identity"})
    _check_keys(unitary, {"kind", "matrix", "phases", "vectors"}, f"{path}.unitary")
    if unitary.get("kind") == "identity" or (not unitary.get("kind") and "matrix" not in unitary
                                             and "phases" not in unitary):
        if m != 1:
            raise ConfigError(f"{path}.unitary: identity has degenerate spectrum for m > 1")
        U = np.eye(1)
    elif "matrix" in unitary:
        U = _complex_matrix(unitary["matrix"], f"{path}.unitary.matrix")
    elif "phases" in unitary:
        phases = [float(x) for x in unitary["phases"]]
        if "vectors" in unitary:
            X = _complex_matrix(unitary["vectors"], f"{path}.unitary.vectors")
        else:
            X = np.eye(len(phases))
        U = X @ np.diag(np.exp(1j * np.array(phases))) @ X.conj().T
    else:
        raise ConfigError(f"{path}.unitary: give a kind, matrix, or phase list")
    funcs = section.get("symbol_functions")
    if not isinstance(funcs, list) or len(funcs) != m:
        raise ConfigError(f"{path}.symbol_functions: need {m} entries")
    functions = []
    for i, f in enumerate(funcs):
        _check_keys(f, {"coefficients"}, f"{path}.symbol_functions[{i}]")
        coeffs = [_complex_scalar(c, f"{path}.symbol_functions[{i}].coefficients[{j}]")
                  for j, c in enumerate(f.get("coefficients", []))]
        functions.append(SymbolFunction(tuple(coeffs)))
    gap_tol = float(section.get("gap_tol", 1e-8))
    return EnvironmentSpec(U, functions, gap_tol=gap_tol)


def _parse_disorder(section, path="disorder") -> DisorderModel:
    _check_keys(section, {"t", "r", "n", "distribution", "theta0", "halfwidth", "seed"}, path)
    return DisorderModel(
        t=float(section.get("t", 0.0)),
        r=float(section.get("r", 0.0)),
        n=int(section.get("n", 0)),
        distribution=section.get("distribution", "point"),
        theta0=float(section.get("theta0", 0.0)),
        halfwidth=float(section.get("halfwidth", 0.0)),
        seed=int(section.get("seed", 0)),
    )


OPTION_FIELDS = {
    "steps", "samples", "bins", "grid_size", "window", "t_max", "tail_tol",
    "leakage_tol", "krylov_tol", "horizon_tol", "export_matrices",
}


@dataclass
class ExperimentConfig:
    """Parsed experiment description."""

    command: str | None
    raw: dict
    seed: int = 0
    output_dir: str | None = None
    walk: WalkSpec | None = None
    environment: EnvironmentSpec | None = None
    alpha_values: list = field(default_factory=list)
    coupling_v: np.ndarray | None = None
    disorder: DisorderModel | None = None
    options: dict = field(default_factory=dict)

    def coupling(self, alpha: float | None = None) -> CouplingSpec:
        if alpha is None:
            if len(self.alpha_values) != 1:
                raise ConfigError("this command needs a single alpha (not a sweep)")
            alpha = self.alpha_values[0]
        _, psi = self.walk.build()
        return CouplingSpec(alpha, self.coupling_v, psi)

    @property
    def inputs_hash(self) -> str:
        return config_hash(self.raw)


def parse_config(data: dict) -> ExperimentConfig:
    _check_keys(data, {"command", "seed", "output_dir", "walk", "environment",
                       "coupling", "disorder", "options"}, "config")
    command = data.get("command")
    if command is not None and command not in COMMANDS:
        raise ConfigError(f"config.command: unknown command {command!r}")
    options = data.get("options", {})
    _check_keys(options, OPTION_FIELDS, "config.options")
    for key, value in options.items():
        if key.endswith("_tol") and not (isinstance(value, (int, float)) and value > 0):
            raise ConfigError(f"config.options.{key}: tolerances must be positive")

    cfg = ExperimentConfig(command=command, raw=data,
                           seed=int(data.get("seed", 0)),
                           output_dir=data.get("output_dir"),
                           options=dict(options))
    if "walk" in data:
        cfg.walk = _parse_walk(data["walk"])
    if "environment" in data:
        cfg.environment = _parse_environment(data["environment"])
    if "coupling" in data:
        section = data["coupling"]
        _check_keys(section, {"alpha", "alpha_sweep", "v"}, "config.coupling")
        if "alpha" in section and "alpha_sweep" in section:
            raise ConfigError("config.coupling: give alpha or alpha_sweep, not both")
        if "alpha" in section:
            cfg.alpha_values = [float(section["alpha"])]
        elif "alpha_sweep" in section:
            cfg.alpha_values = [float(a) for a in section["alpha_sweep"]]
        if "v" in section:
            v = _complex_vector(section["v"], "config.coupling.v")
        else:
            if cfg.environment is None or cfg.environment.m != 1:
                raise ConfigError("config.coupling.v: required unless m = 1")
            v = np.array([1.0 + 0.0j])
        cfg.coupling_v = v
    if "disorder" in data:
        cfg.disorder = _parse_disorder(data["disorder"])
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    return parse_config(data)
