"""JSON run configuration: parsing, validation and normalization.

A configuration has five blocks::

    {
      "domain": {"dim": 3, "n_per_axis": 15, "lengths": 1.0},
      "omega": 0.0,                       # or {"times_lambda1": c}, or "omega_list": [...]
      "boundary": {"h1": 0.0, "h2": 0.0},
      "nonlinearity": {"family": "power", "p": 5.0, "mu": 5.0, "r": 1.0, "amplitude": 1.0},
      "solver": {"seed": 42, "deflation_count": 3, ...}
    }

Boundary data are a number (constant on every face), ``{"faces": {"x0": a,
...}, "default": b}`` or ``{"file": path}`` (a lifted field file whose
boundary layer is used). A nodal amplitude may be ``{"file": path}`` as well.
Relative paths resolve against the configuration file's directory.

Normalization: scalars are expanded to per-axis lists, boundary numbers to
the ``faces``/``default`` form, file paths to absolute paths and every
omitted key to its default. :meth:`RunConfig.to_dict` returns this form and
parsing it again yields an equal configuration.
"""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

__all__ = ["ConfigError", "RunConfig", "load_config", "default_config_path", "SOLVER_DEFAULTS"]

FACE_KEYS = ("x0", "x1", "y0", "y1", "z0", "z1")

SOLVER_DEFAULTS: dict[str, Any] = {
    "tol": 1e-6,
    "max_iters": 2000,
    "path_nodes": 21,
    "deflation_count": 3,
    "max_attempts": None,
    "seed": 42,
    "chi_safety": 1.05,
    "linear_method": "auto",
    "linear_rtol": 1e-10,
    "geometry": True,
    "geometry_samples": 64,
    "trivial_threshold": 1e-6,
    "separation": 1e-3,
}

NONLINEARITY_DEFAULTS: dict[str, Any] = {"family": "power", "p": 5.0, "mu": None, "r": 1.0, "amplitude": 1.0}

ENV_SEED = "SBPSOLVER_SEED"
ENV_THREADS = "SBPSOLVER_THREADS"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


def _reject_unknown(block: dict, allowed, where: str) -> None:
    for key in block:
        if key not in allowed:
            raise ConfigError(f"unknown key '{where + '.' if where else ''}{key}'")


def _need_dict(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be an object")
    return value


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{where} must be a finite number")
    return float(value)


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer")
    return int(value)


def _per_axis(value, dim: int, where: str, cast) -> list:
    if isinstance(value, list):
        if len(value) != dim:
            raise ConfigError(f"{where} needs {dim} entries, got {len(value)}")
        return [cast(v, f"{where}[{i}]") for i, v in enumerate(value)]
    return [cast(value, where)] * dim


def _resolve(path: str, base: Path | None) -> str:
    p = Path(path)
    if not p.is_absolute() and base is not None:
        p = base / p
    return str(p.resolve())


def _omega(value, where: str):
    if isinstance(value, dict):
        _reject_unknown(value, ("times_lambda1",), where)
        if "times_lambda1" not in value:
            raise ConfigError(f"{where} object needs 'times_lambda1'")
        return {"times_lambda1": _number(value["times_lambda1"], f"{where}.times_lambda1")}
    return _number(value, where)


def _boundary_value(value, dim: int, where: str, base: Path | None) -> dict:
    if isinstance(value, dict):
        if "file" in value:
            _reject_unknown(value, ("file",), where)
            if not isinstance(value["file"], str):
                raise ConfigError(f"{where}.file must be a path")
            return {"file": _resolve(value["file"], base)}
        _reject_unknown(value, ("faces", "default"), where)
        faces = _need_dict(value.get("faces", {}), f"{where}.faces")
        allowed = FACE_KEYS[: 2 * dim]
        _reject_unknown(faces, allowed, f"{where}.faces")
        return {
            "faces": {k: _number(faces[k], f"{where}.faces.{k}") for k in allowed if k in faces},
            "default": _number(value.get("default", 0.0), f"{where}.default"),
        }
    return {"faces": {}, "default": _number(value, where)}


@dataclass(frozen=True)
class RunConfig:
    """Validated, normalized run configuration (see the module docstring)."""

    domain: dict
    omegas: tuple
    omega_is_list: bool
    boundary: dict
    nonlinearity: dict
    solver: dict

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str | Path | None = None) -> RunConfig:
        raw = _need_dict(copy.deepcopy(raw), "configuration")
        base = Path(base_dir) if base_dir is not None else None
        _reject_unknown(raw, ("domain", "omega", "omega_list", "boundary", "nonlinearity", "solver"), "")

        dom = _need_dict(raw.get("domain", {}), "domain")
        _reject_unknown(dom, ("dim", "n_per_axis", "lengths"), "domain")
        dim = _int(dom.get("dim", 3), "domain.dim")
        if dim not in (1, 2, 3):
            raise ConfigError(f"domain.dim must be 1, 2 or 3, got {dim}")
        n = _per_axis(dom.get("n_per_axis", 15), dim, "domain.n_per_axis", _int)
        if any(k < 3 for k in n):
            raise ConfigError(f"domain.n_per_axis must be >= 3, got {n}")
        lengths = _per_axis(dom.get("lengths", 1.0), dim, "domain.lengths", _number)
        if any(x <= 0 for x in lengths):
            raise ConfigError(f"domain.lengths must be positive, got {lengths}")
        domain = {"dim": dim, "n_per_axis": n, "lengths": lengths}

        if "omega" in raw and "omega_list" in raw:
            raise ConfigError("give either 'omega' or 'omega_list', not both")
        if "omega_list" in raw:
            lst = raw["omega_list"]
            if not isinstance(lst, list) or not lst:
                raise ConfigError("omega_list must be a non-empty list")
            omegas = tuple(_omega(w, f"omega_list[{i}]") for i, w in enumerate(lst))
            is_list = True
        else:
            omegas = (_omega(raw.get("omega", 0.0), "omega"),)
            is_list = False

        bnd = _need_dict(raw.get("boundary", {}), "boundary")
        _reject_unknown(bnd, ("h1", "h2"), "boundary")
        boundary = {k: _boundary_value(bnd.get(k, 0.0), dim, f"boundary.{k}", base) for k in ("h1", "h2")}

        nl = _need_dict(raw.get("nonlinearity", {}), "nonlinearity")
        _reject_unknown(nl, tuple(NONLINEARITY_DEFAULTS), "nonlinearity")
        nl = {**NONLINEARITY_DEFAULTS, **nl}
        family = nl["family"]
        if family not in ("power", "zero"):
            raise ConfigError(f"nonlinearity.family must be 'power' or 'zero', got {family!r}")
        p = _number(nl["p"], "nonlinearity.p")
        mu = p if nl["mu"] is None else _number(nl["mu"], "nonlinearity.mu")
        r = _number(nl["r"], "nonlinearity.r")
        amp = nl["amplitude"]
        if isinstance(amp, dict):
            _reject_unknown(amp, ("file",), "nonlinearity.amplitude")
            if not isinstance(amp.get("file"), str):
                raise ConfigError("nonlinearity.amplitude.file must be a path")
            amp = {"file": _resolve(amp["file"], base)}
        else:
            amp = _number(amp, "nonlinearity.amplitude")
            if amp < 0:
                raise ConfigError("nonlinearity.amplitude must be nonnegative")
        if family == "power":
            if not 4.0 < p < 6.0:
                raise ConfigError(f"nonlinearity.p: exponent p outside (4,6), got {p}")
            if not mu > 4.0:
                raise ConfigError(f"nonlinearity.mu: must exceed 4, got {mu}")
        if not r > 0:
            raise ConfigError(f"nonlinearity.r: must be positive, got {r}")
        nonlinearity = {"family": family, "p": p, "mu": mu, "r": r, "amplitude": amp}

        sol = _need_dict(raw.get("solver", {}), "solver")
        _reject_unknown(sol, tuple(SOLVER_DEFAULTS), "solver")
        sol = {**SOLVER_DEFAULTS, **sol}
        solver = {
            "tol": _number(sol["tol"], "solver.tol"),
            "max_iters": _int(sol["max_iters"], "solver.max_iters"),
            "path_nodes": _int(sol["path_nodes"], "solver.path_nodes"),
            "deflation_count": _int(sol["deflation_count"], "solver.deflation_count"),
            "max_attempts": None if sol["max_attempts"] is None else _int(sol["max_attempts"], "solver.max_attempts"),
            "seed": _int(sol["seed"], "solver.seed"),
            "chi_safety": _number(sol["chi_safety"], "solver.chi_safety"),
            "linear_method": sol["linear_method"],
            "linear_rtol": _number(sol["linear_rtol"], "solver.linear_rtol"),
            "geometry": sol["geometry"],
            "geometry_samples": _int(sol["geometry_samples"], "solver.geometry_samples"),
            "trivial_threshold": _number(sol["trivial_threshold"], "solver.trivial_threshold"),
            "separation": _number(sol["separation"], "solver.separation"),
        }
        if solver["linear_method"] not in ("auto", "direct", "cg"):
            raise ConfigError("solver.linear_method must be 'auto', 'direct' or 'cg'")
        if not isinstance(solver["geometry"], bool):
            raise ConfigError("solver.geometry must be true or false")
        for key in ("tol", "linear_rtol", "trivial_threshold", "separation", "chi_safety"):
            if not solver[key] > 0:
                raise ConfigError(f"solver.{key} must be positive")
        for key in ("max_iters", "deflation_count", "geometry_samples"):
            if solver[key] < 1:
                raise ConfigError(f"solver.{key} must be at least 1")
        if solver["path_nodes"] < 3:
            raise ConfigError("solver.path_nodes must be at least 3")
        return cls(domain, omegas, is_list, boundary, nonlinearity, solver)

    def to_dict(self) -> dict:
        out = {"domain": copy.deepcopy(self.domain)}
        if self.omega_is_list:
            out["omega_list"] = copy.deepcopy(list(self.omegas))
        else:
            out["omega"] = copy.deepcopy(self.omegas[0])
        out["boundary"] = copy.deepcopy(self.boundary)
        out["nonlinearity"] = copy.deepcopy(self.nonlinearity)
        out["solver"] = copy.deepcopy(self.solver)
        return out

    def with_env_overrides(self, env=None) -> tuple[RunConfig, dict]:
        """Apply ``SBPSOLVER_SEED``; returns the new config and the overrides used."""
        env = os.environ if env is None else env
        used = {}
        solver = dict(self.solver)
        if env.get(ENV_SEED):
            try:
                solver["seed"] = int(env[ENV_SEED])
            except ValueError as exc:
                raise ConfigError(f"environment {ENV_SEED} must be an integer") from exc
            used[ENV_SEED] = solver["seed"]
        cfg = RunConfig(self.domain, self.omegas, self.omega_is_list, self.boundary, self.nonlinearity, solver)
        return cfg, used


def threads_from_env(env=None) -> int:
    env = os.environ if env is None else env
    raw = env.get(ENV_THREADS)
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"environment {ENV_THREADS} must be an integer") from exc
    if n < 1:
        raise ConfigError(f"environment {ENV_THREADS} must be at least 1")
    return n


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"configuration file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration file {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(raw, base_dir=path.parent)


def default_config_path() -> Path:
    """Path of the bundled default configuration."""
    return Path(str(resources.files("sbpsolver") / "data" / "default_config.json"))
