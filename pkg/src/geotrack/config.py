"""JSON run configuration for the command line tool.

Example::

    {
      "generators": "so3-e1e2",
      "T": 1.0,
      "x_infty": "identity",
      "x0": {"perturb_eps": 0.1, "direction": "random", "seed": 7},
      "integrator": {"method": "RKMK4", "h": 0.0005, "t_end": 50.0, "project_every": 10},
      "thresholds": {"err_final": 1e-3, "tail_a": 1e-4, "dV_min": -1e-8},
      "outputs": {"trace_csv": "trace.csv", "report_json": "report.json"}
    }

Matrices are row-major lists of rows of [re, im] pairs (plain real rows are
accepted too).  Algebra coordinates refer to the standard basis of the
group's algebra.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .analysis import Thresholds
from .integrate import IntegratorConfig, Method
from .io import matrix_from_json
from .liecore import (
    AlgebraElement,
    Family,
    GroupElement,
    GroupSpec,
    LieError,
    expm_raw,
    standard_basis,
)
from .reference import DEFAULT_BOOST
from .systems import PRESETS, ControlSystem, preset_system

SEED_ENV = "GEOTRACK_SEED"


class ConfigError(ValueError):
    """Malformed or inconsistent configuration (exit code 2)."""


@dataclass(frozen=True, eq=False)
class RunConfig:
    sys: ControlSystem
    T: float
    x_infty: GroupElement
    w0: GroupElement
    x0: GroupElement
    integrator: IntegratorConfig
    thresholds: Thresholds
    outputs: dict = field(default_factory=dict)
    boost: float = DEFAULT_BOOST
    t0: float = 0.0
    pivot: int = 0
    seed: int | None = None
    verify_samples: int = 20
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def spec(self) -> GroupSpec:
        return self.sys.spec


def _positive(value, name) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number") from exc
    if not (math.isfinite(v) and v > 0):
        raise ConfigError(f"{name} must be positive and finite, got {value!r}")
    return v


def _parse_group(raw) -> GroupSpec:
    if not isinstance(raw, dict) or "family" not in raw or "d" not in raw:
        raise ConfigError("group must be an object with 'family' and 'd'")
    try:
        fam = Family(str(raw["family"]).upper())
    except ValueError as exc:
        raise ConfigError(f"unknown group family {raw['family']!r}") from exc
    d = raw["d"]
    if not isinstance(d, int) or d < 2:
        raise ConfigError("group.d must be an integer >= 2")
    return GroupSpec(fam, d)


def _parse_system(raw: dict) -> ControlSystem:
    gens = raw.get("generators")
    if isinstance(gens, str):
        if gens not in PRESETS:
            raise ConfigError(f"unknown preset {gens!r}; choose from {sorted(PRESETS)}")
        sys = preset_system(gens)
        if "group" in raw and _parse_group(raw["group"]) != sys.spec:
            raise ConfigError("group does not match the preset's group")
        return sys
    if not isinstance(gens, list) or not gens:
        raise ConfigError("generators must be a preset name or a non-empty list of matrices")
    if "group" not in raw:
        raise ConfigError("explicit generators need a 'group' entry")
    spec = _parse_group(raw["group"])
    mats = []
    for g in gens:
        try:
            mats.append(AlgebraElement(spec, matrix_from_json(g)))
        except (ValueError, LieError) as exc:
            raise ConfigError(f"bad generator: {exc}") from exc
    try:
        return ControlSystem(spec, standard_basis(spec), tuple(mats))
    except LieError as exc:
        raise ConfigError(str(exc)) from exc


def _coords_element(sys: ControlSystem, coords, name: str) -> np.ndarray:
    arr = np.asarray(coords, dtype=float)
    if arr.shape != (sys.n,) or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} must be a list of {sys.n} finite coordinates")
    return sys.basis.from_coords(arr)


def _parse_point(sys: ControlSystem, raw, name: str) -> GroupElement:
    if raw is None or raw == "identity":
        return GroupElement.identity(sys.spec)
    try:
        if isinstance(raw, dict):
            if set(raw) != {"exp_of"}:
                raise ConfigError(f"{name} object must have exactly the key 'exp_of'")
            return GroupElement(sys.spec, expm_raw(_coords_element(sys, raw["exp_of"], name)))
        return GroupElement(sys.spec, matrix_from_json(raw))
    except (ValueError, LieError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad {name}: {exc}") from exc


def _resolve_seed(section: dict):
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip() != "":
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    seed = section.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise ConfigError("x0.seed must be an integer")
    return seed


def random_unit_direction(sys: ControlSystem, seed: int) -> np.ndarray:
    """Algebra matrix of unit Frobenius norm from a Gaussian draw of
    standard-basis coordinates (numpy PCG64 seeded with ``seed``)."""
    rng = np.random.default_rng(seed)
    mat = sys.basis.from_coords(rng.standard_normal(sys.n))
    return mat / np.linalg.norm(mat)


def _parse_x0(sys: ControlSystem, raw, x_infty: GroupElement):
    """Returns (x0, w0, seed) with x0 = exp(eps Z) x_infty and w0 = x0 x_infty^{-1}."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("x0 must be an object")
    eps = raw.get("perturb_eps", 0.1)
    try:
        eps = float(eps)
    except (TypeError, ValueError) as exc:
        raise ConfigError("x0.perturb_eps must be a number") from exc
    if not math.isfinite(eps) or eps < 0:
        raise ConfigError("x0.perturb_eps must be finite and non-negative")
    direction = raw.get("direction", "random")
    seed = _resolve_seed(raw)
    if direction == "random":
        if seed is None:
            raise ConfigError("a random direction needs x0.seed (or GEOTRACK_SEED)")
        z = random_unit_direction(sys, seed)
    else:
        z = _coords_element(sys, direction, "x0.direction")
        nrm = np.linalg.norm(z)
        if nrm == 0.0:
            raise ConfigError("x0.direction must be nonzero")
        z = z / nrm
    perturb = expm_raw(eps * z)
    x0 = GroupElement(sys.spec, perturb @ x_infty.mat)
    w0 = GroupElement(sys.spec, x0.mat @ x_infty.mat.conj().T)
    return x0, w0, seed


def _parse_integrator(raw, T: float) -> IntegratorConfig:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("integrator must be an object")
    try:
        method = Method(raw.get("method", "RKMK4"))
    except ValueError as exc:
        raise ConfigError(f"unknown integrator method {raw.get('method')!r}") from exc
    h = _positive(raw.get("h", T / 2000.0), "integrator.h")
    t_end = _positive(raw.get("t_end", 50.0 * T), "integrator.t_end")
    pe = raw.get("project_every", 10)
    if not isinstance(pe, int) or pe < 1:
        raise ConfigError("integrator.project_every must be a positive integer")
    if t_end < h:
        raise ConfigError("integrator.t_end must be at least one step")
    return IntegratorConfig(method, h, t_end, pe)


def _parse_thresholds(raw) -> Thresholds:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("thresholds must be an object")
    known = {"err_final", "tail_a", "dV_min", "probe", "residual"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown threshold keys: {sorted(extra)}")
    try:
        return Thresholds(**{k: float(v) for k, v in raw.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad thresholds: {exc}") from exc


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    sys = _parse_system(raw)
    T = _positive(raw.get("T", 1.0), "T")
    x_infty = _parse_point(sys, raw.get("x_infty", "identity"), "x_infty")
    x0, w0, seed = _parse_x0(sys, raw.get("x0"), x_infty)
    reference = raw.get("reference", {}) or {}
    if not isinstance(reference, dict):
        raise ConfigError("reference must be an object")
    boost = reference.get("boost", DEFAULT_BOOST)
    try:
        boost = float(boost)
    except (TypeError, ValueError) as exc:
        raise ConfigError("reference.boost must be a number") from exc
    if not math.isfinite(boost) or boost < 0:
        raise ConfigError("reference.boost must be finite and non-negative")
    t0 = raw.get("t0", 0.0)
    if not isinstance(t0, (int, float)) or not math.isfinite(t0):
        raise ConfigError("t0 must be a finite number")
    pivot = raw.get("pivot", 0)
    if not isinstance(pivot, int) or not 0 <= pivot < sys.m:
        raise ConfigError(f"pivot must be an integer in [0, {sys.m})")
    outputs = raw.get("outputs", {}) or {}
    if not isinstance(outputs, dict) or not all(isinstance(v, str) for v in outputs.values()):
        raise ConfigError("outputs must map names to file paths")
    verify = raw.get("verify", {}) or {}
    samples = verify.get("samples", 20) if isinstance(verify, dict) else None
    if not isinstance(samples, int) or samples < 1:
        raise ConfigError("verify.samples must be a positive integer")
    return RunConfig(
        sys=sys,
        T=T,
        x_infty=x_infty,
        w0=w0,
        x0=x0,
        integrator=_parse_integrator(raw.get("integrator"), T),
        thresholds=_parse_thresholds(raw.get("thresholds")),
        outputs=dict(outputs),
        boost=boost,
        t0=float(t0),
        pivot=pivot,
        seed=seed,
        verify_samples=samples,
        raw=raw,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return parse_config(raw)
