"""JSON run configurations.

Schema (all keys optional unless noted)::

    {
      "model": {                              # required; or a path to a JSON file
        "type": "single" | "qubit" | "composite",
        # single:    "hamiltonian", "extra_conserved": [...], "tau"
        # qubit:     "omega", "h": [hx, hy, hz], "tau"
        # composite: "dims", "local_hamiltonians", "interaction", "taus", "tau", "local_numbers"
      },
      "initial_state": {"kind": "matrix" | "bloch" | "gibbs" | "pure" | "bell_diagonal"
                                 | "random" | "diagonal", ...},
      "time": {"t_final": 5.0, "sample_every": 0.1},
      "integrator": {<IntegratorConfig fields>},
      "output": {"format": "csv" | "json"},
      "analyses": {"onsager": false, "roundtrip": false, "roundtrip_time": 1.0, "stability_probe": false},
      "equilibrium": {"energy_mean": 0.25, "extra_means": [], "verify_time": 5.0},
      "onsager": {"basis": "gell-mann" | [matrix, ...]},
      "stability": {"eps": 1e-4, "t_final": 60.0},
      "seed": 0
    }

Matrices are nested lists of ``[re, im]`` pairs (plain reals are accepted).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .composite import CompositeModel, bell_diagonal_state
from .errors import ConfigError
from .generator import RelaxationSpec, SystemModel
from .operators import StateOperator, gibbs_state, random_density, spectral_decompose
from .propagator import IntegratorConfig
from .qubit import BlochModel, bloch_to_density
from .serialization import decode_matrix, decode_vector

MODEL_TYPES = ("single", "qubit", "composite")
STATE_KINDS = ("matrix", "bloch", "gibbs", "pure", "bell_diagonal", "random", "diagonal")


@dataclass
class RunConfig:
    model: object
    model_type: str
    initial_state: StateOperator | None
    t_final: float = 5.0
    sample_every: float | None = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    output_format: str = "csv"
    analyses: dict = field(default_factory=dict)
    equilibrium: dict = field(default_factory=dict)
    onsager: dict = field(default_factory=dict)
    stability: dict = field(default_factory=dict)
    seed: int | None = None
    bloch: BlochModel | None = None
    raw: dict = field(default_factory=dict, repr=False)


def _tau(value, where: str) -> RelaxationSpec:
    try:
        t = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: tau must be a number, got {value!r}") from None
    if not t > 0 or not np.isfinite(t):
        raise ConfigError(f"{where}: tau must be positive, got {t!r}")
    return RelaxationSpec(t)


def build_model(spec: dict):
    """Returns ``(model, type, bloch_model_or_None)``."""
    if not isinstance(spec, dict):
        raise ConfigError("model must be an object")
    kind = spec.get("type", "single")
    if kind not in MODEL_TYPES:
        raise ConfigError(f"model.type must be one of {MODEL_TYPES}, got {kind!r}")
    try:
        if kind == "qubit":
            bm = BlochModel(float(spec.get("omega", 1.0)), spec.get("h", [0.0, 0.0, 1.0]), _tau(spec.get("tau", 1.0), "model").tau)
            return bm.to_system_model(), kind, bm
        if kind == "single":
            if "hamiltonian" not in spec:
                raise ConfigError("model.hamiltonian is required")
            h = decode_matrix(spec["hamiltonian"])
            extra = [decode_matrix(x) for x in spec.get("extra_conserved", [])]
            return SystemModel(h, extra, _tau(spec.get("tau", 1.0), "model")), kind, None
        dims = spec.get("dims")
        if not dims:
            raise ConfigError("model.dims is required for composite models")
        hs = [decode_matrix(x) for x in spec.get("local_hamiltonians", [])]
        v = spec.get("interaction")
        taus = spec.get("taus")
        taus = None if taus is None else [_tau(t, "model.taus").tau for t in taus]
        numbers = spec.get("local_numbers")
        if numbers is not None:
            numbers = [None if n is None else decode_matrix(n) for n in numbers]
        model = CompositeModel(
            dims, hs, None if v is None else decode_matrix(v), taus, _tau(spec.get("tau", 1.0), "model").tau, numbers
        )
        return model, kind, None
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid model: {exc}") from exc


def build_state(spec: dict, model, seed: int | None = None) -> StateOperator:
    if not isinstance(spec, dict):
        raise ConfigError("initial_state must be an object")
    kind = spec.get("kind")
    if kind not in STATE_KINDS:
        raise ConfigError(f"initial_state.kind must be one of {STATE_KINDS}, got {kind!r}")
    dim = model.dim
    if kind == "matrix":
        op = decode_matrix(spec.get("matrix"))
    elif kind == "bloch":
        if dim != 2:
            raise ConfigError("bloch initial state needs a two-level model")
        return bloch_to_density(np.asarray(spec.get("r"), dtype=float))
    elif kind == "gibbs":
        obs = model.conserved_observables
        extra = obs[1] if len(obs) > 1 else None
        op = gibbs_state(model.hamiltonian, float(spec.get("beta", 0.0)), extra, float(spec.get("nu", 0.0)))
    elif kind == "pure":
        v = decode_vector(spec.get("vector"))
        n = np.linalg.norm(v)
        if n == 0:
            raise ConfigError("pure state vector is zero")
        v = v / n
        op = np.outer(v, v.conj())
    elif kind == "bell_diagonal":
        op = bell_diagonal_state(spec.get("weights"))
    elif kind == "random":
        rng = np.random.default_rng(spec.get("seed", seed))
        op = random_density(dim, rng, spec.get("rank"))
    else:
        p = np.asarray(spec.get("populations"), dtype=float)
        op = np.diag(p).astype(complex)
    if op.shape != (dim, dim):
        raise ConfigError(f"initial state has dimension {op.shape[0]}, model has {dim}")
    return spectral_decompose(op, n_kernel=None)


def _integrator(spec: dict) -> IntegratorConfig:
    known = {f.name for f in fields(IntegratorConfig)}
    bad = set(spec) - known
    if bad:
        raise ConfigError(f"unknown integrator keys {sorted(bad)}")
    try:
        return IntegratorConfig(**spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid integrator settings: {exc}") from exc


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def parse_config(data: dict, seed: int | None = None, base_dir=None, need_state: bool = True) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    mspec = data.get("model")
    if mspec is None:
        raise ConfigError("config has no model")
    if isinstance(mspec, str):
        mspec = _read_json(Path(base_dir or ".") / mspec)
    model, kind, bloch = build_model(mspec)
    seed = seed if seed is not None else data.get("seed")
    state = None
    if "initial_state" in data:
        state = build_state(data["initial_state"], model, seed)
    elif need_state:
        raise ConfigError("config has no initial_state")
    time = data.get("time", {})
    t_final = float(time.get("t_final", 5.0))
    if t_final == 0:
        raise ConfigError("time.t_final must be nonzero")
    fmt = data.get("output", {}).get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output.format must be csv or json, got {fmt!r}")
    se = time.get("sample_every")
    return RunConfig(
        model=model,
        model_type=kind,
        initial_state=state,
        t_final=t_final,
        sample_every=None if se is None else float(se),
        integrator=_integrator(data.get("integrator", {})),
        output_format=fmt,
        analyses=dict(data.get("analyses", {})),
        equilibrium=dict(data.get("equilibrium", {})),
        onsager=dict(data.get("onsager", {})),
        stability=dict(data.get("stability", {})),
        seed=seed,
        bloch=bloch,
        raw=data,
    )


def load_config(path, seed: int | None = None, need_state: bool = True) -> RunConfig:
    return parse_config(_read_json(path), seed, os.path.dirname(os.path.abspath(path)), need_state)


def shipped_config(name: str) -> Path:
    return Path(__file__).parent / "configs" / name
