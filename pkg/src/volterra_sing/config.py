"""Experiment configuration: JSON schema, strict validation, canonical hash.

Unknown keys anywhere in the file are hard errors: configs are the
provenance record for every reported number, so silent typos are not
acceptable.  The canonical hash covers everything that affects the
measurements (problem, grids, ensemble, seed, thresholds) and excludes
execution-only settings (output directory, thread count).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Optional

from .coefficients import (
    AffineSinFn,
    CoefficientSet,
    ConstantFn,
    GAffine,
    GExp,
    GOne,
    LinearFn,
    ProblemSpec,
    TimePowerFn,
)
from .kernels import KernelSpec

__all__ = ["ConfigError", "GeometricGrid", "ExperimentConfig", "load_config", "config_from_dict"]

EXPERIMENTS = ("clt_rate", "regularization_rate", "ito_equivalence", "property_suite", "kernel_audit")

DEFAULT_THRESHOLDS = {
    "rate_slope_tol": 0.15,       # |fitted slope - alpha| bound, reg-rate verdict
    "final_discrepancy": 5e-2,    # ito-equivalence bound at the finest grid
    "moment_stability": 0.10,     # relative spread of E|X_T|^p across grids
    "holder_drift": 0.20,         # relative growth of the Holder ratio, finest pair
    "clt_slope_margin": 0.05,     # one-sided slack below the theoretical exponent
    "noise_floor_factor": 3.0,    # degenerate-case multiple of the self-distance
    "noise_floor_reps": 5,        # m-samples averaged into the noise floor
}


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class GeometricGrid:
    """Strictly decreasing geometric grid: start * ratio**k, k = 0..count-1."""

    start: float
    ratio: float
    count: int

    def __post_init__(self):
        if self.start <= 0.0:
            raise ConfigError(f"geometric grid start must be positive, got {self.start}")
        if not 0.0 < self.ratio < 1.0:
            raise ConfigError(
                f"geometric grid ratio must lie in (0, 1) for a decreasing grid, got {self.ratio}"
            )
        if self.count < 1:
            raise ConfigError(f"geometric grid count must be >= 1, got {self.count}")

    @property
    def values(self):
        return [self.start * self.ratio**k for k in range(self.count)]

    def to_dict(self):
        return {"start": self.start, "ratio": self.ratio, "count": self.count}


def _take(mapping: dict, context: str, allowed: dict):
    """Pop known keys with defaults; reject anything unrecognized."""
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {context}: {sorted(unknown)}")
    out = {}
    missing = []
    for key, default in allowed.items():
        if key in mapping:
            out[key] = mapping[key]
        elif default is _REQUIRED:
            missing.append(key)
        else:
            out[key] = default
    if missing:
        raise ConfigError(f"missing required key(s) in {context}: {missing}")
    return out


_REQUIRED = object()


# ---------------------------------------------------------------------------
# kernel / coefficient construction from dicts


def _kernel_from_dict(d: dict) -> KernelSpec:
    if not isinstance(d, dict):
        raise ConfigError("problem.kernel must be an object")
    family = d.get("family")
    common = {"alpha_bar": None, "p0": 2.0, "c": 1.0}
    if family == "power_singular":
        f = _take(d, "problem.kernel", {"family": _REQUIRED, "alpha": _REQUIRED, **common})
        return KernelSpec.power(f["alpha"], f["alpha_bar"], f["p0"], f["c"])
    if family == "constant":
        f = _take(d, "problem.kernel", {"family": _REQUIRED, "value": 1.0, **common})
        spec = KernelSpec.constant(f["value"], f["p0"], f["c"])
        return replace(spec, alpha_bar=f["alpha_bar"]) if f["alpha_bar"] else spec
    if family == "shifted_power":
        f = _take(d, "problem.kernel",
                  {"family": _REQUIRED, "alpha": _REQUIRED, "eps": _REQUIRED, **common})
        from .kernels import ShiftedPower

        ab = f["alpha_bar"] if f["alpha_bar"] is not None else f["alpha"]
        return KernelSpec(ShiftedPower(f["alpha"], f["eps"]), ab, f["p0"], f["c"])
    if family == "custom_csv":
        f = _take(d, "problem.kernel",
                  {"family": _REQUIRED, "path": _REQUIRED, "alpha": _REQUIRED, **common})
        return KernelSpec.custom_from_csv(f["path"], f["alpha"], f["alpha_bar"], f["p0"], f["c"])
    raise ConfigError(
        f"unknown kernel family {family!r}; expected power_singular, constant, "
        "shifted_power or custom_csv"
    )


_SCALAR_FNS = {
    "constant": (ConstantFn, {"value": 0.0}),
    "linear": (LinearFn, {"a0": 0.0, "a1": 1.0}),
    "time_holder": (TimePowerFn, {"v": 1.0, "beta": 1.0, "a1": 0.0}),
    "time_holder2": (TimePowerFn, {"v": 1.0, "beta": 1.0, "a1": 0.0}),
    "affine_sin": (AffineSinFn, {"a0": 0.0, "a1": 1.0}),
}

_G_FNS = {
    "one": (GOne, {}),
    "affine": (GAffine, {"c0": 1.0, "c1": 0.0, "c2": 0.0}),
    "exp": (GExp, {"lam": 1.0}),
}


def _scalar_fn_from_dict(d: dict, context: str):
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(f"{context} must be an object with a 'kind' key")
    kind = d["kind"]
    if kind not in _SCALAR_FNS:
        raise ConfigError(f"unknown {context} kind {kind!r}; expected one of {sorted(_SCALAR_FNS)}")
    cls, params = _SCALAR_FNS[kind]
    f = _take(d, context, {"kind": _REQUIRED, **params})
    f.pop("kind")
    return kind, cls(**f)


def _g_from_dict(d: dict):
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("problem.coefficients.g must be an object with a 'kind' key")
    kind = d["kind"]
    if kind not in _G_FNS:
        raise ConfigError(f"unknown g kind {kind!r}; expected one of {sorted(_G_FNS)}")
    cls, params = _G_FNS[kind]
    f = _take(d, "problem.coefficients.g", {"kind": _REQUIRED, **params})
    f.pop("kind")
    return kind, cls(**f)


def _coeffs_from_dict(d: dict) -> CoefficientSet:
    f = _take(
        d,
        "problem.coefficients",
        {
            "b": _REQUIRED,
            "sigma": _REQUIRED,
            "g": {"kind": "one"},
            "L": 1.0,
            "beta1": 1.0,
            "beta2": 1.0,
        },
    )
    _, b = _scalar_fn_from_dict(f["b"], "problem.coefficients.b")
    _, sigma = _scalar_fn_from_dict(f["sigma"], "problem.coefficients.sigma")
    _, g = _g_from_dict(f["g"])
    return CoefficientSet(b=b, sigma=sigma, g=g, L=f["L"], beta1=f["beta1"], beta2=f["beta2"])


def _problem_from_dict(d: dict) -> ProblemSpec:
    f = _take(
        d,
        "problem",
        {
            "kernel": _REQUIRED,
            "coefficients": _REQUIRED,
            "x0": 0.0,
            "T": 1.0,
            "allow_assumption_violation": False,
        },
    )
    return ProblemSpec(
        kernel=_kernel_from_dict(f["kernel"]),
        coeffs=_coeffs_from_dict(f["coefficients"]),
        x0=f["x0"],
        T=f["T"],
        allow_assumption_violation=f["allow_assumption_violation"],
    )


# ---------------------------------------------------------------------------
# the experiment config


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    problem: ProblemSpec
    raw: dict                      # canonical dict as parsed (round-trip source)
    grids: Optional[list] = None
    ensemble: Optional[int] = None
    a_grid: Optional[GeometricGrid] = None
    eps_grid: Optional[GeometricGrid] = None
    n_min: int = 64
    n_ref: int = 512
    seed: int = 0
    out_dir: str = "out"
    threads: int = 1
    audit_grid_density: int = 64
    audit_samples: int = 4096
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    def to_dict(self) -> dict:
        """Canonical dict; parse(serialize(.)) is the identity."""
        return json.loads(json.dumps(self.raw, sort_keys=True))

    def config_hash(self) -> str:
        """SHA-256 over the canonical JSON, execution-only keys removed."""
        d = self.to_dict()
        d.pop("out_dir", None)
        d.pop("threads", None)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_COMMON_KEYS = {
    "experiment": _REQUIRED,
    "problem": _REQUIRED,
    "seed": 0,
    "out_dir": "out",
    "threads": 1,
    "thresholds": {},
}

_PER_EXPERIMENT_KEYS = {
    "clt_rate": {"a_grid": _REQUIRED, "ensemble": _REQUIRED, "n_min": 64, "n_ref": 512},
    "regularization_rate": {"eps_grid": _REQUIRED, "ensemble": _REQUIRED, "grids": _REQUIRED},
    "ito_equivalence": {"grids": _REQUIRED, "ensemble": _REQUIRED},
    "property_suite": {"grids": _REQUIRED, "ensemble": _REQUIRED},
    "kernel_audit": {"audit_grid_density": 64, "audit_samples": 4096},
}

_STOCHASTIC = {"clt_rate", "regularization_rate", "ito_equivalence", "property_suite"}


def _geometric_from_dict(d, context: str) -> GeometricGrid:
    if not isinstance(d, dict):
        raise ConfigError(f"{context} must be an object with start/ratio/count")
    f = _take(d, context, {"start": _REQUIRED, "ratio": 0.5, "count": 6})
    return GeometricGrid(start=f["start"], ratio=f["ratio"], count=f["count"])


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    experiment = data.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}"
        )
    allowed = {**_COMMON_KEYS, **_PER_EXPERIMENT_KEYS[experiment]}
    f = _take(data, "config", allowed)

    thresholds = _take(f["thresholds"] or {}, "thresholds", dict(DEFAULT_THRESHOLDS))

    problem = _problem_from_dict(f["problem"])

    grids = f.get("grids")
    if grids is not None:
        if (not isinstance(grids, list) or len(grids) < 1
                or any((not isinstance(n, int)) or n < 2 for n in grids)):
            raise ConfigError("grids must be a list of integers >= 2")
        if sorted(grids) != grids or len(set(grids)) != len(grids):
            raise ConfigError("grids must be strictly increasing")

    ensemble = f.get("ensemble")
    if experiment in _STOCHASTIC:
        if not isinstance(ensemble, int) or ensemble < 100:
            raise ConfigError("stochastic experiments need ensemble >= 100")

    a_grid = _geometric_from_dict(f["a_grid"], "a_grid") if f.get("a_grid") is not None else None
    eps_grid = (
        _geometric_from_dict(f["eps_grid"], "eps_grid") if f.get("eps_grid") is not None else None
    )
    if experiment == "clt_rate" and a_grid.start > problem.T:
        raise ConfigError("a_grid.start must not exceed the problem horizon")
    if experiment == "regularization_rate" and eps_grid.count < 3:
        raise ConfigError("rate fit requires >= 3 points in eps_grid")

    seed = f["seed"]
    if not isinstance(seed, int) or seed < 0 or seed >= 1 << 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    threads = f["threads"]
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError("threads must be a positive integer")

    # canonical raw dict: defaults filled in, so round-trips are stable
    raw = {
        "experiment": experiment,
        "problem": f["problem"],
        "seed": seed,
        "out_dir": f["out_dir"],
        "threads": threads,
        "thresholds": thresholds,
    }
    for key in _PER_EXPERIMENT_KEYS[experiment]:
        val = f[key]
        if isinstance(val, GeometricGrid):
            val = val.to_dict()
        elif key in ("a_grid", "eps_grid") and val is not None:
            val = _geometric_from_dict(val, key).to_dict()
        if val is not None:
            raw[key] = val

    kwargs = {}
    for key in ("n_min", "n_ref", "audit_grid_density", "audit_samples"):
        if key in f:
            kwargs[key] = f[key]

    return ExperimentConfig(
        experiment=experiment,
        problem=problem,
        raw=raw,
        grids=grids,
        ensemble=ensemble,
        a_grid=a_grid,
        eps_grid=eps_grid,
        seed=seed,
        out_dir=f["out_dir"],
        threads=threads,
        thresholds=thresholds,
        **kwargs,
    )


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Parse and validate a JSON config file, applying CLI overrides."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")
    if overrides:
        data = {**data, **{k: v for k, v in overrides.items() if v is not None}}
    return config_from_dict(data)
