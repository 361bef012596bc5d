"""Experiment configuration: physical parameters plus numerical controls."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path


class ConfigError(ValueError):
    """Raised for malformed or unphysical configurations."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of a partially distinguishable, lossy GBS experiment.

    ``K`` ports, the first ``M`` of which carry squeezed vacuum with common
    squeezing ``r``.  Loss is split into source, interferometer and detector
    transmissions whose product is the overall transmission ``eta_t``.
    """

    K: int
    M: int
    r: float
    eta_s: float = 1.0
    eta_u: float = 1.0
    eta_d: float = 1.0
    eta_ind: float = 1.0
    seed: int = 0
    tol: float = 1e-10

    def __post_init__(self):
        if not isinstance(self.K, int) or self.K < 1:
            raise ConfigError(f"K must be a positive integer, got {self.K!r}")
        if not isinstance(self.M, int) or not 1 <= self.M <= self.K:
            raise ConfigError(f"M must satisfy 1 <= M <= K, got M={self.M!r}, K={self.K}")
        if not math.isfinite(self.r) or self.r < 0:
            raise ConfigError(f"r must be >= 0, got {self.r!r}")
        for name in ("eta_s", "eta_u", "eta_d", "eta_ind"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v!r}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def eta_t(self) -> float:
        return self.eta_s * self.eta_u * self.eta_d

    @classmethod
    def from_eta_t(cls, K, M, r, eta_t, **kw) -> "ExperimentConfig":
        """Build a config whose whole transmission sits in ``eta_s``."""
        return cls(K=K, M=M, r=r, eta_s=eta_t, eta_u=1.0, eta_d=1.0, **kw)

    def replace(self, **changes) -> "ExperimentConfig":
        d = asdict(self)
        if "eta_t" in changes:
            d.update(eta_s=changes.pop("eta_t"), eta_u=1.0, eta_d=1.0)
        d.update(changes)
        return ExperimentConfig(**d)

    def to_dict(self) -> dict:
        return asdict(self)


_TRIPLE = ("eta_s", "eta_u", "eta_d")
_ALLOWED = {"K", "M", "r", "eta_t", "eta_ind", "seed", "tol", *_TRIPLE}


def config_from_dict(d: dict) -> ExperimentConfig:
    """Parse the flat JSON config object.

    ``eta_t`` may be given directly instead of the ``eta_s/eta_u/eta_d``
    triple, never together with it.  Per-port squeezing lists are rejected.
    """
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(d) - _ALLOWED
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("K", "M", "r"):
        if key not in d:
            raise ConfigError(f"missing required key {key!r}")
    if isinstance(d["r"], (list, tuple)):
        raise ConfigError("per-port squeezing is not supported; give a single r")

    kw = {"K": d["K"], "M": d["M"]}
    try:
        kw["r"] = float(d["r"])
        if "eta_t" in d:
            if any(k in d for k in _TRIPLE):
                raise ConfigError("eta_t is mutually exclusive with eta_s/eta_u/eta_d")
            kw["eta_s"] = float(d["eta_t"])
        else:
            for k in _TRIPLE:
                if k in d:
                    kw[k] = float(d[k])
        if "eta_ind" in d:
            kw["eta_ind"] = float(d["eta_ind"])
        if "tol" in d:
            kw["tol"] = float(d["tol"])
        if "seed" in d:
            kw["seed"] = int(d["seed"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    if isinstance(kw["K"], bool) or isinstance(kw["M"], bool):
        raise ConfigError("K and M must be integers")
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return config_from_dict(data)


def config_hash(cfg: ExperimentConfig) -> str:
    """Short stable digest of the physical parameters (seed excluded)."""
    d = cfg.to_dict()
    d.pop("seed")
    d["eta_t"] = cfg.eta_t
    blob = json.dumps(d, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
