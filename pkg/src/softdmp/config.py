"""Experiment configuration: parsing, validation and serialization."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .env import build_env, load_env_doc
from .operators import as_eta, format_eta

ALGORITHMS = ("qvi", "sql", "q_learning", "dmp", "softdmp_one", "softdmp_sep")
DUAL = ("dmp", "softdmp_one", "softdmp_sep")
LEARNING = ("sql", "q_learning") + DUAL


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field {field!r}: {message}")


@dataclass
class ExperimentConfig:
    env: dict
    algorithm: str
    name: str = ""
    description: str = ""
    eta: float = math.inf
    etas: list | None = None
    eta_plus: float = math.inf
    eta_minus: float = -math.inf
    alpha: float = 0.025
    alpha_plus: float = 0.025
    alpha_minus: float = 0.001
    gamma: float | None = None
    gamma_plus: float = 0.99
    gamma_minus: float = 0.9
    episodes: int = 1000
    max_steps: int = 500
    seeds: list = field(default_factory=lambda: [0])
    replay: bool = False
    buffer_capacity: int | None = 10_000
    batch_size: int = 32
    weighting: str = "hardmax"
    mix_w: float = 0.5
    discriminator_policy: str = "unflipped"
    smooth_window: int = 50
    tol: float = 1e-10
    max_iter: int = 100_000
    reference_qvi: bool = False

    @property
    def eta_list(self) -> list[float]:
        if self.algorithm == "q_learning":
            return [math.inf]
        return list(self.etas) if self.etas else [self.eta]

    def to_dict(self) -> dict:
        doc = asdict(self)
        for key in ("eta", "eta_plus", "eta_minus"):
            doc[key] = format_eta(doc[key])
        if doc["etas"] is not None:
            doc["etas"] = [format_eta(e) for e in doc["etas"]]
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _check(cond: bool, name: str, message: str):
    if not cond:
        raise ConfigError(name, message)


def _eta(name: str, value) -> float:
    try:
        return as_eta(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, f"not a valid entropy parameter ({exc})") from None


def config_from_dict(doc: dict, base_dir: Path | None = None) -> ExperimentConfig:
    """Validate a config document and resolve its environment inline."""
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(doc) - known)
    _check(not unknown, unknown[0] if unknown else "", "unknown field")
    for key in ("env", "algorithm"):
        _check(key in doc, key, "required field is missing")
    doc = dict(doc)

    algorithm = doc["algorithm"]
    _check(algorithm in ALGORITHMS, "algorithm", f"must be one of {', '.join(ALGORITHMS)}")

    env_ref = doc["env"]
    if isinstance(env_ref, str) and base_dir is not None and (base_dir / env_ref).is_file():
        env_ref = str(base_dir / env_ref)
    try:
        env_doc = load_env_doc(env_ref)
        build_env(env_doc)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError("env", str(exc)) from None
    doc["env"] = env_doc

    for key in ("eta", "eta_plus", "eta_minus"):
        if key in doc:
            doc[key] = _eta(key, doc[key])
    if doc.get("etas") is not None:
        _check(isinstance(doc["etas"], list) and doc["etas"], "etas", "must be a non-empty list")
        doc["etas"] = [_eta("etas", e) for e in doc["etas"]]
    if algorithm == "dmp":
        doc["eta_plus"], doc["eta_minus"] = math.inf, -math.inf
    if algorithm in ("softdmp_one", "softdmp_sep"):
        for key in ("eta_plus", "eta_minus"):
            _check(key in doc, key, f"required for {algorithm}")

    cfg = ExperimentConfig(**doc)
    cfg.name = cfg.name or algorithm

    _check(cfg.eta_plus >= 0, "eta_plus", "must be >= 0")
    _check(cfg.eta_minus <= 0, "eta_minus", "must be <= 0")
    _check(isinstance(cfg.seeds, list) and len(cfg.seeds) > 0, "seeds", "must be a non-empty list")
    _check(all(isinstance(s, int) and s >= 0 for s in cfg.seeds), "seeds", "must be non-negative integers")
    _check(isinstance(cfg.episodes, int) and cfg.episodes >= 1, "episodes", "must be an integer >= 1")
    _check(isinstance(cfg.max_steps, int) and cfg.max_steps >= 1, "max_steps", "must be an integer >= 1")
    for key in ("alpha", "alpha_plus", "alpha_minus"):
        _check(0 < getattr(cfg, key) <= 1, key, "must lie in (0, 1]")
    for key in ("gamma_plus", "gamma_minus") + (("gamma",) if cfg.gamma is not None else ()):
        _check(0 <= getattr(cfg, key) < 1, key, "must lie in [0, 1)")
    _check(cfg.weighting in ("hardmax", "fixed_w"), "weighting", "must be 'hardmax' or 'fixed_w'")
    _check(0 <= cfg.mix_w <= 1, "mix_w", "must lie in [0, 1]")
    _check(cfg.discriminator_policy in ("unflipped", "flipped"), "discriminator_policy",
           "must be 'unflipped' or 'flipped'")
    _check(cfg.buffer_capacity is None or (isinstance(cfg.buffer_capacity, int) and cfg.buffer_capacity >= 1),
           "buffer_capacity", "must be a positive integer or null")
    _check(isinstance(cfg.batch_size, int) and cfg.batch_size >= 1, "batch_size", "must be an integer >= 1")
    _check(isinstance(cfg.smooth_window, int) and cfg.smooth_window >= 1, "smooth_window", "must be >= 1")
    _check(cfg.tol > 0, "tol", "must be positive")
    _check(isinstance(cfg.max_iter, int) and cfg.max_iter >= 1, "max_iter", "must be an integer >= 1")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return config_from_dict(doc, base_dir=path.parent)
