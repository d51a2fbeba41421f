"""Experiment configuration files.

Flat ``key = value`` text, one key per line, ``#`` starts a comment.
Vectors are comma separated (``J = 1.4, 2.0, 1.0``). Required keys are
``N`` and ``mode``; everything else has a default (see ``DEFAULTS``).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .ansatz import hidden_count
from .lindblad import LindbladModel

MODES = ("rk", "rbm", "invariant", "gradient", "natural-gradient")
REQUIRED = ("N", "mode")


class ConfigError(ValueError):
    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    N: int
    mode: str
    J: tuple[float, float, float] = (0.0, 0.0, 0.0)
    B: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gamma: float = 1.0
    alpha: float = 1.0
    beta: Optional[float] = None  # None means beta = alpha
    dt_base: float = 1e-2
    rcond: float = 1e-12
    max_iters: int = 7000
    cost_threshold: float = 1e-10
    seed: int = 0
    hermitian_c: bool = True
    rk_reference: bool = False
    output: str = "out"
    ansatz: str = "invariant"  # ansatz kind of the gradient modes
    d_nu: float = 1e-3
    cost: str = "normalized"
    checkpoint_every: int = 0

    def __post_init__(self):
        validate(self)

    @property
    def model(self) -> LindbladModel:
        return LindbladModel(self.N, self.J, self.B, self.gamma)

    @property
    def effective_beta(self) -> float:
        return self.alpha if self.beta is None else self.beta

    def echo(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            if isinstance(v, tuple):
                v = ", ".join(repr(x) for x in v)
            elif isinstance(v, bool):
                v = str(v).lower()
            elif v is None:
                continue
            lines.append(f"{k} = {v}")
        return "\n".join(lines)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


DEFAULTS = {f.name: f.default for f in fields(ExperimentConfig) if f.name not in REQUIRED}


def validate(cfg: ExperimentConfig) -> None:
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}", "mode")
    if cfg.N < 2:
        raise ConfigError(f"N must be >= 2, got {cfg.N}", "N")
    if not cfg.gamma > 0:
        raise ConfigError("gamma must be positive", "gamma")
    if not cfg.dt_base > 0:
        raise ConfigError("dt_base must be positive", "dt_base")
    if cfg.max_iters < 1:
        raise ConfigError("max_iters must be >= 1", "max_iters")
    if cfg.ansatz not in ("rbm", "invariant"):
        raise ConfigError(f"ansatz must be rbm or invariant, got {cfg.ansatz!r}", "ansatz")
    if cfg.cost not in ("normalized", "unnormalized"):
        raise ConfigError(f"cost must be normalized or unnormalized, got {cfg.cost!r}", "cost")
    for key, density in (("alpha", cfg.alpha), ("beta", cfg.effective_beta)):
        try:
            hidden_count(cfg.N, density, key)
        except ValueError as exc:
            raise ConfigError(str(exc), key if key == "alpha" or cfg.beta is not None else "alpha") from None


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _vec3(text: str) -> tuple[float, float, float]:
    parts = [p for p in text.replace(",", " ").split()]
    if len(parts) != 3:
        raise ValueError(f"expected 3 comma-separated numbers, got {text!r}")
    return tuple(float(p) for p in parts)


def _optional_float(text: str):
    return None if text.lower() in ("", "none") else float(text)


PARSERS = {
    "N": _int,
    "mode": str,
    "J": _vec3,
    "B": _vec3,
    "gamma": float,
    "alpha": float,
    "beta": _optional_float,
    "dt_base": float,
    "rcond": float,
    "max_iters": _int,
    "cost_threshold": float,
    "seed": _int,
    "hermitian_c": _bool,
    "rk_reference": _bool,
    "output": str,
    "ansatz": str,
    "d_nu": float,
    "cost": str,
    "checkpoint_every": _int,
}


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}: {raw.strip()!r}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in PARSERS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        lines[key] = where
        try:
            values[key] = PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{where}: malformed value for {key}: {exc}") from None
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"{source}: missing required key(s) {', '.join(missing)}")
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        where = lines.get(exc.key, source)
        raise ConfigError(f"{where}: {exc}", exc.key) from None


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_config_text(path.read_text(), str(path))
