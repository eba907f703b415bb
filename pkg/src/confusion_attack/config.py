"""Flat ``key = value`` run configuration files."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .core import FullMask, MaskGeometry, parse_geometry
from .errors import ConfigError
from .objective import ObjectiveConfig
from .pgd import AttackConfig
from .surrogate import DEFAULT_PROMPT, get_model


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in _parse_list(text))


@dataclass(frozen=True)
class RunConfig:
    """Everything one ``attack``/``eval``/``sweep`` invocation needs.

    ``image`` is a file path or ``builtin:toy-ramp[:HxW]``.
    """

    image: str = "builtin:toy-ramp"
    out: str = "out"
    models: tuple[str, ...] = ("toy-a", "toy-b")
    heldout: tuple[str, ...] = ()
    epsilon: float = 1.0
    lr: float = 0.05
    iterations: int = 50
    k: int = 50
    temperature: float = 1.0
    seed: int = 0
    mask: MaskGeometry = field(default_factory=FullMask)
    prompt: str = DEFAULT_PROMPT
    init: str = "zero"
    step: str = "raw"
    quantize: bool = True
    sweep_epsilon: tuple[float, ...] = (1.0, 0.01)
    sweep_lr: tuple[float, ...] = (0.5, 0.05, 0.005)

    def __post_init__(self):
        if not self.models:
            raise ConfigError("models must list at least one model_id")
        # building the attack config validates every hyperparameter
        objective = self.attack_config().objective
        resolved = {mid: get_model(mid) for mid in (*self.models, *self.heldout)}
        objective.check_models(resolved.values())
        train_families = {resolved[m].family for m in self.models}
        for mid in self.heldout:
            if resolved[mid].family in train_families:
                raise ConfigError(f"held-out model {mid!r} shares a family with the training ensemble")

    def attack_config(self) -> AttackConfig:
        return AttackConfig(
            epsilon=self.epsilon,
            eta=self.lr,
            iterations=self.iterations,
            objective=ObjectiveConfig(self.k, self.temperature),
            mask_geometry=self.mask,
            prompt=self.prompt,
            seed=self.seed,
            init=self.init,
            step=self.step,
        )

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self, include_out: bool = True) -> str:
        """Canonical ``key = value`` form; :func:`parse_config` reads it back.

        ``include_out=False`` gives the location-independent echo embedded in artifacts.
        """
        lines = []
        for f in dataclasses.fields(self):
            if f.name == "out" and not include_out:
                continue
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


_CONVERTERS = {
    "image": str,
    "out": str,
    "models": _parse_list,
    "heldout": _parse_list,
    "epsilon": float,
    "lr": float,
    "iterations": int,
    "k": int,
    "temperature": float,
    "seed": int,
    "mask": parse_geometry,
    "prompt": str,
    "init": str,
    "step": str,
    "quantize": _parse_bool,
    "sweep_epsilon": _parse_floats,
    "sweep_lr": _parse_floats,
}
_ALIASES = {"eta": "lr", "iters": "iterations", "model_ids": "models"}


def convert_values(raw: dict[str, str]) -> dict:
    values = {}
    for key, text in raw.items():
        key = _ALIASES.get(key, key)
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            values[key] = _CONVERTERS[key](text)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from exc
    return values


def parse_config_text(text: str, overrides: Optional[dict[str, str]] = None) -> RunConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, value = line.split("=", 1)
        raw[key.strip()] = value.strip()
    raw.update(overrides or {})
    return RunConfig(**convert_values(raw))


def parse_config(path, overrides: Optional[dict[str, str]] = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, overrides)
