"""Masked projected gradient ascent on the ensemble entropy."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (
    FullMask,
    MaskGeometry,
    apply_perturbation,
    check_image,
    clip_passthrough,
    make_mask,
    project_budget,
    uniform_noise,
)
from .errors import AdapterError, AttackAborted, ConfigError, DimensionError, StateError
from .objective import ObjectiveConfig, ensemble_value_and_gradient
from .surrogate import DEFAULT_PROMPT

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttackConfig:
    """Hyperparameters of one attack run.

    ``step`` selects the update rule: ``"raw"`` scales the raw gradient by
    ``eta``; ``"sign"`` uses ``eta * sign(grad)`` (classic PGD, for comparison).
    """

    epsilon: float = 1.0
    eta: float = 0.05
    iterations: int = 50
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    mask_geometry: MaskGeometry = field(default_factory=FullMask)
    prompt: str = DEFAULT_PROMPT
    seed: int = 0
    init: str = "zero"
    step: str = "raw"

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.eta > 0:
            raise ConfigError(f"eta must be > 0, got {self.eta}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ConfigError(f"iterations must be a positive integer, got {self.iterations}")
        if self.init not in ("zero", "uniform"):
            raise ConfigError(f"init must be 'zero' or 'uniform', got {self.init!r}")
        if self.step not in ("raw", "sign"):
            raise ConfigError(f"step must be 'raw' or 'sign', got {self.step!r}")

    def echo(self) -> dict:
        d = asdict(self)
        d["objective"] = {"k": self.objective.k, "temperature": self.objective.temperature}
        d["mask_geometry"] = str(self.mask_geometry)
        return d


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    entropy: float
    per_model: tuple[float, ...]


@dataclass
class AttackResult:
    """Outcome of :func:`attack`.

    ``trace`` holds the pre-step evaluation of each iteration;
    ``final_record`` the evaluation after the last step. ``best_iteration``
    indexes ``candidates`` (``trace`` followed by ``final_record``), so it
    equals ``iterations`` when the post-loop point wins.
    """

    best_delta: np.ndarray
    best_image: np.ndarray
    best_iteration: int
    trace: list[TraceRecord]
    final_record: TraceRecord
    config: AttackConfig

    @property
    def candidates(self) -> list[TraceRecord]:
        return [*self.trace, self.final_record]

    @property
    def best_entropy(self) -> float:
        return self.candidates[self.best_iteration].entropy


def pgd_step(
    delta: np.ndarray, grad: np.ndarray, eta: float, mask, epsilon: float
) -> np.ndarray:
    """One ascent step ``project(delta + eta * (M * grad), epsilon)``.

    ``grad`` is the ascent direction (gradient of the entropy).
    """
    delta = np.asarray(delta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if delta.shape != grad.shape or delta.shape[1:] != mask.shape:
        raise DimensionError(f"delta {delta.shape}, grad {grad.shape}, mask {mask.shape} disagree")
    return project_budget(delta + eta * (mask.data * grad), epsilon)


def select_best(trace) -> int:
    """Index of the highest ensemble entropy; earliest index on ties."""
    values = [r.entropy if isinstance(r, TraceRecord) else float(r) for r in trace]
    if not values:
        raise StateError("cannot select from an empty trace")
    return int(np.argmax(values))


StepCallback = Callable[[int, np.ndarray, np.ndarray], None]


def attack(
    x: np.ndarray,
    models,
    cfg: AttackConfig,
    callback: Optional[StepCallback] = None,
    max_workers: int = 0,
) -> AttackResult:
    """Run masked PGD for ``cfg.iterations`` steps and return the best iterate.

    ``callback(iteration, delta, x_delta)`` is invoked for every evaluated
    candidate, including the post-loop point.

    Raises:
        AttackAborted: an adapter failed; the partial trace is attached.
    """
    x = check_image(x)
    models = list(models)
    if not models:
        raise ConfigError("ensemble must contain at least one model")
    cfg.objective.check_models(models)
    mask = make_mask(cfg.mask_geometry, x.shape[1], x.shape[2])

    if cfg.init == "uniform":
        delta = uniform_noise(cfg.epsilon, x.shape, cfg.seed) * mask.data
    else:
        delta = np.zeros_like(x)

    trace: list[TraceRecord] = []
    deltas: list[np.ndarray] = []

    def evaluate(it: int):
        x_delta = apply_perturbation(x, delta, mask)
        value, grad_x = ensemble_value_and_gradient(models, x_delta, cfg.prompt, cfg.objective, max_workers)
        if callback is not None:
            callback(it, delta, x_delta)
        return TraceRecord(it, value.mean, value.per_model), grad_x

    try:
        for it in range(cfg.iterations):
            record, grad_x = evaluate(it)
            trace.append(record)
            deltas.append(delta)
            grad = grad_x * clip_passthrough(x, delta, mask)
            if cfg.step == "sign":
                grad = np.sign(grad)
            delta = pgd_step(delta, grad, cfg.eta, mask, cfg.epsilon)
            logger.debug("iter %d entropy %.6f", it, record.entropy)
        final, _ = evaluate(cfg.iterations)
        deltas.append(delta)
    except AdapterError as exc:
        raise AttackAborted(exc, trace) from exc

    best = select_best([*trace, final])
    best_delta = deltas[best]
    return AttackResult(
        best_delta=best_delta,
        best_image=apply_perturbation(x, best_delta, mask),
        best_iteration=best,
        trace=trace,
        final_record=final,
        config=cfg,
    )
