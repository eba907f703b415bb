"""Closed-form differentiable toy captioner for desk-scale experiments.

The model mean-pools a 32x32 RGB input over a 4x4 grid of 8x8 cells,
subtracts 0.5, and applies a fixed sinusoidal linear map to 64 logits::

    W[v, f] = sin(0.7 * (v * F + f + 1) + phase)

Feature index ``f = channel * 16 + cell_row * 4 + cell_col``. The prompt
is ignored. Three variants are registered: ``toy-a`` (phase 0) and
``toy-b`` (phase 1) in family ``toyAB``, and ``toy-c`` (phase 2) in
family ``toyC`` as the held-out model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .surrogate import (
    DEFAULT_PROMPT,
    Objective,
    Preprocessing,
    SurrogateModel,
    register_model,
)

VOCAB_SIZE = 64
GRID = 4
INPUT_SIZE = 32
CELL = INPUT_SIZE // GRID
N_FEATURES = 3 * GRID * GRID


def toy_weights(phase: float) -> np.ndarray:
    v = np.arange(VOCAB_SIZE)[:, None]
    f = np.arange(N_FEATURES)[None, :]
    return np.sin(0.7 * (v * N_FEATURES + f + 1) + phase)


@dataclass(frozen=True)
class ToyModelSpec:
    phase: float = 0.0
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = toy_weights(self.phase)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def toy_features(x: np.ndarray) -> np.ndarray:
    if x.shape != (3, INPUT_SIZE, INPUT_SIZE):
        raise DimensionError(f"toy model expects (3, 32, 32), got {x.shape}")
    cells = x.reshape(3, GRID, CELL, GRID, CELL).mean(axis=(2, 4))
    return cells.reshape(-1) - 0.5


def toy_forward(spec: ToyModelSpec, x: np.ndarray) -> np.ndarray:
    return spec.weights @ toy_features(np.asarray(x, dtype=np.float64))


def toy_vjp(spec: ToyModelSpec, dz: np.ndarray) -> np.ndarray:
    """Backprop ``dz`` through the linear map and the mean pooling."""
    dfeat = (spec.weights.T @ dz).reshape(3, GRID, 1, GRID, 1) / (CELL * CELL)
    return np.broadcast_to(dfeat, (3, GRID, CELL, GRID, CELL)).reshape(3, INPUT_SIZE, INPUT_SIZE).copy()


def toy_gradient(spec: ToyModelSpec, x: np.ndarray, objective: Objective) -> np.ndarray:
    """Analytic gradient of ``objective(toy_forward(spec, x))`` w.r.t. ``x``."""
    _, dz = objective(toy_forward(spec, x))
    return toy_vjp(spec, np.asarray(dz, dtype=np.float64))


class ToyCaptioner(SurrogateModel):
    vocab_size = VOCAB_SIZE
    preprocessing = Preprocessing(INPUT_SIZE, INPUT_SIZE)
    prompt_sensitive = False

    def __init__(self, model_id: str, family: str, phase: float):
        self.model_id = model_id
        self.family = family
        self.spec = ToyModelSpec(phase)

    def native_logits(self, x, prompt):
        return toy_forward(self.spec, x)

    def native_vjp(self, x, prompt, dz):
        return toy_vjp(self.spec, dz)


TOY_VARIANTS = {
    "toy-a": ("toyAB", 0.0),
    "toy-b": ("toyAB", 1.0),
    "toy-c": ("toyC", 2.0),
}


def toy_model(model_id: str) -> ToyCaptioner:
    family, phase = TOY_VARIANTS[model_id]
    return ToyCaptioner(model_id, family, phase)


for _mid in TOY_VARIANTS:
    register_model(_mid, lambda _mid=_mid: toy_model(_mid))


def clean_toy_image(height: int = INPUT_SIZE, width: int = INPUT_SIZE) -> np.ndarray:
    """Deterministic RGB ramp ``(c + 1) * (i + j) / (3 * (H + W - 2))``, clipped to [0, 1].

    At 32x32 the denominator is ``3 * 62``.
    """
    c = np.arange(3)[:, None, None]
    i = np.arange(height)[None, :, None]
    j = np.arange(width)[None, None, :]
    return np.clip((c + 1) * (i + j) / (3 * (height + width - 2)), 0.0, 1.0)


def finite_diff_gradient(
    model: SurrogateModel,
    x: np.ndarray,
    objective: Objective,
    h: float = 1e-3,
    prompt: str = DEFAULT_PROMPT,
) -> np.ndarray:
    """Central-difference gradient of ``objective(logits(x))``, one pixel at a time.

    Evaluation points are not clipped to [0, 1]; this checks the model
    gradient in isolation from the pixel clip.
    """
    if not h > 0:
        raise ValueError(f"h must be > 0, got {h}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    probe = x.copy()
    for idx in np.ndindex(x.shape):
        orig = probe[idx]
        probe[idx] = orig + h
        f_plus = objective(model.raw_logits(probe, prompt))[0]
        probe[idx] = orig - h
        f_minus = objective(model.raw_logits(probe, prompt))[0]
        probe[idx] = orig
        grad[idx] = (f_plus - f_minus) / (2 * h)
    return grad
