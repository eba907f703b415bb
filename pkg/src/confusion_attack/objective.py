"""Top-k truncated, temperature-scaled next-token entropy and its ensemble mean."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .surrogate import Objective, SurrogateModel


@dataclass(frozen=True)
class ObjectiveConfig:
    k: int = 50
    temperature: float = 1.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ConfigError(f"k must be a positive integer, got {self.k}")
        if not self.temperature > 0:
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")

    def check_models(self, models) -> None:
        smallest = min(m.vocab_size for m in models)
        if self.k > smallest:
            raise ConfigError(f"k={self.k} exceeds the smallest vocabulary ({smallest})")


@dataclass(frozen=True)
class EnsembleValue:
    mean: float
    per_model: tuple[float, ...]


def topk_indices(z: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` largest logits, descending, ties to the lower index."""
    z = np.asarray(z)
    if k > z.shape[0]:
        raise ConfigError(f"k={k} exceeds vocabulary size {z.shape[0]}")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    # stable sort on -z keeps equal logits in index order
    return np.argsort(-z, kind="stable")[:k]


def topk_truncate(z: np.ndarray, k: int) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    return z[topk_indices(z, k)]


def _softmax(z: np.ndarray, temperature: float) -> np.ndarray:
    s = z / temperature
    e = np.exp(s - s.max())
    return e / e.sum()


def _entropy_of_probs(p: np.ndarray) -> float:
    nz = p > 0
    return float(-(p[nz] * np.log(p[nz])).sum())


def entropy_of_logits(z_k: np.ndarray, temperature: float = 1.0) -> float:
    """Shannon entropy (nats) of ``softmax(z_k / temperature)``.

    Returns a value in ``[0, ln len(z_k)]``.
    """
    z_k = np.asarray(z_k, dtype=np.float64)
    if z_k.size == 0:
        raise DimensionError("entropy of an empty logit vector")
    if not temperature > 0:
        raise ConfigError(f"temperature must be > 0, got {temperature}")
    p = _softmax(z_k, temperature)
    return min(max(_entropy_of_probs(p), 0.0), float(np.log(z_k.size)))


def entropy_objective(cfg: ObjectiveConfig) -> Objective:
    """Objective over full logit vectors: truncate, softmax, entropy.

    The top-k index set is re-selected on every call and treated as
    constant for the derivative, so only the k selected logits get gradient.
    """

    def objective(z: np.ndarray) -> tuple[float, np.ndarray]:
        idx = topk_indices(z, cfg.k)
        p = _softmax(z[idx], cfg.temperature)
        h = min(max(_entropy_of_probs(p), 0.0), float(np.log(cfg.k)))
        logp = np.log(np.where(p > 0, p, 1.0))
        dz = np.zeros_like(z, dtype=np.float64)
        # dH/ds_i = -p_i (log p_i + H), s = z / T
        dz[idx] = -p * (logp + h) / cfg.temperature
        return h, dz

    return objective


def model_entropy(
    model: SurrogateModel, x: np.ndarray, prompt: str, cfg: ObjectiveConfig
) -> float:
    z = model.forward_logits(x, prompt)
    return entropy_of_logits(topk_truncate(z, cfg.k), cfg.temperature)


def _map_models(fn, models, max_workers):
    # fixed model order for the reduction, whatever the scheduling
    if max_workers and max_workers > 1 and all(m.thread_safe for m in models):
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(fn, models))
    return [fn(m) for m in models]


def ensemble_objective(
    models, x: np.ndarray, prompt: str, cfg: ObjectiveConfig, max_workers: int = 0
) -> EnsembleValue:
    """Mean top-k entropy across ``models``, plus the per-model values."""
    models = list(models)
    if not models:
        raise ConfigError("ensemble must contain at least one model")
    values = _map_models(lambda m: model_entropy(m, x, prompt, cfg), models, max_workers)
    return EnsembleValue(float(sum(values) / len(values)), tuple(values))


def ensemble_value_and_gradient(
    models, x: np.ndarray, prompt: str, cfg: ObjectiveConfig, max_workers: int = 0
) -> tuple[EnsembleValue, np.ndarray]:
    """Ensemble entropy and its gradient with respect to the image ``x``."""
    models = list(models)
    if not models:
        raise ConfigError("ensemble must contain at least one model")
    obj = entropy_objective(cfg)
    results = _map_models(lambda m: m.value_and_gradient(x, prompt, obj), models, max_workers)
    values = tuple(r[0] for r in results)
    grad = np.zeros_like(np.asarray(x, dtype=np.float64))
    for r in results:
        grad += r[1]
    J = len(models)
    return EnsembleValue(float(sum(values) / J), values), grad / J
