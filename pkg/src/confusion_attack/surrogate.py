"""Contract for attackable surrogate models, plus the adapter registry.

An adapter maps a shared attack image through its own preprocessing
(bilinear resize to the native resolution, then normalization) to the
next-token logits at the final prompt position. Everything after the
resize is adapter-specific; the resize and normalization live here so
every adapter gets a correct backward pass through them.

Objectives are callables ``objective(z) -> (value, dvalue_dz)``.

Real-model adapters register themselves with :func:`register_model`. Files
or modules listed in the ``CONFUSION_ATTACK_ADAPTERS`` environment
variable (``os.pathsep``-separated) are imported on first registry lookup.
"""

from __future__ import annotations

import importlib
import importlib.util
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np

from .core import check_image
from .errors import AdapterError, CapabilityError, ConfigError

Objective = Callable[[np.ndarray], "tuple[float, np.ndarray]"]

ADAPTER_PATH_ENV = "CONFUSION_ATTACK_ADAPTERS"
DEFAULT_PROMPT = "Describe this image."


@dataclass(frozen=True)
class Preprocessing:
    height: int
    width: int
    mean: tuple[float, float, float] = (0.0, 0.0, 0.0)
    std: tuple[float, float, float] = (1.0, 1.0, 1.0)


@lru_cache(maxsize=64)
def bilinear_matrix(n_out: int, n_in: int) -> np.ndarray:
    """1-D bilinear interpolation weights with half-pixel centers.

    ``out = R @ in``. Equal sizes give the identity.
    """
    R = np.zeros((n_out, n_in))
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, n_in - 1)
    w = src - i0
    rows = np.arange(n_out)
    np.add.at(R, (rows, i0), 1.0 - w)
    np.add.at(R, (rows, i1), w)
    R.setflags(write=False)
    return R


def resize_bilinear(x: np.ndarray, height: int, width: int) -> np.ndarray:
    if x.shape[1:] == (height, width):
        return np.array(x, dtype=np.float64)
    return bilinear_matrix(height, x.shape[1]) @ x @ bilinear_matrix(width, x.shape[2]).T


def resize_bilinear_adjoint(g: np.ndarray, height: int, width: int) -> np.ndarray:
    """Pull a gradient on the resized grid back to an ``height x width`` grid."""
    if g.shape[1:] == (height, width):
        return np.array(g, dtype=np.float64)
    return bilinear_matrix(g.shape[1], height).T @ g @ bilinear_matrix(g.shape[2], width)


class SurrogateModel:
    """Base class for adapters.

    Subclasses implement :meth:`native_logits` and, when differentiable,
    :meth:`native_vjp` on inputs already resized and normalized.

    Attributes:
        thread_safe: concurrent ``forward_logits`` calls are allowed.
        prompt_sensitive: ``False`` promises the prompt is ignored.
    """

    model_id: str = "abstract"
    family: str = "abstract"
    vocab_size: int = 0
    preprocessing: Preprocessing = Preprocessing(224, 224)
    thread_safe: bool = True
    prompt_sensitive: bool = True
    differentiable: bool = True

    def native_logits(self, x: np.ndarray, prompt: str) -> np.ndarray:
        raise NotImplementedError

    def native_vjp(self, x: np.ndarray, prompt: str, dz: np.ndarray) -> np.ndarray:
        """Vector-Jacobian product ``dz^T d logits / d x`` on the native grid."""
        raise CapabilityError(self.model_id, "adapter does not provide gradients")

    def _preprocess(self, x: np.ndarray) -> np.ndarray:
        p = self.preprocessing
        mean = np.asarray(p.mean)[:, None, None]
        std = np.asarray(p.std)[:, None, None]
        return (resize_bilinear(x, p.height, p.width) - mean) / std

    def _backprop(self, g: np.ndarray, height: int, width: int) -> np.ndarray:
        std = np.asarray(self.preprocessing.std)[:, None, None]
        return resize_bilinear_adjoint(g / std, height, width)

    def forward_logits(self, x: np.ndarray, prompt: str = DEFAULT_PROMPT) -> np.ndarray:
        """Next-token logits, shape ``(vocab_size,)``."""
        return self.raw_logits(check_image(x), prompt)

    def raw_logits(self, x: np.ndarray, prompt: str = DEFAULT_PROMPT) -> np.ndarray:
        """Like :meth:`forward_logits` but without the [0, 1] range check."""
        x = np.asarray(x, dtype=np.float64)
        try:
            z = np.asarray(self.native_logits(self._preprocess(x), prompt), dtype=np.float64)
        except AdapterError:
            raise
        except Exception as exc:
            raise AdapterError(self.model_id, f"forward failed: {exc}") from exc
        if z.shape != (self.vocab_size,) or not np.all(np.isfinite(z)):
            raise AdapterError(self.model_id, f"bad logits: shape {z.shape}, finite={np.isfinite(z).all()}")
        return z

    def value_and_gradient(
        self, x: np.ndarray, prompt: str, objective: Objective
    ) -> tuple[float, np.ndarray, np.ndarray]:
        """Objective value, its input gradient (shape of ``x``) and the logits."""
        if not self.differentiable:
            raise CapabilityError(self.model_id, "adapter declares itself non-differentiable")
        x = check_image(x)
        xn = self._preprocess(x)
        try:
            z = np.asarray(self.native_logits(xn, prompt), dtype=np.float64)
            value, dz = objective(z)
            g = self.native_vjp(xn, prompt, np.asarray(dz, dtype=np.float64))
        except AdapterError:
            raise
        except Exception as exc:
            raise AdapterError(self.model_id, f"gradient failed: {exc}") from exc
        return float(value), self._backprop(g, x.shape[1], x.shape[2]), z

    def input_gradient(self, x: np.ndarray, prompt: str, objective: Objective) -> np.ndarray:
        return self.value_and_gradient(x, prompt, objective)[1]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.model_id!r}, family={self.family!r})"


def forward_logits(model: SurrogateModel, x: np.ndarray, prompt: str = DEFAULT_PROMPT) -> np.ndarray:
    return model.forward_logits(x, prompt)


def input_gradient(
    model: SurrogateModel, x: np.ndarray, prompt: str, objective: Objective
) -> np.ndarray:
    """Gradient of ``objective(forward_logits(model, x, prompt))`` w.r.t. ``x``."""
    return model.input_gradient(x, prompt, objective)


def constant_objective(c: float = 0.0) -> Objective:
    return lambda z: (float(c), np.zeros_like(z))


def linear_objective(weights: np.ndarray) -> Objective:
    """``z -> weights . z``; ``weights=ones`` gives the sum of logits."""
    w = np.asarray(weights, dtype=np.float64)
    return lambda z: (float(w @ z), w.copy())


def combine_objectives(a: float, obj1: Objective, b: float, obj2: Objective) -> Objective:
    def obj(z):
        v1, g1 = obj1(z)
        v2, g2 = obj2(z)
        return a * v1 + b * v2, a * g1 + b * g2

    return obj


_REGISTRY: dict[str, Callable[[], SurrogateModel]] = {}
_extensions_loaded = False


def register_model(model_id: str, factory: Callable[[], SurrogateModel]) -> None:
    """Make ``factory()`` resolvable as ``model_id`` in run configs."""
    _REGISTRY[model_id] = factory


def _load_extensions() -> None:
    global _extensions_loaded
    if _extensions_loaded:
        return
    _extensions_loaded = True
    for entry in filter(None, os.environ.get(ADAPTER_PATH_ENV, "").split(os.pathsep)):
        path = Path(entry)
        if path.suffix == ".py" and path.exists():
            spec = importlib.util.spec_from_file_location(f"_cattack_ext_{path.stem}", path)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
        else:
            importlib.import_module(entry)


def registered_models() -> list[str]:
    _load_extensions()
    return sorted(_REGISTRY)


def get_model(model_id: str) -> SurrogateModel:
    _load_extensions()
    try:
        factory = _REGISTRY[model_id]
    except KeyError:
        raise ConfigError(f"unknown model_id {model_id!r}; known: {sorted(_REGISTRY)}") from None
    return factory()
