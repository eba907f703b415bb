"""Images, perturbations, masks and the masked, clipped composition.

Images and perturbations are plain float64 arrays of shape ``(3, H, W)``.
Pixel values live in [0, 1] for the whole optimization; 8-bit
quantization only happens at file I/O.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, DimensionError, GeometryError

CHANNELS = 3

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class FullMask:
    """Every pixel is attackable."""

    def __str__(self) -> str:
        return "full"


@dataclass(frozen=True)
class RectMask:
    """Axis-aligned attack rectangle in pixel coordinates."""

    top: int
    left: int
    height: int
    width: int

    def __str__(self) -> str:
        return f"rect:{self.top},{self.left},{self.height},{self.width}"


MaskGeometry = Union[FullMask, RectMask]


def parse_geometry(text: str) -> MaskGeometry:
    """Parse ``full`` or ``rect:top,left,h,w``."""
    text = text.strip()
    if text == "full":
        return FullMask()
    if text.startswith("rect:"):
        try:
            top, left, h, w = (int(p) for p in text[5:].split(","))
        except ValueError as exc:
            raise ConfigError(f"bad rect mask {text!r}; expected rect:top,left,h,w") from exc
        return RectMask(top, left, h, w)
    raise ConfigError(f"unknown mask geometry {text!r}")


def centered_rect(height: int, width: int, patch_h: int, patch_w: int) -> RectMask:
    """Rectangle of the given size centered in an ``height x width`` frame."""
    return RectMask((height - patch_h) // 2, (width - patch_w) // 2, patch_h, patch_w)


@dataclass(frozen=True)
class Mask:
    data: np.ndarray  # (H, W) of 0.0/1.0, broadcast over channels
    geometry: MaskGeometry

    @property
    def active_fraction(self) -> float:
        return float(self.data.sum()) / self.data.size

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


def make_mask(geometry: MaskGeometry, height: int, width: int) -> Mask:
    """Build the binary attack-region mask for an ``height x width`` image.

    Raises:
        GeometryError: if the rectangle leaves the frame or is empty.
    """
    if height <= 0 or width <= 0:
        raise GeometryError(f"image size must be positive, got {height}x{width}")
    if isinstance(geometry, FullMask):
        return Mask(np.ones((height, width)), geometry)
    if isinstance(geometry, RectMask):
        g = geometry
        if (
            g.height <= 0
            or g.width <= 0
            or g.top < 0
            or g.left < 0
            or g.top + g.height > height
            or g.left + g.width > width
        ):
            raise GeometryError(f"{g} does not fit inside {height}x{width}")
        data = np.zeros((height, width))
        data[g.top : g.top + g.height, g.left : g.left + g.width] = 1.0
        return Mask(data, geometry)
    raise GeometryError(f"unsupported mask geometry {geometry!r}")


def check_image(x: np.ndarray) -> np.ndarray:
    """Return ``x`` as float64 after checking the image invariants."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != CHANNELS:
        raise DimensionError(f"image must have shape (3, H, W), got {x.shape}")
    if not np.all(np.isfinite(x)) or x.min() < 0.0 or x.max() > 1.0:
        raise ConfigError("image values must be finite and within [0, 1]")
    return x


def _check_shapes(x: np.ndarray, delta: np.ndarray, mask: Mask) -> None:
    if x.shape != delta.shape:
        raise DimensionError(f"image {x.shape} and perturbation {delta.shape} differ")
    if x.shape[1:] != mask.shape:
        raise DimensionError(f"mask {mask.shape} does not match image {x.shape[1:]}")


def apply_perturbation(x: np.ndarray, delta: np.ndarray, mask: Mask) -> np.ndarray:
    """Compose ``clip(x + M * delta, 0, 1)``.

    Pixels outside the mask are copied from ``x`` unchanged, bit for bit.
    """
    x = np.asarray(x, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    _check_shapes(x, delta, mask)
    active = np.broadcast_to(mask.data.astype(bool), x.shape)
    out = x.copy()
    out[active] = np.clip(x[active] + delta[active], 0.0, 1.0)
    return out


def clip_passthrough(x: np.ndarray, delta: np.ndarray, mask: Mask) -> np.ndarray:
    """Derivative of :func:`apply_perturbation` w.r.t. ``delta``, element-wise.

    1 inside the mask where the clip is inactive, 0 elsewhere. Values that
    land exactly on 0 or 1 count as inactive.
    """
    raw = x + mask.data * delta
    inside = (raw >= 0.0) & (raw <= 1.0)
    return inside * mask.data


def project_budget(delta: np.ndarray, epsilon: float) -> np.ndarray:
    """Clamp every element onto ``[-epsilon, epsilon]``."""
    if not epsilon >= 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    return np.clip(np.asarray(delta, dtype=np.float64), -epsilon, epsilon)


def splitmix64(seed: int, n: int) -> np.ndarray:
    """First ``n`` outputs of the splitmix64 generator seeded with ``seed``."""
    state = np.uint64(seed % 2**64)
    counter = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = state + counter * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        z = z ^ (z >> np.uint64(31))
    return z


def uniform01(seed: int, n: int) -> np.ndarray:
    """``n`` doubles in [0, 1) built from the top 53 bits of splitmix64."""
    return (splitmix64(seed, n) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def uniform_noise(epsilon: float, shape: tuple[int, ...], seed: int) -> np.ndarray:
    """I.i.d. ``U(-epsilon, epsilon)`` perturbation, reproducible across platforms.

    Elements are generated in C order from one splitmix64 stream.
    """
    if not epsilon >= 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    n = int(np.prod(shape))
    u = uniform01(seed, n)
    return (epsilon * (2.0 * u - 1.0)).reshape(shape)
