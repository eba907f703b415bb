"""Baselines, Effective Confusion Ratio, held-out splits and response taxonomies."""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional

import numpy as np

from .core import FullMask, apply_perturbation, make_mask, uniform_noise
from .errors import (
    ClassificationInputError,
    DimensionError,
    ProtocolError,
    UndefinedDenominatorError,
)
from .objective import ObjectiveConfig, model_entropy
from .surrogate import DEFAULT_PROMPT


@dataclass(frozen=True)
class EcrRecord:
    model_id: str
    h_adv: float
    h_clean: float
    h_noise: float
    ecr: float

    @property
    def effective(self) -> bool:
        return self.ecr > 1.0


def compute_ecr(h_adv: float, h_clean: float, h_noise: float) -> float:
    """``h_adv / max(h_clean, h_noise)``.

    Raises:
        UndefinedDenominatorError: both baselines have zero entropy.
        ValueError: an entropy is negative.
    """
    if min(h_adv, h_clean, h_noise) < 0:
        raise ValueError("entropies must be non-negative")
    denom = max(h_clean, h_noise)
    if denom == 0:
        raise UndefinedDenominatorError("max(h_clean, h_noise) is zero")
    return h_adv / denom


def noise_baseline(x_clean: np.ndarray, epsilon: float, seed: int) -> np.ndarray:
    """Clean image plus full-frame ``U(-epsilon, epsilon)`` noise, clipped."""
    mask = make_mask(FullMask(), x_clean.shape[1], x_clean.shape[2])
    return apply_perturbation(x_clean, uniform_noise(epsilon, x_clean.shape, seed), mask)


def evaluate_image(
    models,
    x_clean: np.ndarray,
    x_adv: np.ndarray,
    cfg: ObjectiveConfig,
    seed: int,
    epsilon: float,
    prompt: str = DEFAULT_PROMPT,
) -> list[EcrRecord]:
    """ECR of ``x_adv`` for each model against the clean and noise baselines.

    The noise baseline uses the attack's own ``epsilon`` over the full
    frame, also for patch attacks.
    """
    if np.shape(x_clean) != np.shape(x_adv):
        raise DimensionError(f"clean {np.shape(x_clean)} and adversarial {np.shape(x_adv)} differ")
    x_noise = noise_baseline(np.asarray(x_clean, dtype=np.float64), epsilon, seed)
    records = []
    for m in models:
        h_adv = model_entropy(m, x_adv, prompt, cfg)
        h_clean = model_entropy(m, x_clean, prompt, cfg)
        h_noise = model_entropy(m, x_noise, prompt, cfg)
        records.append(EcrRecord(m.model_id, h_adv, h_clean, h_noise, compute_ecr(h_adv, h_clean, h_noise)))
    return records


def mean_ecr(records: Iterable[EcrRecord]) -> float:
    values = [r.ecr for r in records]
    return float(sum(values) / len(values))


@dataclass(frozen=True)
class TransferSplit:
    train_models: tuple
    heldout_model: object

    def __post_init__(self):
        families = {m.family for m in self.train_models}
        if len(self.train_models) != 2 or len(families) != 1:
            raise ProtocolError("train models must be two models of one family")
        if self.heldout_model.family in families:
            raise ProtocolError("held-out model must come from a different family")

    @property
    def model_ids(self) -> tuple[list[str], str]:
        return [m.model_id for m in self.train_models], self.heldout_model.model_id


def enumerate_transfer_splits(models) -> list[TransferSplit]:
    """Every (same-family pair, other-family held-out) split, in input order."""
    models = list(models)
    splits = []
    for a, b in itertools.combinations(models, 2):
        if a.family != b.family:
            continue
        for h in models:
            if h.family != a.family:
                splits.append(TransferSplit((a, b), h))
    return splits


def make_transfer_split(models) -> TransferSplit:
    """First valid held-out split.

    Raises:
        ProtocolError: no family has two models, or all models share one family.
    """
    splits = enumerate_transfer_splits(models)
    if not splits:
        raise ProtocolError("need >= 2 models in one family and >= 1 model in another")
    return splits[0]


class ConfusionMode(enum.Enum):
    BLINDNESS = "Blindness"
    SUBTLE = "Subtle"
    LANGUAGE_SWITCH = "LanguageSwitch"
    DELUSIONAL = "Delusional"
    COLLAPSE = "Collapse"


class OutcomeLabel(enum.Enum):
    HALLUCINATION = "✓"
    REFUSAL = "△"
    NO_EFFECT = "·"

    @classmethod
    def from_symbol(cls, symbol: str) -> "OutcomeLabel":
        aliases = {"v": "✓", "ok": "✓", "^": "△", ".": "·", "-": "·"}
        return cls(aliases.get(symbol.strip(), symbol.strip()))


@lru_cache(maxsize=None)
def load_phrases(name: str) -> tuple[str, ...]:
    """Lower-cased phrases from ``data/<name>.txt``; blank lines and ``#`` comments skipped."""
    text = resources.files(__package__).joinpath("data", f"{name}.txt").read_text(encoding="utf-8")
    lines = (ln.strip().lower() for ln in text.splitlines())
    return tuple(ln for ln in lines if ln and not ln.startswith("#"))


def _normalize(text: str) -> str:
    return text.replace("’", "'").replace("‘", "'").lower()


def _matches_any(text: str, phrases: Iterable[str]) -> bool:
    norm = _normalize(text)
    return any(p in norm for p in phrases)


def _tokens(text: str) -> list[str]:
    return re.findall(r"\w+", _normalize(text))


def _keyword_hits(text: str, keywords: Iterable[str]) -> int:
    norm = _normalize(text)
    return sum(1 for kw in keywords if re.search(rf"\b{re.escape(kw.lower())}\b", norm))


def has_repetition_loop(tokens: list[str], max_n: int = 4, min_repeats: int = 5) -> bool:
    """True if some n-gram (n <= max_n) occurs ``min_repeats`` times back to back."""
    for n in range(1, max_n + 1):
        for start in range(len(tokens) - n * min_repeats + 1):
            gram = tokens[start : start + n]
            if all(tokens[start + r * n : start + (r + 1) * n] == gram for r in range(1, min_repeats)):
                return True
    return False


def non_latin_fraction(text: str) -> float:
    letters = [ch for ch in text if ch.isalpha()]
    if not letters:
        return 0.0
    return sum(1 for ch in letters if ord(ch) > 0x7F) / len(letters)


def classify_confusion_mode(
    response: str,
    reference_keywords: Optional[Iterable[str]] = None,
    prompt_is_english: bool = True,
) -> ConfusionMode:
    """Assign one confusion mode with a first-match rule cascade.

    Order: Blindness (phrase list), Collapse (repetition loop or
    type-token ratio < 0.2), LanguageSwitch (> 30% non-ASCII letters for
    an English prompt), then Delusional if no reference keyword appears,
    Subtle otherwise.

    Raises:
        ClassificationInputError: the cascade reaches the last rule and
            ``reference_keywords`` is None.
    """
    if not response or not response.strip():
        raise ClassificationInputError("response must be non-empty")
    if _matches_any(response, load_phrases("blindness")):
        return ConfusionMode.BLINDNESS
    tokens = _tokens(response)
    if tokens and (has_repetition_loop(tokens) or len(set(tokens)) / len(tokens) < 0.2):
        return ConfusionMode.COLLAPSE
    if prompt_is_english and non_latin_fraction(response) > 0.3:
        return ConfusionMode.LANGUAGE_SWITCH
    if reference_keywords is None:
        raise ClassificationInputError("Delusional vs Subtle needs reference keywords")
    if _keyword_hits(response, reference_keywords) == 0:
        return ConfusionMode.DELUSIONAL
    return ConfusionMode.SUBTLE


def label_outcome(response: str, reference_keywords: Iterable[str] = ()) -> OutcomeLabel:
    """Label a black-box response as hallucination, refusal or no effect."""
    if not response or not response.strip():
        raise ClassificationInputError("response must be non-empty")
    if _matches_any(response, load_phrases("refusal")):
        return OutcomeLabel.REFUSAL
    if _matches_any(response, load_phrases("noise")) or _keyword_hits(response, reference_keywords) >= 2:
        return OutcomeLabel.NO_EFFECT
    return OutcomeLabel.HALLUCINATION
