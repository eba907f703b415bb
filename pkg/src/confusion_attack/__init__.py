"""Entropy-maximizing adversarial images against ensembles of captioning models."""

from .core import (
    FullMask,
    Mask,
    RectMask,
    apply_perturbation,
    centered_rect,
    make_mask,
    project_budget,
    uniform_noise,
)
from .errors import *  # noqa: F401,F403
from .evaluation import (
    ConfusionMode,
    EcrRecord,
    OutcomeLabel,
    TransferSplit,
    classify_confusion_mode,
    compute_ecr,
    enumerate_transfer_splits,
    evaluate_image,
    label_outcome,
    make_transfer_split,
)
from .objective import (
    ObjectiveConfig,
    ensemble_objective,
    entropy_objective,
    entropy_of_logits,
    model_entropy,
    topk_truncate,
)
from .pgd import AttackConfig, AttackResult, attack, pgd_step, select_best
from .surrogate import SurrogateModel, forward_logits, get_model, input_gradient, register_model
from .toy import ToyCaptioner, ToyModelSpec, clean_toy_image, finite_diff_gradient, toy_model

__version__ = "0.1.0"
