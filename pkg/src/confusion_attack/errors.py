"""Exception hierarchy shared by every module in the package."""


class ConfusionAttackError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ConfusionAttackError, ValueError):
    """Invalid hyperparameter or configuration value."""


class GeometryError(ConfusionAttackError, ValueError):
    """Mask rectangle does not fit inside the image."""


class DimensionError(ConfusionAttackError, ValueError):
    """Array shapes disagree."""


class StateError(ConfusionAttackError, RuntimeError):
    """Operation called on an object in an unusable state (e.g. empty trace)."""


class ProtocolError(ConfusionAttackError, ValueError):
    """A held-out transfer split cannot be formed from the given models."""


class ClassificationInputError(ConfusionAttackError, ValueError):
    """Classifier needs input that was not supplied (e.g. reference keywords)."""


class UndefinedDenominatorError(ConfusionAttackError, ZeroDivisionError):
    """ECR denominator max(h_clean, h_noise) is zero."""


class AdapterError(ConfusionAttackError, RuntimeError):
    """A surrogate model failed to evaluate."""

    def __init__(self, model_id: str, message: str):
        super().__init__(f"[{model_id}] {message}")
        self.model_id = model_id


class CapabilityError(AdapterError):
    """The adapter cannot provide the requested capability (e.g. gradients)."""


class AttackAborted(ConfusionAttackError, RuntimeError):
    """An attack run stopped early; ``trace`` holds the records gathered so far."""

    def __init__(self, cause: Exception, trace: list):
        super().__init__(f"attack aborted after {len(trace)} iterations: {cause}")
        self.cause = cause
        self.trace = trace
