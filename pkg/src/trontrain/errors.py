"""Exception types raised across the package."""


class TronError(Exception):
    """Base class for all package errors."""


class DimensionError(TronError, ValueError):
    """Array shapes are incompatible."""


class NonFiniteError(TronError, ValueError):
    """An input contains NaN or infinity."""


class EmptyDatasetError(TronError, ValueError):
    """An operation needs at least one sample."""


class HypothesisError(TronError, ValueError):
    """A theorem or lemma precondition is violated.

    Parameters
    ----------
    hypothesis : str
        Human readable statement of the violated condition.
    margin : float
        Signed margin of the condition (negative when violated).
    """

    def __init__(self, hypothesis: str, margin: float = float("nan")):
        self.hypothesis = hypothesis
        self.margin = float(margin)
        super().__init__(f"hypothesis violated: {hypothesis} (margin {self.margin:.6g})")


class AlreadyConverged(TronError):
    """The initial error is already below the requested target."""


class SupportRadiusError(TronError, ValueError):
    """A perturbation exceeds the declared corruption bound."""


class AsymmetryError(TronError, ValueError):
    """A dataset is not closed under negation of its inputs."""


class ConfigError(TronError, ValueError):
    """An experiment configuration is malformed."""
