"""Exception types shared across the evaluation engine."""


class EvalError(Exception):
    """Base class for all benchmark-evaluation errors."""


class DimensionMismatch(EvalError):
    """Paired grids (labels / scores / masks) disagree in width or height."""


class NonFiniteScore(EvalError):
    """A score map contains NaN or infinity."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"non-finite score {value!r} at flat pixel index {index}")


class NoPositives(EvalError):
    """The pooled stream contains no ground-truth anomaly pixels."""


class NoNegatives(EvalError):
    """The pooled stream contains no ground-truth not-anomaly pixels."""


class NoGroundTruthComponents(EvalError):
    """The dataset has zero ground-truth anomaly components."""


class TooFewComponents(EvalError):
    """Not enough ground-truth components to form the requested size bins."""


class UnsatisfiableSpec(EvalError):
    """A synthetic scene spec could not be realised (component placement failed)."""


class BadEncoding(EvalError):
    """A label PNG contains a pixel value outside the declared encoding."""

    def __init__(self, value: int, index: int):
        self.value = value
        self.index = index
        super().__init__(f"unexpected label value {value} at flat pixel index {index}")


class UnsupportedFormat(EvalError):
    """An image file is not in the required mode (e.g. RGB where grayscale is needed)."""


class HeaderMismatch(EvalError):
    """A raw score payload does not match its sidecar header dimensions."""


class UnknownImage(EvalError):
    """A submitted file does not correspond to any manifest image id."""


class EmptySubset(EvalError):
    """A tag subset cannot be evaluated (e.g. it contains no anomaly pixels)."""
