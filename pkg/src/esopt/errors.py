"""Exception hierarchy shared by all esopt modules."""


class EsoptError(ValueError):
    """Base class for rejected input."""


class DimensionMismatchError(EsoptError):
    pass


class AsymmetricMatrixError(EsoptError):
    pass


class DegenerateMatrixError(EsoptError):
    pass


class DegenerateLimitError(EsoptError):
    """Raised when sigma*sqrt(tau) == 0 and the deterministic branch must be used."""


class StabilityError(EsoptError):
    def __init__(self, ratio: float, limit: float = 0.5):
        self.ratio = ratio
        super().__init__(
            f"explicit scheme unstable: sigma^2*dtau/(2*dx^2) = {ratio:.6g} > {limit}"
        )


class UnpriceableStateError(EsoptError):
    """The mapped spot price is not strictly positive."""

    def __init__(self, spot: float, message: str | None = None):
        self.spot = spot
        super().__init__(message or f"mapped spot price {spot!r} is not positive")


class ScenarioError(EsoptError):
    def __init__(self, message: str, step: int | None = None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
