"""Exception types shared across the package."""


class FracLatticeError(Exception):
    """Base class for all package-specific errors."""


class OffGridError(FracLatticeError):
    """A time does not coincide with a node of the sampling grid."""


class WindowError(FracLatticeError):
    """A requested shift or evaluation leaves the sampled time window."""


class EmbeddingError(FracLatticeError):
    """Circulant embedding produced a significantly negative eigenvalue."""


class SizeLimitError(FracLatticeError):
    """Input exceeds a hard cost guard (O(n^3) oracle paths)."""


class NonlinearityOverflowError(FracLatticeError):
    """Componentwise nonlinearity produced a non-finite value."""


class BlowUpError(FracLatticeError):
    """Solver state norm exceeded the blow-up guard."""


class InsufficientHorizonError(FracLatticeError):
    """The sampled past window is too short for the requested truncation."""


class DegenerateInputError(FracLatticeError):
    """Inputs coincide where a distinct pair is required."""


class ConfigError(FracLatticeError):
    """Configuration failed validation; carries every violation found."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
