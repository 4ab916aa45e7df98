"""
Exception hierarchy for Fréchet U-Net.

Library code raises these; the CLI is the only place they are caught and turned
into console messages and exit codes.
"""

from typing import Optional


class FrechetUnetError(Exception):
    """Base class for every error raised by the package."""


class GraphError(FrechetUnetError, ValueError):
    """Invalid adjacency matrix, size mismatch or empty sample."""


class SpectrumError(FrechetUnetError, ValueError):
    """Input unsuitable for the symmetric eigensolver."""


class ConvergenceError(SpectrumError):
    """QL iteration did not converge within its iteration cap."""


class EnsembleParameterError(FrechetUnetError, ValueError):
    """Random graph ensemble parameters out of range."""


class ConnectivityTimeout(FrechetUnetError):
    """No connected sample was drawn within the allowed number of attempts."""

    def __init__(self, attempts: int, params: object):
        self.attempts = attempts
        self.params = params
        super().__init__(
            f"no connected graph after {attempts} attempts for {params}; "
            "connected graphs are rare or impossible for these parameters"
        )


class SearchSpaceTooLarge(FrechetUnetError):
    """Exhaustive search requested above the vertex-count cap."""

    def __init__(self, n: int, cap: int):
        self.n = n
        self.cap = cap
        super().__init__(
            f"exhaustive search over graphs on {n} vertices refused: "
            f"2^{n * (n - 1) // 2} candidates, cap is n <= {cap}"
        )


class ShapeError(FrechetUnetError, ValueError):
    """Tensor shape, channel or spatial mismatch."""


class StaleCacheError(FrechetUnetError):
    """Forward cache used with parameters other than the ones that produced it."""


class CheckpointError(FrechetUnetError):
    """Unreadable or inconsistent checkpoint file."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint magic bytes do not match the supported format."""


class TruncatedCheckpointError(CheckpointError):
    """Checkpoint file ended before all declared data was read."""


class ShapeChainError(CheckpointError):
    """Layer descriptors do not chain into the expected architecture."""


class DatasetError(FrechetUnetError):
    """Missing or corrupt dataset directory."""


class MissingCheckpointError(FrechetUnetError):
    """A model checkpoint required for evaluation does not exist."""


class ConfigError(FrechetUnetError, ValueError):
    """Invalid configuration value."""

    def __init__(self, field: str, message: str, value: Optional[object] = None):
        self.field = field
        self.value = value
        detail = f" (got {value!r})" if value is not None else ""
        super().__init__(f"{field}: {message}{detail}")


class ReportError(FrechetUnetError):
    """Missing or unreadable evaluation records."""
