"""
Enumeration classes for Fréchet U-Net.
"""

from enum import Enum


class Metric(str, Enum):
    """Graph (pseudo)distances a Fréchet mean can be taken under."""
    HAMMING = "hamming"
    ADJACENCY_SPECTRAL = "adjacency"
    LAPLACIAN_SPECTRAL = "laplacian"


class FrechetMethod(str, Enum):
    """How a Fréchet mean estimate was obtained."""
    CLOSED_FORM_IER = "closed_form_ier"
    NAIVE_THRESHOLD = "naive_threshold"
    SAMPLE_MEDOID = "sample_medoid"
    EXHAUSTIVE = "exhaustive"


class SpectrumConvention(str, Enum):
    """Sort order of a spectrum vector."""
    ADJACENCY_DESCENDING = "adjacency_descending"
    LAPLACIAN_ASCENDING = "laplacian_ascending"


class Ensemble(str, Enum):
    """Random graph ensembles used for training and testing."""
    IER = "ier"
    SBM = "sbm"
    PA = "pa"

    @property
    def metric(self) -> Metric:
        """The metric best adapted to the ensemble."""
        return {
            Ensemble.IER: Metric.HAMMING,
            Ensemble.SBM: Metric.ADJACENCY_SPECTRAL,
            Ensemble.PA: Metric.LAPLACIAN_SPECTRAL,
        }[self]


class Variant(str, Enum):
    """Model variants, named after their training data."""
    IER = "ier"
    SBM = "sbm"
    PA = "pa"
    GEN = "gen"

    @property
    def label(self) -> str:
        return {
            Variant.IER: "IER-Unet",
            Variant.SBM: "SBM-Unet",
            Variant.PA: "PA-Unet",
            Variant.GEN: "Gen-Unet",
        }[self]

    @property
    def ensembles(self) -> tuple:
        """Training ensembles the variant consumes."""
        if self is Variant.GEN:
            return (Ensemble.IER, Ensemble.SBM, Ensemble.PA)
        return (Ensemble(self.value),)


class LayerKind(int, Enum):
    """Layer kind tags, as written in checkpoint descriptors."""
    CONV3X3_RELU = 1
    CONV1X1_SIGMOID = 2


NAIVE_MODEL = "naive"
NAIVE_LABEL = "Naive"
