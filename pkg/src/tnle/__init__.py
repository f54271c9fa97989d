"""Noise level estimation for color images from T-product covariance spectra."""

from tnle.errors import NumericalError, ParseError
from tnle.model import CoefficientBank, CoefficientSet, GdConfig, TrainingSample
from tnle.patching import TextureSelector
from tnle.pipeline import (
    EstimationParams,
    EstimationReport,
    baseline_min_eig,
    benchmark,
    estimate_noise,
    image_features,
    train_bank,
)
from tnle.stats import NoiseSpec, awgn
from tnle.tensor import Tensor3

__version__ = "0.1.0"
