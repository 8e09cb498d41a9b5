"""Sparse pseudo-Boolean function learning with a spectral L1 penalty."""
from .hypercube import (Spectrum, all_points, fwht, fwht_in_place, function_to_spectrum,
                        hadamard_matrix, spectrum_to_function)
from .models import LinearModel, MlpModel, PolynomialModel, init_model, parse_model_spec
from .spectral_reg import RegConfig, regularizer_subgradient, regularizer_value
from .trainer import Dataset, TrainConfig, TrainReport, theoretical_lambda, train

__version__ = "0.1.0"

__all__ = [
    "Spectrum", "all_points", "fwht", "fwht_in_place", "function_to_spectrum", "hadamard_matrix",
    "spectrum_to_function", "LinearModel", "MlpModel", "PolynomialModel", "init_model",
    "parse_model_spec", "RegConfig", "regularizer_subgradient", "regularizer_value", "Dataset",
    "TrainConfig", "TrainReport", "theoretical_lambda", "train",
]
