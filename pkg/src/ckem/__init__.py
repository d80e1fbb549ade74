"""Momentum-construction toolkit for conformally Kähler Einstein metrics."""

from .params import Case, ModelParams, NEG_INF, POS_INF, gamma_for_case, mu_for_case_IV2, validate

__version__ = "0.1.0"

__all__ = ["Case", "ModelParams", "NEG_INF", "POS_INF", "gamma_for_case", "mu_for_case_IV2",
           "validate", "__version__"]
